"""Contrast coefficient builders for comparisons against control."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "ContrastMatrix",
    "RatioContrastPair",
    "dunnett_matrix",
    "williams_matrix",
    "pad_subset",
    "ratio_dunnett",
]


@dataclass(frozen=True)
class ContrastMatrix:
    """Rows of contrast coefficients, one column per dose group."""

    rows: np.ndarray
    row_labels: tuple

    def __post_init__(self):
        C = np.array(self.rows, dtype=float, ndmin=2)
        labels = tuple(self.row_labels)
        if C.ndim != 2 or C.shape[0] == 0:
            raise ValueError("contrast matrix needs at least one row")
        if len(labels) != C.shape[0]:
            raise ValueError("one label per contrast row required")
        tol = 16 * np.finfo(float).eps * C.shape[1] * max(1.0, np.abs(C).max())
        for row, lab in zip(C, labels):
            if abs(row.sum()) > tol:
                raise ValueError(f"contrast {lab!r} does not sum to zero")
            if not (row < 0).any() or not (row > 0).any():
                raise ValueError(f"contrast {lab!r} needs positive and negative entries")
        C.setflags(write=False)
        object.__setattr__(self, "rows", C)
        object.__setattr__(self, "row_labels", labels)

    @property
    def n_groups(self) -> int:
        return self.rows.shape[1]

    def __len__(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True)
class RatioContrastPair:
    """Numerator/denominator weights for ratio-to-control comparisons.

    Each comparison tests ``num @ mu`` against ``margin * (den @ mu)``.
    """

    numerator: np.ndarray
    denominator: np.ndarray
    row_labels: tuple
    margin: float = 1.0

    def __post_init__(self):
        num = np.array(self.numerator, dtype=float, ndmin=2)
        den = np.array(self.denominator, dtype=float, ndmin=2)
        if num.shape != den.shape:
            raise ValueError("numerator and denominator shapes differ")
        if not self.margin > 0:
            raise ValueError(f"ratio margin must be positive, got {self.margin}")
        for a in (num, den):
            if (a < 0).any() or not np.allclose(a.sum(axis=1), 1.0):
                raise ValueError("ratio weights must be nonnegative and sum to 1 per row")
        if ((num > 0) & (den > 0)).any():
            raise ValueError("numerator and denominator must select disjoint groups")
        num.setflags(write=False)
        den.setflags(write=False)
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)
        object.__setattr__(self, "row_labels", tuple(self.row_labels))

    def __len__(self) -> int:
        return self.numerator.shape[0]


def _default_labels(n):
    return [str(i) for i in range(n)]


def _check_sizes(group_sizes) -> np.ndarray:
    n = np.asarray(group_sizes, dtype=float).ravel()
    if len(n) < 2:
        raise ValueError("need a control and at least one dose group")
    if (n <= 0).any():
        raise ValueError("group sizes must be positive")
    return n


def dunnett_matrix(group_sizes, labels: Sequence[str] | None = None) -> ContrastMatrix:
    """Each dose group minus control."""
    n = _check_sizes(group_sizes)
    labels = list(labels) if labels is not None else _default_labels(len(n))
    k = len(n) - 1
    C = np.zeros((k, k + 1))
    C[:, 0] = -1.0
    C[np.arange(k), np.arange(1, k + 1)] = 1.0
    return ContrastMatrix(C, [f"{labels[j]}-{labels[0]}" for j in range(1, k + 1)])


def williams_matrix(group_sizes, labels: Sequence[str] | None = None) -> ContrastMatrix:
    """Control against the size-weighted mean of the top-j dose groups.

    Row ``j`` (1-based) pools the ``j`` highest doses, so row 1 is the
    top-dose pairwise contrast and row ``k`` pools every dose.
    """
    n = _check_sizes(group_sizes)
    labels = list(labels) if labels is not None else _default_labels(len(n))
    k = len(n) - 1
    C = np.zeros((k, k + 1))
    names = []
    for j in range(1, k + 1):
        top = slice(k + 1 - j, k + 1)
        C[j - 1, 0] = -1.0
        C[j - 1, top] = n[top] / n[top].sum()
        pooled = labels[k + 1 - j] if j == 1 else f"{labels[k + 1 - j]}..{labels[k]}"
        names.append(f"{pooled}-{labels[0]}")
    return ContrastMatrix(C, names)


def pad_subset(cm: ContrastMatrix, total_groups: int) -> ContrastMatrix:
    """Append zero columns for dose groups excluded from a subset family."""
    if total_groups < cm.n_groups:
        raise ValueError(f"cannot pad width {cm.n_groups} down to {total_groups}")
    C = np.zeros((len(cm), total_groups))
    C[:, : cm.n_groups] = cm.rows
    return ContrastMatrix(C, cm.row_labels)


def ratio_dunnett(group_sizes, margin: float = 1.0,
                  labels: Sequence[str] | None = None) -> RatioContrastPair:
    """Each dose mean over the control mean."""
    if not margin > 0:
        raise ValueError(f"ratio margin must be positive, got {margin}")
    n = _check_sizes(group_sizes)
    labels = list(labels) if labels is not None else _default_labels(len(n))
    k = len(n) - 1
    num = np.zeros((k, k + 1))
    num[np.arange(k), np.arange(1, k + 1)] = 1.0
    den = np.zeros((k, k + 1))
    den[:, 0] = 1.0
    return RatioContrastPair(num, den, [f"{labels[j]}/{labels[0]}" for j in range(1, k + 1)], margin)
