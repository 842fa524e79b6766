"""Poly-k survival-adjusted tumor incidence estimates and tests."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .datamodel import AnimalRecord, Direction, IncidenceDataset, NumericalError
from .parametric import TestOutcome

__all__ = ["PolykEstimate", "polyk_weights", "polyk_estimates", "polyk_contrast_test"]


@dataclass(frozen=True)
class PolykEstimate:
    label: str
    weights: np.ndarray
    n: int
    n_star: float
    tumors: int
    p_star: float
    variance: float


def polyk_weights(group, k: float = 3.0, t_max: float | None = None) -> np.ndarray:
    """Animal weights: 1 for tumor bearers, ``(time/t_max)**k`` otherwise."""
    group = list(group)
    if t_max is None:
        t_max = max(a.time for a in group)
    if not t_max > 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    t = np.array([a.time for a in group], dtype=float)
    s = np.array([a.status for a in group], dtype=int)
    if (t > t_max * (1 + 1e-12)).any():
        raise ValueError("an animal time exceeds t_max")
    return np.where(s == 1, 1.0, np.minimum(t / t_max, 1.0) ** k)


def _estimate(label: str, animals: list[AnimalRecord], k: float, t_max: float) -> PolykEstimate:
    n = len(animals)
    if n < 2:
        raise NumericalError(f"group {label!r}: poly-k variance needs n >= 2")
    w = polyk_weights(animals, k, t_max)
    y = np.array([a.status for a in animals], dtype=float)
    n_star = float(w.sum())
    p_star = float(y.sum() / n_star)
    # Bieler-Williams ratio-estimator variance:
    #   var(p*) = n/(n-1) * sum_j (y_j - p* w_j)^2 / n*^2
    r = y - p_star * w
    variance = n / (n - 1) * float(r @ r) / n_star**2
    return PolykEstimate(label, w, n, n_star, int(y.sum()), p_star, variance)


def polyk_estimates(ds: IncidenceDataset, k: float = 3.0) -> list[PolykEstimate]:
    """Per-group poly-k estimates; ``t_max`` is the longest time in the study."""
    t_max = ds.study_max_time
    return [_estimate(g.label, list(a), k, t_max) for g, a in zip(ds.groups, ds.animals)]


def polyk_contrast_test(est: list[PolykEstimate], dose_index: int,
                        direction="greater") -> TestOutcome:
    """Z test of the poly-k adjusted rate of one dose group against control."""
    direction = Direction.parse(direction)
    if not 1 <= dose_index < len(est):
        raise ValueError(f"dose_index must be in 1..{len(est) - 1}, got {dose_index}")
    d, c = est[dose_index], est[0]
    label = f"{d.label}-{c.label}"
    diff = d.p_star - c.p_star
    var = d.variance + c.variance
    if not math.isfinite(var):
        raise NumericalError(f"{label}: non-finite variance")
    if var <= 0:
        if diff == 0:
            return TestOutcome(label, 0.0, math.inf, 0.5, direction, 0.0, ("degenerate",))
        p = 0.0 if direction.sign * diff > 0 else 1.0
        return TestOutcome(label, math.copysign(math.inf, diff), math.inf, p, direction,
                           0.0, ("degenerate",))
    z = diff / math.sqrt(var)
    return TestOutcome(label, z, math.inf, float(ndtr(-direction.sign * z)), direction)
