"""Dose-group datasets, analysis configuration and CSV ingestion."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Union

import numpy as np

__all__ = [
    "DataError",
    "NumericalError",
    "EndpointKind",
    "Direction",
    "HCKind",
    "DoseGroup",
    "AnimalRecord",
    "ContinuousDataset",
    "ScoreDataset",
    "IncidenceDataset",
    "AnalysisConfig",
    "GroupSummary",
    "parse_csv",
    "to_csv",
    "summarize",
]


class DataError(ValueError):
    """Raised for malformed or inconsistent input data."""


class NumericalError(ArithmeticError):
    """Raised when a statistic is undefined for the given data."""


class EndpointKind(str, Enum):
    CONTINUOUS = "continuous"
    SCORE = "score"
    INCIDENCE = "incidence"


class Direction(str, Enum):
    """Which side of control counts as adverse.

    ``GREATER`` means increase-is-adverse (upper-tail tests), ``LESS``
    means decrease-is-adverse (lower-tail tests).
    """

    GREATER = "greater"
    LESS = "less"

    @classmethod
    def parse(cls, value: Union[str, "Direction"]) -> "Direction":
        if isinstance(value, Direction):
            return value
        aliases = {
            "greater": cls.GREATER,
            "increase-is-adverse": cls.GREATER,
            "increase": cls.GREATER,
            "less": cls.LESS,
            "decrease-is-adverse": cls.LESS,
            "decrease": cls.LESS,
        }
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown direction {value!r}") from None

    @property
    def sign(self) -> int:
        return 1 if self is Direction.GREATER else -1


class HCKind(str, Enum):
    NONE = "none"
    HC0 = "hc0"
    HC1 = "hc1"
    HC2 = "hc2"
    HC3 = "hc3"

    @classmethod
    def parse(cls, value: Union[str, "HCKind", None]) -> "HCKind":
        if value is None:
            return cls.NONE
        if isinstance(value, HCKind):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True)
class DoseGroup:
    label: str
    dose_value: float
    index: int
    n: int


@dataclass(frozen=True)
class AnimalRecord:
    time: float
    status: int

    def __post_init__(self):
        if not self.time > 0:
            raise DataError(f"animal time must be positive, got {self.time}")
        if self.status not in (0, 1):
            raise DataError(f"tumor status must be 0 or 1, got {self.status}")


def _check_groups(groups, counts):
    if len(groups) < 2:
        raise DataError("need a control and at least one dose group")
    for i, (g, c) in enumerate(zip(groups, counts)):
        if g.index != i:
            raise DataError(f"group {g.label!r} has index {g.index}, expected {i}")
        if g.n != c:
            raise DataError(f"group {g.label!r}: n={g.n} but {c} observations")
        if g.n < 2:
            raise DataError(f"group {g.label!r} has n={g.n}; at least 2 required")
    for a, b in zip(groups, groups[1:]):
        if not b.dose_value > a.dose_value:
            raise DataError(
                f"dose values must strictly increase: {a.label!r} -> {b.label!r}"
            )


@dataclass(frozen=True)
class _GroupedDataset:
    groups: tuple

    @property
    def labels(self) -> list[str]:
        return [g.label for g in self.groups]

    @property
    def group_sizes(self) -> np.ndarray:
        return np.array([g.n for g in self.groups], dtype=int)

    @property
    def k(self) -> int:
        """Number of dose groups excluding control."""
        return len(self.groups) - 1


@dataclass(frozen=True)
class ContinuousDataset(_GroupedDataset):
    observations: tuple = ()
    kind = EndpointKind.CONTINUOUS

    def __post_init__(self):
        obs = tuple(tuple(float(v) for v in o) for o in self.observations)
        object.__setattr__(self, "groups", tuple(self.groups))
        object.__setattr__(self, "observations", obs)
        _check_groups(self.groups, [len(o) for o in obs])
        for o in obs:
            if not all(math.isfinite(v) for v in o):
                raise DataError("responses must be finite")

    def arrays(self) -> list[np.ndarray]:
        return [np.asarray(o, dtype=float) for o in self.observations]

    @property
    def n_total(self) -> int:
        return sum(len(o) for o in self.observations)


@dataclass(frozen=True)
class ScoreDataset(ContinuousDataset):
    kind = EndpointKind.SCORE

    def __post_init__(self):
        obs = []
        for o in self.observations:
            row = []
            for v in o:
                if float(v) != int(v) or int(v) < 0:
                    raise DataError(f"scores must be nonnegative integers, got {v!r}")
                row.append(int(v))
            obs.append(tuple(row))
        object.__setattr__(self, "groups", tuple(self.groups))
        object.__setattr__(self, "observations", tuple(obs))
        _check_groups(self.groups, [len(o) for o in obs])


@dataclass(frozen=True)
class IncidenceDataset(_GroupedDataset):
    animals: tuple = ()
    kind = EndpointKind.INCIDENCE

    def __post_init__(self):
        animals = tuple(tuple(a) for a in self.animals)
        object.__setattr__(self, "groups", tuple(self.groups))
        object.__setattr__(self, "animals", animals)
        _check_groups(self.groups, [len(a) for a in animals])

    @property
    def study_max_time(self) -> float:
        return max(a.time for grp in self.animals for a in grp)

    @property
    def n_total(self) -> int:
        return sum(len(a) for a in self.animals)


DoseResponseDataset = Union[ContinuousDataset, ScoreDataset, IncidenceDataset]


@dataclass(frozen=True)
class AnalysisConfig:
    alpha: float = 0.05
    direction: Direction = Direction.GREATER
    method: str = "ctp-pairwise"
    qmc_seed: int = 20230101
    qmc_error_target: float = 1e-5
    hc_kind: HCKind = HCKind.HC3
    poly_k: float = 3.0
    margin: float = 1.0
    bm_scale: str = "identity"
    qmc_max_points: int = 2**22

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction.parse(self.direction))
        object.__setattr__(self, "hc_kind", HCKind.parse(self.hc_kind))
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.qmc_error_target > 0:
            raise ValueError("qmc_error_target must be positive")
        if not self.poly_k > 0:
            raise ValueError("poly-k exponent must be positive")
        if not self.margin > 0:
            raise ValueError("ratio margin must be positive")
        if self.bm_scale not in ("identity", "logit"):
            raise ValueError(f"unknown rank-test scale {self.bm_scale!r}")


# --------------------------------------------------------------------------
# CSV ingestion

_REQUIRED = {
    EndpointKind.CONTINUOUS: ("dose", "response"),
    EndpointKind.SCORE: ("dose", "response"),
    EndpointKind.INCIDENCE: ("dose", "time", "status"),
}


def _to_float(cell: str, line: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"line {line}: non-numeric {column} {cell!r}") from None
    if not math.isfinite(value):
        raise DataError(f"line {line}: non-finite {column} {cell!r}")
    return value


def _read_text(raw) -> str:
    if isinstance(raw, bytes):
        return raw.decode("utf-8-sig")
    if isinstance(raw, str):
        return raw
    data = raw.read()
    return data.decode("utf-8-sig") if isinstance(data, bytes) else data


def parse_csv(
    raw: Union[bytes, str, IO],
    endpoint_kind: Union[EndpointKind, str],
    control_label: str | None = None,
) -> DoseResponseDataset:
    """Parse a dose-labelled CSV into a dataset of the requested kind.

    Parameters
    ----------
    raw : bytes, str or file object
        UTF-8 CSV text with a header row.
    endpoint_kind : EndpointKind or str
        ``continuous`` / ``score`` need columns ``dose,response``;
        ``incidence`` needs ``dose,time,status``.
    control_label : str, optional
        Dose label that codes the control group when it is not numeric.
        The control then sorts first regardless of the other dose values.

    Returns
    -------
    ContinuousDataset, ScoreDataset or IncidenceDataset
        Groups sorted by ascending dose, control at index 0.

    Raises
    ------
    DataError
        On missing or duplicate columns, non-numeric or missing cells, tied
        dose values, groups with fewer than 2 observations, or an invalid
        tumor status.
    """
    kind = EndpointKind(endpoint_kind)
    text = _read_text(raw)
    reader = csv.reader(io.StringIO(text))
    header = None
    for row in reader:
        if any(c.strip() for c in row):
            header = [c.strip().lower() for c in row]
            break
    if header is None:
        raise DataError("no data rows")
    if len(set(header)) != len(header):
        raise DataError(f"duplicate header column in {header}")
    missing = [c for c in _REQUIRED[kind] if c not in header]
    if missing:
        raise DataError(f"missing column(s): {', '.join(missing)}")
    pos = {c: header.index(c) for c in _REQUIRED[kind]}

    records: dict[str, list] = {}
    values: dict[str, float] = {}
    n_rows = 0
    for row in reader:
        line = reader.line_num
        if not any(c.strip() for c in row):
            continue
        n_rows += 1
        if len(row) < len(header):
            raise DataError(f"line {line}: expected {len(header)} cells, got {len(row)}")
        cells = {c: row[i].strip() for c, i in pos.items()}
        for c, v in cells.items():
            if v == "":
                raise DataError(f"line {line}: missing value in column {c!r}")
        label = cells["dose"]
        if control_label is not None and label == control_label:
            dose_value = -math.inf
        else:
            dose_value = _to_float(label, line, "dose")
            if dose_value < 0:
                raise DataError(f"line {line}: negative dose {label!r}")
        if label not in values:
            values[label] = dose_value
            records[label] = []
        if kind is EndpointKind.INCIDENCE:
            time = _to_float(cells["time"], line, "time")
            status = _to_float(cells["status"], line, "status")
            if status not in (0.0, 1.0):
                raise DataError(f"line {line}: status must be 0 or 1, got {cells['status']!r}")
            if not time > 0:
                raise DataError(f"line {line}: time must be positive, got {cells['time']!r}")
            records[label].append(AnimalRecord(time, int(status)))
        else:
            y = _to_float(cells["response"], line, "response")
            if kind is EndpointKind.SCORE and (y != int(y) or y < 0):
                raise DataError(f"line {line}: score must be a nonnegative integer, got {cells['response']!r}")
            records[label].append(y)
    if n_rows == 0:
        raise DataError("no data rows")
    if control_label is not None and control_label not in values:
        raise DataError(f"control label {control_label!r} not found in dose column")

    order = sorted(values, key=lambda lab: values[lab])
    for a, b in zip(order, order[1:]):
        if values[a] == values[b]:
            raise DataError(f"tied dose values for labels {a!r} and {b!r}")
    groups = []
    for i, lab in enumerate(order):
        dv = 0.0 if values[lab] == -math.inf else values[lab]
        groups.append(DoseGroup(lab, dv, i, len(records[lab])))
    if control_label is not None:
        for g in groups[1:]:
            if not g.dose_value > 0:
                raise DataError("with a control label, all other doses must be positive")
    data = [records[lab] for lab in order]
    if kind is EndpointKind.CONTINUOUS:
        return ContinuousDataset(tuple(groups), tuple(data))
    if kind is EndpointKind.SCORE:
        return ScoreDataset(tuple(groups), tuple(data))
    return IncidenceDataset(tuple(groups), tuple(data))


def to_csv(ds: DoseResponseDataset) -> str:
    """Serialize a dataset back to the CSV layout accepted by :func:`parse_csv`."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    if isinstance(ds, IncidenceDataset):
        w.writerow(["dose", "time", "status"])
        for g, animals in zip(ds.groups, ds.animals):
            for a in animals:
                w.writerow([g.label, repr(a.time), a.status])
    else:
        w.writerow(["dose", "response"])
        for g, obs in zip(ds.groups, ds.observations):
            for y in obs:
                w.writerow([g.label, repr(y)])
    return out.getvalue()


@dataclass(frozen=True)
class GroupSummary:
    label: str
    n: int
    mean: float
    sd: float
    min: float
    max: float
    tumor_proportion: float | None = None
    extra: dict = field(default_factory=dict)


def summarize(ds: DoseResponseDataset) -> list[GroupSummary]:
    """Per-group descriptive summary in dose order.

    For incidence data the mean/sd/min/max describe time on study and
    ``tumor_proportion`` holds the crude tumor rate.
    """
    rows = []
    if isinstance(ds, IncidenceDataset):
        for g, animals in zip(ds.groups, ds.animals):
            t = np.array([a.time for a in animals])
            s = np.array([a.status for a in animals])
            rows.append(GroupSummary(
                g.label, len(animals), float(t.mean()), float(t.std(ddof=1)),
                float(t.min()), float(t.max()), float(s.mean()),
                {"tumors": int(s.sum())},
            ))
        return rows
    for g, y in zip(ds.groups, ds.arrays()):
        sd = float(y.std(ddof=1)) if len(y) > 1 else 0.0
        rows.append(GroupSummary(g.label, len(y), float(y.mean()), sd,
                                 float(y.min()), float(y.max())))
    return rows
