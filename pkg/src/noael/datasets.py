"""Bundled example bioassays and the optional external tumor dataset."""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .datamodel import DataError, EndpointKind, parse_csv

BRONCH_ENV = "NOAEL_BRONCH_CSV"
BRONCH_SHA256_ENV = "NOAEL_BRONCH_SHA256"


@dataclass(frozen=True)
class DatasetInfo:
    name: str
    endpoint: EndpointKind
    n: int
    direction: str
    method: str
    description: str
    source: str


BUNDLED = {
    "wes": DatasetInfo(
        "wes", EndpointKind.CONTINUOUS, 50, "less", "ctp-pairwise",
        "14-day body weight gain (g), F344 rats, aconiazide 0/100/200/500/750 mg/kg",
        "West & Kodell (2005); transcribed verbatim",
    ),
    "tamh": DatasetInfo(
        "tamh", EndpointKind.CONTINUOUS, 75, "greater", "ctp-ratio",
        "relative kidney weight, feeding study, dose groups 0/1/2/3",
        "Tamhane & Logan (2004); grouped by the Dose factor (19/20/18/18)",
    ),
    "epi": DatasetInfo(
        "epi", EndpointKind.SCORE, 86, "greater", "ctp-nonparametric",
        "epithelial lesion severity scores, formaldehyde 0/2/6/15 ppm",
        "Yanagawa et al. (1997); transcribed verbatim",
    ),
}

BRONCH_INFO = DatasetInfo(
    "bronch", EndpointKind.INCIDENCE, 0, "greater", "ctp-poly3",
    "alveolar/bronchiolar tumors, B6C3F1 mice, vinylcyclohexene diepoxide 0/25/50/100",
    f"Piegorsch & Bailer (1997), R package MCPAN `bronch`; supply as CSV via ${BRONCH_ENV}",
)


def bronch_path() -> Path | None:
    p = os.environ.get(BRONCH_ENV)
    return Path(p) if p and Path(p).is_file() else None


def available() -> list[DatasetInfo]:
    out = list(BUNDLED.values())
    p = bronch_path()
    if p is not None:
        ds = load_bronch(p)
        out.append(DatasetInfo(**{**BRONCH_INFO.__dict__, "n": ds.n_total}))
    return out


def load(name: str):
    """Load a bundled dataset by name (``wes``, ``tamh``, ``epi``, ``bronch``)."""
    name = name.lower()
    if name == "bronch":
        p = bronch_path()
        if p is None:
            raise DataError(
                f"bronch is not bundled; set {BRONCH_ENV} to a CSV with columns dose,time,status"
            )
        return load_bronch(p)
    try:
        info = BUNDLED[name]
    except KeyError:
        raise DataError(f"unknown dataset {name!r}; choose from {sorted(BUNDLED)}") from None
    raw = resources.files("noael").joinpath("data", f"{name}.csv").read_bytes()
    return parse_csv(raw, info.endpoint)


def load_bronch(path, sha256: str | None = None):
    """Load the tumor-incidence data from ``path``, verifying its checksum if given.

    The expected digest may also come from ``$NOAEL_BRONCH_SHA256``.
    """
    raw = Path(path).read_bytes()
    expected = sha256 or os.environ.get(BRONCH_SHA256_ENV)
    if expected:
        digest = hashlib.sha256(raw).hexdigest()
        if digest != expected.lower():
            raise DataError(f"checksum mismatch for {path}: {digest}")
    return parse_csv(raw, EndpointKind.INCIDENCE)


def info(name: str) -> DatasetInfo:
    if name == "bronch":
        return BRONCH_INFO
    return BUNDLED[name]
