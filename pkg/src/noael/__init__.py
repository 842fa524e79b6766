"""NOAEL estimation by closed testing of dose-vs-control comparisons."""

__version__ = "0.1.0"

from .datamodel import (  # noqa: E402
    AnalysisConfig,
    DataError,
    Direction,
    EndpointKind,
    NumericalError,
    parse_csv,
    summarize,
)
from .ctp import ctp_adjust, estimate_noael, run_analysis  # noqa: E402

__all__ = [
    "AnalysisConfig",
    "DataError",
    "Direction",
    "EndpointKind",
    "NumericalError",
    "parse_csv",
    "summarize",
    "ctp_adjust",
    "estimate_noael",
    "run_analysis",
]
