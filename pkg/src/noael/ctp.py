"""Closed testing under order restriction and the NOAEL decision.

Under a monotone dose-response every intersection hypothesis containing
``H_0j`` (dose j vs control) also contains ``H_0k`` for every ``k > j``.
Testing each intersection by its highest-dose pairwise test therefore gives
the adjusted p-value of dose j as the maximum raw p over doses ``j..k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .contrasts import dunnett_matrix, pad_subset, williams_matrix
from .datamodel import (
    AnalysisConfig,
    DataError,
    Direction,
    EndpointKind,
)
from .mvdist import QmcConfig
from .nonparametric import bm_test
from .parametric import (
    CellMeansFit,
    CovarianceEstimate,
    contrast_test,
    fit_cell_means,
    hc_covariance,
    pairwise_p,
    ratio_welch_test,
)
from .polyk import polyk_contrast_test, polyk_estimates

__all__ = [
    "NONE_BELOW_LOWEST",
    "TOP_DOSE_SAFE",
    "METHODS",
    "Comparison",
    "ClosureResult",
    "NoaelDecision",
    "ctp_adjust",
    "estimate_noael",
    "ctp_williams",
    "run_analysis",
]

NONE_BELOW_LOWEST = "NONE_BELOW_LOWEST"
TOP_DOSE_SAFE = "TOP_DOSE_SAFE"
TOP_DOSE_CAVEAT = (
    "no dose is significant; the top dose is reported as NOAEL but this only "
    "reflects the doses tested, not an absence of effect above them"
)

METHODS = {
    "ctp-pairwise": (EndpointKind.CONTINUOUS,),
    "dunnett": (EndpointKind.CONTINUOUS,),
    "ctp-williams": (EndpointKind.CONTINUOUS,),
    "ctp-ratio": (EndpointKind.CONTINUOUS,),
    "ctp-nonparametric": (EndpointKind.SCORE,),
    "ctp-poly3": (EndpointKind.INCIDENCE,),
}


@dataclass(frozen=True)
class Comparison:
    label: str
    dose_label: str
    raw_p: float
    adjusted_p: float
    provenance: tuple
    max_from: str = ""
    statistic: float = math.nan
    df: float = math.nan
    p_error_estimate: float = 0.0
    flags: tuple = ()


@dataclass(frozen=True)
class ClosureResult:
    comparisons: list
    method: str
    alpha: float
    direction: Direction
    warnings: list = field(default_factory=list)

    @property
    def raw(self) -> np.ndarray:
        return np.array([c.raw_p for c in self.comparisons])

    @property
    def adjusted(self) -> np.ndarray:
        return np.array([c.adjusted_p for c in self.comparisons])


@dataclass(frozen=True)
class NoaelDecision:
    noael_label: str
    med_label: str | None
    alpha: float
    direction: Direction | None = None
    warning: str | None = None

    @property
    def noael_is_dose(self) -> bool:
        return self.noael_label not in (NONE_BELOW_LOWEST, TOP_DOSE_SAFE)


def ctp_adjust(raw_p: Sequence[float]) -> np.ndarray:
    """Closure-adjusted p-values: ``adjusted[i] = max(raw[i:])``.

    Raw p-values must be ordered by ascending dose.
    """
    p = np.asarray(raw_p, dtype=float).ravel()
    if p.size == 0:
        raise ValueError("no p-values to adjust")
    if np.isnan(p).any() or (p < 0).any() or (p > 1).any():
        raise ValueError("p-values must lie in [0, 1]")
    return np.minimum(np.maximum.accumulate(p[::-1])[::-1], 1.0)


def _argmax_suffix(p: np.ndarray) -> list[int]:
    out = []
    for i in range(len(p)):
        tail = p[i:]
        # on ties the highest dose fed the maximum
        out.append(i + int(len(tail) - 1 - np.argmax(tail[::-1])))
    return out


def estimate_noael(adjusted: Sequence[float], dose_labels: Sequence[str], alpha: float = 0.05,
                   direction=None, control_label: str = "0") -> NoaelDecision:
    """NOAEL as the dose just below the minimum effective dose.

    ``adjusted`` must be nonincreasing in dose. A p-value equal to ``alpha``
    is not significant.
    """
    p = np.asarray(adjusted, dtype=float).ravel()
    labels = list(dose_labels)
    if len(labels) != len(p) or len(p) == 0:
        raise ValueError("need one label per adjusted p-value")
    if (np.diff(p) > 0).any():
        raise ValueError("adjusted p-values must be nonincreasing in dose")
    direction = Direction.parse(direction) if direction is not None else None
    sig = p < alpha
    if not sig.any():
        return NoaelDecision(TOP_DOSE_SAFE, None, alpha, direction, TOP_DOSE_CAVEAT)
    med = int(np.argmax(sig))
    if med == 0:
        return NoaelDecision(NONE_BELOW_LOWEST, labels[0], alpha, direction,
                             f"lowest dose is significant; no NOAEL above control {control_label}")
    return NoaelDecision(labels[med - 1], labels[med], alpha, direction)


def _closure(outcomes, labels, method, config, errors=None) -> ClosureResult:
    raw = np.array([o.p_raw for o in outcomes])
    adj = ctp_adjust(raw)
    src = _argmax_suffix(raw)
    errors = errors if errors is not None else [o.p_error_estimate for o in outcomes]
    comps = []
    for i, o in enumerate(outcomes):
        comps.append(Comparison(
            o.label, labels[i + 1], float(raw[i]), float(adj[i]),
            tuple(x.label for x in outcomes[i:]), outcomes[src[i]].label,
            float(o.statistic), float(o.df), float(max(errors[i:])), tuple(o.flags),
        ))
    warnings = []
    if (np.diff(raw) > 0).any():
        warnings.append("raw p-values are not monotone in dose; closure takes the maximum")
    return ClosureResult(comps, method, config.alpha, config.direction, warnings)


def ctp_williams(fit: CellMeansFit, cov: CovarianceEstimate, group_sizes,
                 direction="greater", qmc: QmcConfig | None = None,
                 labels: Sequence[str] | None = None, alpha: float = 0.05) -> ClosureResult:
    """Closure over subset Williams tests.

    The intersection of doses ``1..j`` is tested by the max-t Williams test
    on groups ``0..j``; its p-value is the smallest single-step adjusted p
    among those Williams contrasts. For ``j = 1`` that is the pairwise test.
    """
    direction = Direction.parse(direction)
    sizes = np.asarray(group_sizes)
    k = len(sizes) - 1
    labels = list(labels) if labels is not None else [str(i) for i in range(k + 1)]
    qmc = qmc or QmcConfig()
    subset_p, subset_err, subset_lab, stats = [], [], [], []
    for j in range(1, k + 1):
        if j == 1:
            o = pairwise_p(fit, cov, 1, direction)
            subset_p.append(o.p_raw)
            subset_err.append(0.0)
            stats.append((o.statistic, o.df))
        else:
            cm = pad_subset(williams_matrix(sizes[: j + 1], labels[: j + 1]), k + 1)
            res = contrast_test(fit, cov, cm, direction, qmc)
            best = int(np.argmin(res.p_adjusted))
            subset_p.append(float(res.p_adjusted[best]))
            subset_err.append(float(res.adjusted_error[best]))
            stats.append((res.outcomes[best].statistic, res.outcomes[best].df))
        subset_lab.append(f"W({','.join(labels[: j + 1])})")
    raw = np.array(subset_p)
    adj = ctp_adjust(raw)
    src = _argmax_suffix(raw)
    comps = []
    for i in range(k):
        comps.append(Comparison(
            f"{labels[i + 1]}-{labels[0]}", labels[i + 1], float(raw[i]), float(adj[i]),
            tuple(subset_lab[i:]), subset_lab[src[i]], float(stats[i][0]), float(stats[i][1]),
            float(max(subset_err[i:])),
        ))
    return ClosureResult(comps, "ctp-williams", alpha, direction)


@dataclass(frozen=True)
class AnalysisResult:
    closure: ClosureResult
    decision: NoaelDecision
    report: object


def _check_method(ds, method: str):
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(METHODS)}")
    kind = ds.kind
    if kind not in METHODS[method]:
        raise DataError(f"method {method!r} cannot analyse a {kind.value} endpoint")


def run_analysis(ds, config: AnalysisConfig, dataset_id: str = "input") -> AnalysisResult:
    """Leaf tests per dose, closure adjustment and NOAEL decision."""
    from .report import build_report

    method = config.method
    _check_method(ds, method)
    direction = config.direction
    labels = ds.labels
    k = ds.k
    qmc = QmcConfig(error_target=config.qmc_error_target, seed=config.qmc_seed,
                    max_points=config.qmc_max_points)
    warnings = []

    if method in ("ctp-pairwise", "dunnett", "ctp-williams"):
        fit = fit_cell_means(ds)
        cov = hc_covariance(fit, config.hc_kind)
        if method == "ctp-pairwise":
            outcomes = [pairwise_p(fit, cov, j, direction) for j in range(1, k + 1)]
            closure = _closure(outcomes, labels, method, config)
        elif method == "ctp-williams":
            closure = ctp_williams(fit, cov, fit.group_sizes, direction, qmc, labels, config.alpha)
        else:
            res = contrast_test(fit, cov, dunnett_matrix(fit.group_sizes, labels), direction, qmc)
            comps = [
                Comparison(o.label, labels[i + 1], o.p_raw, float(res.p_adjusted[i]),
                           tuple(x.label for x in res.outcomes), o.label, o.statistic, o.df,
                           float(res.adjusted_error[i]))
                for i, o in enumerate(res.outcomes)
            ]
            if not res.converged:
                warnings.append("QMC error target not reached within the point budget")
            closure = ClosureResult(comps, method, config.alpha, direction)
    elif method == "ctp-ratio":
        outcomes = [ratio_welch_test(ds, j, config.margin, direction) for j in range(1, k + 1)]
        closure = _closure(outcomes, labels, method, config)
    elif method == "ctp-nonparametric":
        arrs = ds.arrays()
        outcomes = [
            bm_test(arrs[0], arrs[j], direction, config.bm_scale, f"{labels[j]}-{labels[0]}")
            for j in range(1, k + 1)
        ]
        closure = _closure(outcomes, labels, method, config)
    else:
        est = polyk_estimates(ds, config.poly_k)
        outcomes = [polyk_contrast_test(est, j, direction) for j in range(1, k + 1)]
        closure = _closure(outcomes, labels, method, config)

    closure.warnings.extend(warnings)
    adjusted = closure.adjusted
    if method == "dunnett":
        # single-step p's need not be monotone; the MED rule still requires
        # every higher dose to be significant
        adjusted = ctp_adjust(adjusted)
    decision = estimate_noael(adjusted, labels[1:], config.alpha, direction, labels[0])
    report = build_report(ds, config, closure, decision, dataset_id)
    return AnalysisResult(closure, decision, report)
