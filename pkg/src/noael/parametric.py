"""One-way cell-means model, sandwich covariance and contrast t-tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .contrasts import ContrastMatrix, RatioContrastPair
from .datamodel import ContinuousDataset, Direction, HCKind, NumericalError
from .mvdist import CorrelationMatrix, QmcConfig, mvt_upper_tail, t_cdf

__all__ = [
    "CellMeansFit",
    "CovarianceEstimate",
    "TestOutcome",
    "ContrastTestResult",
    "fit_cell_means",
    "hc_covariance",
    "contrast_test",
    "pairwise_p",
    "ratio_welch_test",
    "ratio_contrast_test",
    "one_sided_p",
]


@dataclass(frozen=True)
class CellMeansFit:
    means: np.ndarray
    residuals: tuple
    df_resid: int
    group_sizes: np.ndarray
    labels: tuple = ()

    @property
    def n_total(self) -> int:
        return int(self.group_sizes.sum())


@dataclass(frozen=True)
class CovarianceEstimate:
    matrix: np.ndarray
    kind: HCKind


@dataclass(frozen=True)
class TestOutcome:
    label: str
    statistic: float
    df: float
    p_raw: float
    direction: Direction
    p_error_estimate: float = 0.0
    flags: tuple = ()


@dataclass(frozen=True)
class ContrastTestResult:
    outcomes: list
    p_adjusted: np.ndarray
    adjusted_error: np.ndarray
    correlation: np.ndarray
    df: int
    converged: bool = True
    extra: dict = field(default_factory=dict)


def one_sided_p(statistic: float, df: float, direction) -> float:
    """Upper-tail p for ``greater``, lower-tail p for ``less``."""
    direction = Direction.parse(direction)
    return float(t_cdf(-direction.sign * statistic, df))


def fit_cell_means(ds: ContinuousDataset) -> CellMeansFit:
    ys = ds.arrays()
    sizes = np.array([len(y) for y in ys])
    if (sizes < 2).any():
        raise ValueError("every group needs at least 2 observations")
    means = np.array([y.mean() for y in ys])
    resid = tuple(y - m for y, m in zip(ys, means))
    return CellMeansFit(means, resid, int(sizes.sum() - len(ys)), sizes, tuple(ds.labels))


def hc_covariance(fit: CellMeansFit, kind="hc3") -> CovarianceEstimate:
    """Covariance of the group means.

    With one-way cell means every observation has leverage ``1/n_g``, so
    the sandwich collapses to a diagonal with entries
    ``sum(e_i**2 * a_i) / n_g**2``; HC1 uses ``a = N/df_resid``, HC2
    ``a = 1/(1-h)``, HC3 ``a = 1/(1-h)**2``. ``none`` gives the pooled
    OLS variance ``s**2 / n_g``.
    """
    kind = HCKind.parse(kind)
    n = fit.group_sizes.astype(float)
    sse = np.array([float(e @ e) for e in fit.residuals])
    if kind is HCKind.NONE:
        s2 = sse.sum() / fit.df_resid
        var = s2 / n
    else:
        if kind in (HCKind.HC2, HCKind.HC3) and (n == 1).any():
            raise ValueError(f"{kind.value} undefined for groups of size 1")
        h = 1.0 / n
        scale = {
            HCKind.HC0: np.ones_like(n),
            HCKind.HC1: np.full_like(n, fit.n_total / fit.df_resid),
            HCKind.HC2: 1.0 / (1.0 - h),
            HCKind.HC3: 1.0 / (1.0 - h) ** 2,
        }[kind]
        var = sse * scale / n**2
    return CovarianceEstimate(np.diag(var), kind)


def _max_t_adjust(stats: np.ndarray, R: np.ndarray, df: int, qmc: QmcConfig):
    # P(max_i T_i >= t_j) for each observed t_j (single-step max-t)
    m = len(stats)
    corr = CorrelationMatrix(R)
    padj = np.empty(m)
    err = np.empty(m)
    ok = True
    for j, t in enumerate(stats):
        res = mvt_upper_tail(np.full(m, t), corr, df, qmc)
        padj[j] = res.value
        err[j] = res.error_estimate
        ok = ok and res.converged
    return padj, err, ok


def contrast_test(
    fit: CellMeansFit,
    cov: CovarianceEstimate,
    cm: ContrastMatrix,
    direction="greater",
    qmc: QmcConfig | None = None,
) -> ContrastTestResult:
    """Per-contrast t tests plus single-step max-t adjusted p-values.

    The joint null uses a multivariate t with ``df_resid`` degrees of
    freedom and the plug-in correlation of the contrast estimates, also
    when ``cov`` is a sandwich estimate (an approximation).
    """
    direction = Direction.parse(direction)
    C = cm.rows
    if C.shape[1] != len(fit.means):
        raise ValueError(f"contrast width {C.shape[1]} != {len(fit.means)} groups")
    S = C @ cov.matrix @ C.T
    var = np.diag(S).copy()
    if (var <= 0).any():
        raise NumericalError("contrast has zero variance")
    se = np.sqrt(var)
    est = C @ fit.means
    t = est / se
    outcomes = [
        TestOutcome(lab, float(tj), float(fit.df_resid),
                    one_sided_p(tj, fit.df_resid, direction), direction)
        for lab, tj in zip(cm.row_labels, t)
    ]
    raw = np.array([o.p_raw for o in outcomes])
    R = S / np.outer(se, se)
    if len(cm) == 1:
        return ContrastTestResult(outcomes, raw.copy(), np.zeros(1), R, fit.df_resid)
    qmc_p, err, ok = _max_t_adjust(direction.sign * t, R, fit.df_resid, qmc or QmcConfig())
    # the joint tail can never be below its own marginal; enforce it against QMC noise
    padj = np.clip(np.maximum(qmc_p, raw), 0.0, 1.0)
    return ContrastTestResult(outcomes, padj, err, R, fit.df_resid, ok, {"qmc_p": qmc_p})


def pairwise_p(fit: CellMeansFit, cov: CovarianceEstimate, dose_index: int,
               direction="greater") -> TestOutcome:
    """Univariate t test of one dose group against control."""
    k = len(fit.means) - 1
    if not 1 <= dose_index <= k:
        raise ValueError(f"dose_index must be in 1..{k}, got {dose_index}")
    c = np.zeros(k + 1)
    c[0], c[dose_index] = -1.0, 1.0
    var = float(c @ cov.matrix @ c)
    if var <= 0:
        raise NumericalError("contrast has zero variance")
    t = float(c @ fit.means) / math.sqrt(var)
    labels = fit.labels or tuple(str(i) for i in range(k + 1))
    return TestOutcome(f"{labels[dose_index]}-{labels[0]}", t, float(fit.df_resid),
                       one_sided_p(t, fit.df_resid, direction), Direction.parse(direction))


def _welch_parts(ds: ContinuousDataset):
    ys = ds.arrays()
    n = np.array([len(y) for y in ys], dtype=float)
    means = np.array([y.mean() for y in ys])
    s2 = np.array([y.var(ddof=1) for y in ys])
    return means, s2, n


def ratio_welch_test(ds: ContinuousDataset, dose_index: int, margin: float = 1.0,
                     direction="greater") -> TestOutcome:
    """Test ``mu_dose / mu_control`` against ``margin`` under unequal variances.

    Uses ``T = (m_d - margin*m_0) / sqrt(s_d^2/n_d + margin^2 s_0^2/n_0)``
    with Satterthwaite degrees of freedom from the two variance terms.
    """
    if not margin > 0:
        raise ValueError(f"ratio margin must be positive, got {margin}")
    k = ds.k
    if not 1 <= dose_index <= k:
        raise ValueError(f"dose_index must be in 1..{k}, got {dose_index}")
    direction = Direction.parse(direction)
    means, s2, n = _welch_parts(ds)
    vd = s2[dose_index] / n[dose_index]
    v0 = margin**2 * s2[0] / n[0]
    label = f"{ds.labels[dose_index]}/{ds.labels[0]}"
    diff = means[dose_index] - margin * means[0]
    if vd + v0 <= 0:
        raise NumericalError(f"{label}: zero variance in both groups")
    t = diff / math.sqrt(vd + v0)
    df = (vd + v0) ** 2 / (vd**2 / (n[dose_index] - 1) + v0**2 / (n[0] - 1))
    return TestOutcome(label, float(t), float(df), one_sided_p(t, df, direction), direction)


def ratio_contrast_test(ds: ContinuousDataset, pair: RatioContrastPair,
                        direction="greater",
                        qmc: QmcConfig | None = None) -> ContrastTestResult:
    """Simultaneous ratio-to-control tests under variance heterogeneity.

    Each row is a Welch-type test of ``num @ mu - margin * den @ mu``; the
    joint null is a multivariate t with plug-in correlation and the
    smallest per-row Satterthwaite df, rounded down.
    """
    direction = Direction.parse(direction)
    means, s2, n = _welch_parts(ds)
    if pair.numerator.shape[1] != len(means):
        raise ValueError("ratio contrast width does not match the group count")
    L = pair.numerator - pair.margin * pair.denominator
    D = np.diag(s2 / n)
    S = L @ D @ L.T
    var = np.diag(S).copy()
    if (var <= 0).any():
        raise NumericalError("ratio contrast has zero variance")
    se = np.sqrt(var)
    t = (L @ means) / se
    comp = (L**2) * (s2 / n)
    dfs = comp.sum(axis=1) ** 2 / ((comp**2) / (n - 1)).sum(axis=1)
    outcomes = [
        TestOutcome(lab, float(tj), float(dj), one_sided_p(tj, dj, direction), direction)
        for lab, tj, dj in zip(pair.row_labels, t, dfs)
    ]
    raw = np.array([o.p_raw for o in outcomes])
    R = S / np.outer(se, se)
    if len(pair) == 1:
        return ContrastTestResult(outcomes, raw.copy(), np.zeros(1), R, int(dfs[0]))
    df = max(1, int(math.floor(dfs.min())))
    qmc_p, err, ok = _max_t_adjust(direction.sign * t, R, df, qmc or QmcConfig())
    padj = np.clip(np.maximum(qmc_p, raw), 0.0, 1.0)
    return ContrastTestResult(outcomes, padj, err, R, df, ok, {"qmc_p": qmc_p})
