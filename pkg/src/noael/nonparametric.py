"""Relative effects and Brunner-Munzel-type two-sample tests for scores."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .datamodel import Direction
from .mvdist import t_cdf
from .parametric import TestOutcome

__all__ = ["RelativeEffectEstimate", "relative_effect", "bm_test"]


@dataclass(frozen=True)
class RelativeEffectEstimate:
    """``p_hat`` estimates P(X_control < X_dose) + P(X_control = X_dose)/2."""

    p_hat: float
    variance: float
    n0: int
    n1: int
    df: float
    flags: tuple = ()


def relative_effect(control, dose) -> RelativeEffectEstimate:
    """Mid-rank estimate of the relative effect with its BM variance and df.

    Parameters
    ----------
    control, dose : array_like
        The two samples; ties are handled by mid-ranks.
    """
    x = np.asarray(control, dtype=float).ravel()
    y = np.asarray(dose, dtype=float).ravel()
    n0, n1 = len(x), len(y)
    if n0 == 0 or n1 == 0:
        raise ValueError("both samples must be nonempty")
    pooled = rankdata(np.concatenate([x, y]))
    r0, r1 = pooled[:n0], pooled[n0:]
    p_hat = (r1.mean() - (n1 + 1) / 2.0) / n0
    flags = []
    if n0 < 2 or n1 < 2:
        return RelativeEffectEstimate(float(p_hat), math.nan, n0, n1, math.nan, ("small-sample",))
    # placements: pooled rank minus within-sample rank
    z0 = r0 - rankdata(x)
    z1 = r1 - rankdata(y)
    s0 = ((z0 - z0.mean()) ** 2).sum() / (n0 - 1)
    s1 = ((z1 - z1.mean()) ** 2).sum() / (n1 - 1)
    v0 = s0 / (n0 * n1**2)
    v1 = s1 / (n1 * n0**2)
    variance = v0 + v1
    if variance > 0:
        df = variance**2 / (v0**2 / (n0 - 1) + v1**2 / (n1 - 1))
        if df < 1.0:
            df = 1.0
            flags.append("df-clamped")
    else:
        df = math.nan
        flags.append("degenerate")
    return RelativeEffectEstimate(float(p_hat), float(variance), n0, n1, float(df), tuple(flags))


def bm_test(control, dose, direction="greater", scale: str = "identity",
            label: str = "") -> TestOutcome:
    """One-sided Brunner-Munzel test of the dose group against control.

    ``greater`` tests whether the dose group tends to larger values. The
    identity scale refers ``(p_hat - 1/2)/se`` to a t distribution with the
    BM df. The logit scale refers the delta-method statistic
    ``logit(p_hat)/(se/(p_hat(1-p_hat)))`` to the standard normal.

    Zero variance gives a boundary p-value: 0.5 when ``p_hat`` is 1/2 (all
    pooled values tied), otherwise 0 or 1 by the sign of the effect.
    """
    direction = Direction.parse(direction)
    if scale not in ("identity", "logit"):
        raise ValueError(f"unknown scale {scale!r}")
    est = relative_effect(control, dose)
    flags = list(est.flags)
    effect = est.p_hat - 0.5
    if not est.variance > 0:
        if "degenerate" not in flags:
            flags.append("degenerate")
        if effect == 0:
            p = 0.5
        else:
            p = 0.0 if direction.sign * effect > 0 else 1.0
        stat = 0.0 if effect == 0 else math.copysign(math.inf, effect)
        return TestOutcome(label, stat, est.df, p, direction, 0.0, tuple(flags))
    se = math.sqrt(est.variance)
    if scale == "identity":
        stat = effect / se
        df = est.df
    else:
        ph = min(max(est.p_hat, 1e-12), 1 - 1e-12)
        stat = math.log(ph / (1 - ph)) * ph * (1 - ph) / se
        df = math.inf
    p = float(t_cdf(-direction.sign * stat, df))
    return TestOutcome(label, float(stat), float(df), p, direction, 0.0, tuple(flags))
