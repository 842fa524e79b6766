import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import ndtr

from noael.datamodel import AnimalRecord
from noael.polyk import PolykEstimate, polyk_contrast_test, polyk_estimates, polyk_weights
from tests.conftest import make_incidence


def test_tumor_animal_weight_one():
    w = polyk_weights([AnimalRecord(10, 1), AnimalRecord(100, 0)], 3, 100)
    assert w.tolist() == [1.0, 1.0]


def test_half_time_weight():
    assert polyk_weights([AnimalRecord(50, 0)], 3, 100)[0] == 0.125


def test_bad_tmax():
    with pytest.raises(ValueError):
        polyk_weights([AnimalRecord(5, 0)], 3, 0)


def test_all_survive_crude():
    ds = make_incidence([[(104, 0)] * 7 + [(104, 1)] * 3, [(104, 0)] * 5 + [(104, 1)] * 5])
    est = polyk_estimates(ds)
    assert est[0].n_star == 10 and est[0].p_star == pytest.approx(0.3)


def test_no_tumors():
    ds = make_incidence([[(104, 0), (80, 0), (50, 0)], [(104, 0), (60, 0)]])
    est = polyk_estimates(ds)
    assert all(e.p_star == 0 and e.variance == 0 for e in est)
    o = polyk_contrast_test(est, 1, "greater")
    assert o.p_raw == 0.5


def spreadsheet(animals, t_max, k=3):
    n = len(animals)
    ws = []
    for t, s in animals:
        ws.append(1.0 if s == 1 else (t / t_max) ** k)
    nstar = sum(ws)
    y = sum(s for _, s in animals)
    p = y / nstar
    ss = 0.0
    for (t, s), w in zip(animals, ws):
        ss += (s - p * w) ** 2
    return nstar, p, n / (n - 1) * ss / nstar ** 2


def test_staggered_against_spreadsheet():
    g0 = [(104, 0), (90, 0), (70, 1), (104, 1), (40, 0), (104, 0), (88, 0)]
    g1 = [(104, 1), (60, 0), (95, 1), (104, 0), (30, 0), (81, 1)]
    ds = make_incidence([g0, g1])
    est = polyk_estimates(ds)
    for e, g in zip(est, (g0, g1)):
        nstar, p, v = spreadsheet(g, 104)
        assert e.n_star == pytest.approx(nstar, rel=1e-14)
        assert e.p_star == pytest.approx(p, rel=1e-14)
        assert e.variance == pytest.approx(v, rel=1e-12)
    z = (est[1].p_star - est[0].p_star) / math.sqrt(est[0].variance + est[1].variance)
    assert polyk_contrast_test(est, 1, "greater").p_raw == pytest.approx(ndtr(-z), rel=1e-12)


def _fake(p, v, label):
    return PolykEstimate(label, np.ones(1), 10, 10.0, 0, p, v)


def test_synthetic_z_two():
    est = [_fake(0.1, 0.01, "0"), _fake(0.5, 0.03, "25")]
    o = polyk_contrast_test(est, 1, "greater")
    assert o.statistic == pytest.approx(2.0, abs=1e-12)
    assert o.p_raw == pytest.approx(0.022750131948179, abs=1e-12)


def test_equal_rates():
    est = [_fake(0.3, 0.01, "0"), _fake(0.3, 0.02, "25")]
    assert polyk_contrast_test(est, 1, "greater").p_raw == 0.5


def test_zero_variance_unequal():
    est = [_fake(0.0, 0.0, "0"), _fake(1.0, 0.0, "25")]
    assert polyk_contrast_test(est, 1, "greater").p_raw == 0.0
    assert polyk_contrast_test(est, 1, "less").p_raw == 1.0


group = st.lists(st.tuples(st.floats(1, 104), st.integers(0, 1)), min_size=3, max_size=15)


@settings(max_examples=50, deadline=None)
@given(group)
def test_weights_monotone_in_time(animals):
    times = sorted(t for t, _ in animals)
    w = polyk_weights([AnimalRecord(t, 0) for t in times], 3, 104)
    assert (np.diff(w) >= 0).all() and (w > 0).all() and (w <= 1).all()


@settings(max_examples=50, deadline=None)
@given(group, group, st.floats(0.01, 100))
def test_time_scale_invariance(g0, g1, c):
    if max(t for t, _ in g0 + g1) <= 0:
        return
    a = polyk_estimates(make_incidence([g0, g1]))
    b = polyk_estimates(make_incidence([[(t * c, s) for t, s in g0], [(t * c, s) for t, s in g1]]))
    for x, y in zip(a, b):
        assert x.p_star == pytest.approx(y.p_star, rel=1e-9)
        assert x.variance == pytest.approx(y.variance, rel=1e-9, abs=1e-15)
    for x, y in zip(a, b):
        assert 0 <= x.p_star <= 1 and x.n_star <= x.n
