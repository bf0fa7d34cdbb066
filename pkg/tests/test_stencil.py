import math

import numpy as np
import pytest

from cfm.errors import MissingCorrection
from cfm.grid import Grid, classify_nodes
from cfm.problems import get_problem
from cfm.stencil import TAPS, correction_source, corrected_laplacian_at, laplacian, laplacian_at


def test_taps_sum_to_zero_and_are_symmetric():
    c = TAPS.coefficients(0.1)
    assert abs(c.sum()) < 1e-10
    np.testing.assert_array_equal(c, c[::-1])


def test_constant_is_annihilated():
    g = Grid(2, 12, (0.0, 0.0), (1.0, 1.0))
    u = np.full(g.shape, 7.0)
    assert np.all(laplacian(u, g) == 0.0)
    assert laplacian_at(u, (3, 4), g) == 0.0


def test_quartic_exact_away_from_seam():
    g = Grid(1, 50, (0.0,), (1.0,))
    x = g.axis()
    u = x**4
    for i in range(2, 48):
        assert laplacian_at(u, i, g) == pytest.approx(12 * x[i] ** 2, abs=1e-8)


def test_sine_converges_at_fourth_order():
    errs = []
    for n in (50, 100):
        g = Grid(1, n, (0.0,), (1.0,))
        x = g.axis()
        errs.append(np.max(np.abs(laplacian(np.sin(2 * math.pi * x), g) + 4 * math.pi**2 * np.sin(2 * math.pi * x))))
    assert errs[0] / errs[1] == pytest.approx(16.0, rel=0.02)


def test_whole_field_matches_pointwise():
    g = Grid(2, 9, (0.0, 0.0), (1.0, 1.0))
    u = np.random.default_rng(0).normal(size=g.shape)
    full = laplacian(u, g)
    for node in [(0, 0), (4, 8), (7, 1)]:
        assert full[node] == pytest.approx(laplacian_at(u, node, g), abs=1e-9)


def _line1d(n):
    prob = get_problem("line1d")
    g = Grid(1, n, prob.lower, prob.upper)
    sm = classify_nodes(g, prob.curve)
    return prob, g, sm


def _exact_corrections(prob, g, sm, k, t):
    D = prob.correction
    out = {}
    for p in sm.taps_of(k):
        out[g.unflat(sm.pair_tap[p])] = float(D.value(sm.pair_point[p], t))
    return out


def test_no_opposite_taps_equals_plain():
    prob, g, sm = _line1d(50)
    u = prob.exact(g.coords(), sm.sign, 0.0)
    assert corrected_laplacian_at(u, 5, g, sm, {}) == laplacian_at(u, 5, g)


def test_missing_correction_raises():
    prob, g, sm = _line1d(50)
    u = prob.exact(g.coords(), sm.sign, 0.0)
    k = int(sm.affected[0])
    with pytest.raises(MissingCorrection):
        corrected_laplacian_at(u, g.unflat(k), g, sm, {})


def test_corrected_laplacian_fourth_order_with_exact_d():
    errs, dxs = [], []
    t = 0.1
    for n in (50, 100, 200, 400):
        prob, g, sm = _line1d(n)
        x = g.coords()
        u = prob.exact(x, sm.sign, t)
        err = 0.0
        for k in sm.affected:
            node = g.unflat(k)
            corr = _exact_corrections(prob, g, sm, k, t)
            branch = prob.plus if sm.sign[node] > 0 else prob.minus
            xx = x[node][None, :]
            exact = float(branch.space_deriv(xx, t, (2,))[0])
            err = max(err, abs(corrected_laplacian_at(u, node, g, sm, corr) - exact))
        errs.append(err)
        dxs.append(g.dx)
    order = np.polyfit(np.log(dxs), np.log(errs), 1)[0]
    assert 3.5 <= order <= 4.5


def test_correction_flips_sign_with_node_side():
    prob, g, sm = _line1d(50)
    u = np.zeros(g.shape)
    k = int(sm.affected[0])
    node = g.unflat(k)
    corr = {g.unflat(sm.pair_tap[p]): 1.0 for p in sm.taps_of(k)}
    before = corrected_laplacian_at(u, node, g, sm, corr)
    sm.sign[node] *= -1
    try:
        after = corrected_laplacian_at(u, node, g, sm, corr)
    finally:
        sm.sign[node] *= -1
    assert after == -before and before != 0.0


def test_source_term_independent_of_u():
    prob, g, sm = _line1d(100)
    rng = np.random.default_rng(1)
    vals = rng.normal(size=sm.pair_node.size)
    src = correction_source(vals, sm, g)
    for _ in range(3):
        u = rng.normal(size=g.shape)
        for k in sm.affected:
            node = g.unflat(k)
            corr = {g.unflat(sm.pair_tap[p]): vals[p] for p in sm.taps_of(k)}
            s = corrected_laplacian_at(u, node, g, sm, corr) - laplacian_at(u, node, g)
            assert s == pytest.approx(src[node], rel=1e-12, abs=1e-9)
