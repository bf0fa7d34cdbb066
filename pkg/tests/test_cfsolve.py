import math

import numpy as np
import pytest

from cfm.cfsolve import (
    DIRICHLET,
    NEUMANN,
    VOLUME,
    CFSystem,
    assemble,
    diagnostics,
    gauss_rule,
    quadrature_rows,
    residual,
    sample_data,
    solve,
)
from cfm.errors import IllConditioned
from cfm.grid import Grid, classify_nodes
from cfm.problems import Branch, ProblemSpec, get_problem
from cfm.regions import build_tiling

from helpers import PolynomialProblem, region_for


def test_gauss_rule_exactness():
    rule = gauss_rule()
    assert rule.size == 6
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-15)
    assert rule.integrate(lambda x: x**11) == pytest.approx(1.0 / 12.0, abs=1e-14)
    assert rule.integrate(lambda x: np.ones_like(x)) == pytest.approx(1.0, abs=1e-15)


def test_gauss_nodes_are_legendre_roots():
    # Newton iteration on P6 from Chebyshev-like starting guesses
    p6 = np.polynomial.legendre.Legendre.basis(6)
    dp6 = p6.deriv()
    roots = []
    for k in range(6):
        x = math.cos(math.pi * (k + 0.75) / 6.5)
        for _ in range(50):
            x -= p6(x) / dp6(x)
        roots.append(x)
    roots = np.sort(roots)
    weights = 2.0 / ((1 - roots**2) * dp6(roots) ** 2)
    rule = gauss_rule()
    np.testing.assert_allclose(rule.nodes, 0.5 * (roots + 1), atol=1e-14)
    np.testing.assert_allclose(rule.weights, 0.5 * weights, atol=1e-14)


def test_homogeneous_data_gives_zero():
    prob = get_problem("circle")
    zero = ProblemSpec("zero", 2, prob.c, prob.curve, Branch(), Branch(), prob.lower, prob.upper, 1.0)
    region = region_for(zero, 40, 0)
    system = assemble(region, zero)
    assert np.all(system.b == 0.0)
    w = solve(system)
    assert np.all(w == 0.0)
    assert residual(system, w) == 0.0


def test_identity_system():
    b = np.arange(16.0)
    assert solve(CFSystem(np.eye(16), b, 0.0)) == pytest.approx(b)


def test_ill_conditioned_system_raises():
    # Hilbert matrix: diagonal equilibration cannot rescue it
    i = np.arange(16)
    M = 1.0 / (i[:, None] + i[None, :] + 1.0)
    with pytest.raises(IllConditioned):
        solve(CFSystem(M, np.ones(16), 0.0), region_id=(3,))


@pytest.mark.parametrize("dim", [1, 2])
def test_polynomial_recovery(dim):
    prob = PolynomialProblem(dim)
    region = region_for(prob, 50, 0, t0=0.2, dt=0.02)
    system = assemble(region, prob)
    w = solve(system)
    w_star = region.interpolant().fit(prob.D).weights
    assert np.linalg.norm(w - w_star) <= 1e-10 * np.linalg.norm(w_star)
    assert residual(system, w) < 1e-18 * max(1.0, system.const)


def test_line1d_interface_data():
    prob = get_problem("line1d")
    x = np.array([[0.3]])
    assert prob.alpha(x, 0.0)[0] == pytest.approx(math.sin(0.6 * math.pi))
    assert prob.beta(x, np.array([[1.0]]), 0.0)[0] == pytest.approx(2 * math.pi * math.cos(0.6 * math.pi))
    # the region at 0.3 feeds exactly these values to its interface rows
    region = region_for(prob, 100, 0, t0=0.0, dt=0.01)
    rows = quadrature_rows(region, prob.curve, prob.c)
    g = sample_data(prob, rows.kind, rows.x, rows.normal, rows.tau, region.t0, region.dt)
    t = region.t0 + rows.tau * region.dt
    m = rows.kind == DIRICHLET
    np.testing.assert_allclose(g[m], math.sin(0.6 * math.pi) * np.cos(2 * math.pi * t[m]), atol=1e-14)
    m = rows.kind == NEUMANN
    np.testing.assert_allclose(g[m], 2 * math.pi * math.cos(0.6 * math.pi) * np.cos(2 * math.pi * t[m]),
                               atol=1e-13)


def _direct_functional(region, prob, interp, c1=1.0, c2=1.0):
    """J_p by evaluating the interpolant's derivatives at a fresh 7-point rule."""
    x, wq = np.polynomial.legendre.leggauss(7)
    s, wq = 0.5 * (x + 1), 0.5 * wq
    L, dt, t0 = region.length, region.dt, region.t0
    X = region.origin + s[:, None] * L * region.axes[0]
    vol = 0.0
    for xi, wx in zip(X, wq):
        for tj, wt in zip(s, wq):
            t = t0 + tj * dt
            r = (interp.partial((2, 0), xi, t) - interp.partial((0, 2), xi, t) / prob.c**2
                 - prob.f_d(xi[None], t)[0])
            vol += wx * wt * r * r
    vol *= L * dt * L**3
    x0 = region.p0
    n = region.normal
    dir_ = neu = 0.0
    for tj, wt in zip(s, wq):
        t = t0 + tj * dt
        dir_ += wt * (interp.eval(x0, t) - prob.alpha(x0[None], t)[0]) ** 2
        neu += wt * (n[0] * interp.partial((1, 0), x0, t) - prob.beta(x0[None], n[None], t)[0]) ** 2
    return vol + c1 * dir_ * dt + c2 * L**2 * neu * dt


def test_residual_matches_independent_quadrature():
    prob = get_problem("line1d")
    region = region_for(prob, 50, 0, t0=0.13, dt=0.02)
    system = assemble(region, prob, c1=2.0, c2=0.5)
    rng = np.random.default_rng(5)
    w = rng.normal(size=16)
    direct = _direct_functional(region, prob, region.interpolant(w), c1=2.0, c2=0.5)
    assert residual(system, w) == pytest.approx(direct, rel=1e-9)


def test_minimum_is_nonnegative():
    prob = get_problem("star")
    region = region_for(prob, 50, 3)
    system = assemble(region, prob)
    assert residual(system, solve(system)) >= -1e-15


def test_terms_scale_alike_under_refinement():
    prob = get_problem("line1d")
    terms = []
    for n in (50, 100, 200):
        region = region_for(prob, n, 0, t0=0.1, dt=1.0 / n)
        rows = quadrature_rows(region, prob.curve, prob.c)
        g = sample_data(prob, rows.kind, rows.x, rows.normal, rows.tau, region.t0, region.dt)
        # exact D projected onto the interpolant space
        w = region.interpolant().fit(lambda x, t: prob.correction.value(x, t)).weights
        r = rows.A @ w - g
        terms.append([np.sum(rows.w[rows.kind == k] * r[rows.kind == k] ** 2)
                      for k in (VOLUME, DIRICHLET, NEUMANN)])
    terms = np.array(terms)
    ratios = terms[:-1] / terms[1:]
    for row in ratios:
        assert row.max() / row.min() <= 10.0


def test_m_symmetric_and_positive_definite_on_circle_tiling():
    prob = get_problem("circle")
    g = Grid(2, 50, prob.lower, prob.upper)
    sm = classify_nodes(g, prob.curve)
    tiling = build_tiling(sm, prob.curve, g, 4.0, 0.0, 0.02)
    for region in tiling.regions[::7]:
        M = assemble(region, prob).M
        assert np.max(np.abs(M - M.T)) < 1e-12 * np.max(np.abs(M))
        d = 1.0 / np.sqrt(np.diag(M))
        assert np.linalg.eigvalsh(M * d[:, None] * d[None, :]).min() > 0.0


def test_diagnostics_fields():
    prob = get_problem("circle")
    system = assemble(region_for(prob, 50, 0), prob)
    d = diagnostics(system, solve(system))
    assert set(d) == {"node", "cond", "J_min", "w_norm"}
    assert d["cond"] < 1e14 and d["J_min"] >= -1e-15
