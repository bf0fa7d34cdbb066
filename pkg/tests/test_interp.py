import itertools
import math

import numpy as np
import pytest

from cfm.errors import OutOfBox, UnsupportedOrder
from cfm.interp import SpaceTimeInterpolant, deriv_masks, eval, partial, tensor_basis


def unit_box(space_dim):
    return SpaceTimeInterpolant(np.zeros(space_dim), np.eye(space_dim), 1.0, 0.0, 1.0)


def corners(ndim):
    return np.array(list(itertools.product((0.0, 1.0), repeat=ndim)))


@pytest.mark.parametrize("space_dim", [1, 2])
def test_dof_count(space_dim):
    assert unit_box(space_dim).ndof == (16, 64)[space_dim - 1]


@pytest.mark.parametrize("ndim", [2, 3])
def test_corner_value_cardinality(ndim):
    c = corners(ndim)
    values = tensor_basis(c, (0,) * ndim)
    # value DOF of corner j sits at index j * 2**ndim
    for j in range(c.shape[0]):
        col = values[:, j * 2**ndim]
        expected = np.zeros(c.shape[0])
        expected[j] = 1.0
        np.testing.assert_allclose(col, expected, atol=1e-15)


def test_time_derivative_of_value_dof_vanishes_at_corner():
    c = corners(3)
    d_t = tensor_basis(c, (0, 0, 1))
    assert np.all(np.abs(d_t[:, ::8]) < 1e-15)


def test_linear_reproduction():
    box = SpaceTimeInterpolant(np.array([0.2, -0.1]), np.eye(2), 0.3, 0.5, 0.1)
    f = lambda x, t: x[..., 0] + 2 * x[..., 1] - t
    fit = box.fit(f)
    rng = np.random.default_rng(0)
    x = box.origin + 0.3 * rng.random((50, 2))
    t = 0.5 + 0.1 * rng.random(50)
    np.testing.assert_allclose(fit.eval(x, t), f(x, t), atol=1e-13)


def test_cubic_product_reproduced():
    box = unit_box(1)
    f = lambda x, t: x[..., 0] ** 3 * t**3
    fit = box.fit(f)
    rng = np.random.default_rng(1)
    x, t = rng.random((100, 1)), rng.random(100)
    np.testing.assert_allclose(fit.eval(x, t), f(x, t), atol=1e-13)
    # d_xx (x^3 t^3) = 6 x t^3 ; compare with finite differences of eval
    h = 1e-5
    x0, t0 = np.array([0.5]), 1.0
    fd = (fit.eval(x0 + h, t0) - 2 * fit.eval(x0, t0) + fit.eval(x0 - h, t0)) / h**2
    assert partial(fit, (2, 0), x0, t0) == pytest.approx(3.0, rel=1e-12)
    assert fd == pytest.approx(3.0, rel=1e-6)


def test_third_time_derivative_constant():
    rng = np.random.default_rng(2)
    f = unit_box(2).with_weights(rng.normal(size=64))
    x = np.array([0.3, 0.6])
    vals = [partial(f, (0, 0, 3), x, t) for t in (0.0, 0.4, 1.0)]
    assert max(vals) - min(vals) < 1e-10 * max(1.0, abs(vals[0]))


def test_rotated_frame_matches_pulled_back_function():
    # circle region frame at the east point: normal (1, 0), tangent (0, 1)
    n, t = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    axes = np.array([(n + t) / math.sqrt(2), (t - n) / math.sqrt(2)])
    L = 0.05
    p0 = np.array([0.75, 0.5])
    origin = p0 - 0.5 * L * axes.sum(axis=0)
    box = SpaceTimeInterpolant(origin, axes, L, 0.0, 0.01)
    f = lambda x, tt: (x[..., 0] - 0.7) * (x[..., 1] - 0.4) * tt + (x[..., 0] - 0.7) ** 2
    fit = box.fit(f)
    rng = np.random.default_rng(3)
    s = rng.random((40, 2))
    x = origin + (s * L) @ axes
    tt = 0.01 * rng.random(40)
    np.testing.assert_allclose(fit.eval(x, tt), f(x, tt), atol=1e-14)
    # physical gradient chain-ruled through the rotation
    gx = (x[:, 1] - 0.4) * tt + 2 * (x[:, 0] - 0.7)
    np.testing.assert_allclose(fit.partial((1, 0, 0), x, tt), gx, atol=1e-11)


def test_out_of_box_and_unsupported_order():
    f = unit_box(1)
    with pytest.raises(OutOfBox):
        f.eval(np.array([2.0]), 0.5)
    f.eval(np.array([1.2]), 0.5)  # inside the extrapolation margin
    with pytest.raises(UnsupportedOrder):
        f.partial((4, 0), np.array([0.5]), 0.5)


def test_module_level_eval_matches_method():
    rng = np.random.default_rng(4)
    f = unit_box(1).with_weights(rng.normal(size=16))
    x = np.array([0.25])
    assert eval(f, x, 0.75) == f.eval(x, 0.75)


def test_mask_order():
    assert deriv_masks(3)[:4] == ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))
    assert deriv_masks(3)[-1] == (1, 1, 1)
