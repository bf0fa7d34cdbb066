"""Tensor-product cubic Hermite interpolants in space and time.

A box with ``n`` axes (space axes plus time) carries ``2**n`` corners, each
holding ``2**n`` degrees of freedom: the value and every mixed first
derivative.  In 2D+time that is 8 x 8 = 64 weights, in 1D+time 4 x 4 = 16.

Corners are ordered lexicographically (first axis most significant).  Within
a corner the DOFs are ordered by derivative count, then axis:
``(value, d0, d1, d2, d01, d02, d12, d012)``.  Derivative DOFs are taken with
respect to the unit-cube coordinates of the box.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import OutOfBox, UnsupportedOrder

# h00, h10, h01, h11 as coefficient rows in powers 0..3; index [corner, deriv]
_H = np.array(
    [
        [[1.0, 0.0, -3.0, 2.0], [0.0, 1.0, -2.0, 1.0]],
        [[0.0, 0.0, 3.0, -2.0], [0.0, 0.0, -1.0, 1.0]],
    ]
)


def _diff_poly(coef: np.ndarray, order: int) -> np.ndarray:
    c = coef.copy()
    for _ in range(order):
        c = c[..., 1:] * np.arange(1, c.shape[-1])
        if c.shape[-1] == 0:
            return np.zeros(coef.shape[:-1] + (1,))
    return c


def hermite_1d(s, order: int = 0) -> np.ndarray:
    """Cubic Hermite basis on [0, 1]; result shape ``s.shape + (2, 2)``."""
    s = np.asarray(s, dtype=float)
    if order > 3:
        return np.zeros(s.shape + (2, 2))
    c = _diff_poly(_H, order)
    powers = s[..., None] ** np.arange(c.shape[-1])
    return np.einsum("...k,cdk->...cd", powers, c)


@lru_cache(maxsize=None)
def deriv_masks(ndim: int) -> tuple[tuple[int, ...], ...]:
    masks = []
    for k in range(ndim + 1):
        for axes in itertools.combinations(range(ndim), k):
            masks.append(tuple(1 if a in axes else 0 for a in range(ndim)))
    return tuple(masks)


@lru_cache(maxsize=None)
def _mask_perm(ndim: int) -> np.ndarray:
    lex = {m: i for i, m in enumerate(itertools.product((0, 1), repeat=ndim))}
    return np.array([lex[m] for m in deriv_masks(ndim)])


def tensor_basis(s, orders) -> np.ndarray:
    """Rows of basis values at unit-cube points ``s`` (npts, ndim).

    ``orders`` gives the derivative order per axis, in unit coordinates.
    """
    s = np.atleast_2d(np.asarray(s, dtype=float))
    ndim = s.shape[1]
    per_axis = [hermite_1d(s[:, d], orders[d]) for d in range(ndim)]
    letters = "abcdefgh"
    corner_l = letters[:ndim]
    mask_l = letters[ndim : 2 * ndim]
    ins = ",".join(f"p{corner_l[d]}{mask_l[d]}" for d in range(ndim))
    out = np.einsum(f"{ins}->p{corner_l}{mask_l}", *per_axis)
    npts = s.shape[0]
    out = out.reshape(npts, 2**ndim, 2**ndim)[:, :, _mask_perm(ndim)]
    return out.reshape(npts, 4**ndim)


@dataclass
class SpaceTimeInterpolant:
    """Hermite representation of a field on one space-time box.

    The spatial box is a cube of side ``length`` anchored at ``origin`` with
    orthonormal edge directions ``axes`` (rows); the time slab is
    ``[t0, t0 + dt]``.
    """

    origin: np.ndarray
    axes: np.ndarray
    length: float
    t0: float
    dt: float
    weights: np.ndarray | None = None
    margin: float = 0.25

    def __post_init__(self):
        self.origin = np.atleast_1d(np.asarray(self.origin, dtype=float))
        self.axes = np.atleast_2d(np.asarray(self.axes, dtype=float))
        if self.weights is None:
            self.weights = np.zeros(self.ndof)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.ndof,):
            raise ValueError(f"expected {self.ndof} weights, got {self.weights.shape}")

    @property
    def space_dim(self) -> int:
        return self.origin.size

    @property
    def ndim(self) -> int:
        return self.space_dim + 1

    @property
    def ndof(self) -> int:
        return 4**self.ndim

    def unit_coords(self, x, t) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, self.space_dim)
        t = np.broadcast_to(np.asarray(t, dtype=float), (x.shape[0],))
        s = (x - self.origin) @ self.axes.T / self.length
        tau = (t - self.t0) / self.dt
        return np.column_stack([s, tau])

    def in_box(self, x, t, margin: float = 0.0) -> np.ndarray:
        u = self.unit_coords(x, t)
        return np.all((u >= -margin - 1e-12) & (u <= 1 + margin + 1e-12), axis=1)

    def _check(self, u):
        if np.any((u < -self.margin - 1e-12) | (u > 1 + self.margin + 1e-12)):
            raise OutOfBox("evaluation point beyond the extrapolation margin")

    def local_rows(self, x, t, orders) -> np.ndarray:
        u = self.unit_coords(x, t)
        self._check(u)
        return tensor_basis(u, orders)

    def rows(self, m, x, t) -> np.ndarray:
        """Basis rows for the physical derivative multi-index ``m``.

        ``m`` lists derivative orders along each physical space axis and
        then time.
        """
        m = tuple(int(k) for k in m)
        if len(m) != self.ndim:
            raise ValueError(f"multi-index needs {self.ndim} entries")
        if any(k > 3 for k in m) or any(k < 0 for k in m):
            raise UnsupportedOrder(f"per-axis derivative order must be in 0..3, got {m}")
        u = self.unit_coords(x, t)
        self._check(u)
        d = self.space_dim
        # d/dx_j = sum_k (axes[k, j] / length) d/ds_k
        factors = []
        for j in range(d):
            factors += [j] * m[j]
        terms: dict[tuple[int, ...], float] = {}
        for choice in itertools.product(range(d), repeat=len(factors)):
            coef = 1.0
            for j, k in zip(factors, choice):
                coef *= self.axes[k, j] / self.length
            if coef == 0.0:
                continue
            key = tuple(choice.count(k) for k in range(d))
            terms[key] = terms.get(key, 0.0) + coef
        if not factors:
            terms[(0,) * d] = 1.0
        tscale = self.dt ** (-m[-1])
        out = np.zeros((u.shape[0], self.ndof))
        for key, coef in terms.items():
            out += coef * tensor_basis(u, key + (m[-1],))
        return out * tscale

    def eval(self, x, t):
        return self.partial((0,) * self.ndim, x, t)

    def partial(self, m, x, t):
        vals = self.rows(m, x, t) @ self.weights
        single = np.size(x) == self.space_dim and np.ndim(t) == 0
        return float(vals[0]) if single else vals

    def with_weights(self, weights) -> SpaceTimeInterpolant:
        return SpaceTimeInterpolant(self.origin, self.axes, self.length, self.t0, self.dt,
                                    np.asarray(weights, dtype=float), self.margin)

    def fit(self, func) -> SpaceTimeInterpolant:
        """Interpolate ``func(x, t)`` from 4 samples per axis.

        Exact for fields that are cubic along every box axis; used as an
        independent encoder in tests.
        """
        nodes = np.array([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0])
        grids = np.meshgrid(*([nodes] * self.ndim), indexing="ij")
        u = np.stack([g.ravel() for g in grids], axis=1)
        A = tensor_basis(u, (0,) * self.ndim)
        x = self.origin + (u[:, :-1] * self.length) @ self.axes
        t = self.t0 + u[:, -1] * self.dt
        w = np.linalg.solve(A, np.asarray(func(x, t), dtype=float))
        return self.with_weights(w)


def eval(interp: SpaceTimeInterpolant, x, t):
    return interp.eval(x, t)


def partial(interp: SpaceTimeInterpolant, m, x, t):
    return interp.partial(m, x, t)
