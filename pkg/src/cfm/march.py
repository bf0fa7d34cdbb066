"""RK4 marching of ``u_t = v, v_t = c^2 (lap u - f)`` with CFM corrections.

Each RK4 stage applies the corrected Laplacian to a different intermediate
``u``.  The correction seen by a stage must match the truncated Taylor
series that stage implicitly carries, otherwise the scheme drops to second
order.  With ``tau`` the local time of the region slab (so that
``dt**k d^k/dt^k = d^k/dtau^k``) the stage values are

    k1: D
    k2: D + D_tau / 2
    k3: D + D_tau / 2 + D_tautau / 4
    k4: D + D_tau + D_tautau / 2 + D_tautautau / 4

all evaluated at the start of the step.  The naive variant instead samples D
at tau = 0, 1/2, 1/2, 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .cfsolve import COND_LIMIT, QuadratureRule, gauss_rule, least_squares_operator, quadrature_rows
from .errors import IllConditioned, MissingCorrection
from .grid import Grid, SideMap, WaveState
from .interp import SpaceTimeInterpolant, tensor_basis
from .problems import ProblemSpec
from .regions import Tiling
from .stencil import correction_source, laplacian

# rows: stage k1..k4; columns: d^j D / dtau^j at tau = 0, j = 0..3
STAGE_MATRIX = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [1.0, 0.5, 0.0, 0.0],
        [1.0, 0.5, 0.25, 0.0],
        [1.0, 1.0, 0.5, 0.25],
    ]
)
NAIVE_TIMES = np.array([0.0, 0.5, 0.5, 1.0])
RK4_IMAG_BOUND = 2.0 * math.sqrt(2.0)


@dataclass
class StageCorrectionSet:
    k1: float
    k2: float
    k3: float
    k4: float

    def as_array(self) -> np.ndarray:
        return np.array([self.k1, self.k2, self.k3, self.k4])


def stage_corrections(interp: SpaceTimeInterpolant, tap, t0: float, dt: float) -> StageCorrectionSet:
    """Stage-consistent correction values at ``tap`` for the step from ``t0``."""
    nd = interp.ndim
    derivs = np.array(
        [interp.partial((0,) * (nd - 1) + (k,), tap, t0) * dt**k for k in range(4)], dtype=float
    ).reshape(4)
    return StageCorrectionSet(*(STAGE_MATRIX @ derivs))


def naive_stage_corrections(interp: SpaceTimeInterpolant, tap, t0: float, dt: float) -> StageCorrectionSet:
    vals = [float(np.squeeze(interp.eval(tap, t0 + s * dt))) for s in NAIVE_TIMES]
    return StageCorrectionSet(*vals)


class CorrectionOperator:
    """Maps interface data sampled at quadrature points to stage corrections.

    For a static interface the normal-equation matrix of every region only
    depends on geometry, ``dt`` and the penalties, so it is factored once.
    Each step still solves for fresh weights: the data vector is resampled
    at the new slab and pushed through the stored linear map.
    """

    def __init__(self, problem: ProblemSpec, grid: Grid, sidemap: SideMap, tiling: Tiling, dt: float,
                 rule: QuadratureRule | None = None, c1: float = 1.0, c2: float = 1.0,
                 l_c: float | None = None, naive: bool = False, slab: tuple[float, float] = (0.0, 1.0)):
        self.problem = problem
        self.grid = grid
        self.sidemap = sidemap
        self.dt = float(dt)
        self.naive = naive
        self.npairs = sidemap.pair_node.size
        rule = rule or gauss_rule()
        # region time box is [t0 + a dt, t0 + (a + h) dt]; the step starts at tau_s
        a, h = float(slab[0]), float(slab[1])
        if h <= 0 or a > 0 or a + h < 1:
            raise ValueError("time slab must contain the step [t0, t0 + dt]")
        self.slab = (a, h)
        tau_s = -a / h
        tiling = tiling.at_time(a * dt, h * dt)
        self.tiling = tiling
        self.conds = np.zeros(len(tiling))

        missing = np.setdiff1d(sidemap.affected, np.array(list(tiling.by_owner), dtype=int))
        if missing.size:
            raise MissingCorrection(f"no region for affected nodes {missing[:5].tolist()}")

        kinds, xs, normals, taus = [], [], [], []
        rows_i, cols_i, vals = [], [], []
        offset = 0
        for ir, region in enumerate(tiling.regions):
            rs = quadrature_rows(region, problem.curve, problem.c, rule, c1, c2, l_c)
            P, cond = least_squares_operator(rs.A, rs.w)  # (ndof, nq)
            self.conds[ir] = cond
            if not np.isfinite(cond) or cond > COND_LIMIT:
                raise IllConditioned(region.owner, cond)

            pairs = sidemap.taps_of(region.owner_flat)
            taps = sidemap.pair_point[pairs]
            s = region.local(taps)
            nd = grid.dim + 1
            if naive:
                T = np.stack(
                    [tensor_basis(np.column_stack([s, np.full(len(s), tau_s + tt / h)]), (0,) * nd)
                     for tt in NAIVE_TIMES]
                )
            else:
                s0 = np.column_stack([s, np.full(len(s), tau_s)])
                derivs = np.stack([tensor_basis(s0, (0,) * (nd - 1) + (k,)) / h**k for k in range(4)])
                T = np.einsum("sk,kpd->spd", STAGE_MATRIX, derivs)
            K = np.einsum("spd,dq->spq", T, P)  # (4, npairs_r, nq)
            st, pp, qq = np.meshgrid(np.arange(4), pairs, np.arange(rs.size), indexing="ij")
            rows_i.append((st * self.npairs + pp).ravel())
            cols_i.append((qq + offset).ravel())
            vals.append(K.ravel())
            kinds.append(rs.kind)
            xs.append(rs.x)
            normals.append(rs.normal)
            taus.append(rs.tau)
            offset += rs.size

        self.nq = offset
        if tiling.regions:
            self.kind = np.concatenate(kinds)
            self.x = np.concatenate(xs)
            self.normal = np.concatenate(normals)
            self.tau = np.concatenate(taus)
            self._sampler = problem.data_sampler(self.kind, self.x, self.normal, self.tau)
            self.K = scipy.sparse.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows_i), np.concatenate(cols_i))),
                shape=(4 * self.npairs, self.nq),
            )
        else:
            self.K = None

    def data(self, t0: float) -> np.ndarray:
        a, h = self.slab
        return self._sampler(t0 + (a + h * self._sampler.tau_values) * self.dt)

    def stage_values(self, t0: float) -> np.ndarray:
        """Correction value per (stage, pair), shape ``(4, npairs)``."""
        if self.K is None:
            return np.zeros((4, self.npairs))
        return (self.K @ self.data(t0)).reshape(4, self.npairs)


class ExactCorrections:
    """Stage corrections built from the analytic D of a manufactured problem."""

    def __init__(self, problem: ProblemSpec, sidemap: SideMap, dt: float, naive: bool = False):
        self.D = problem.correction
        self.points = sidemap.pair_point
        self.npairs = self.points.shape[0]
        self.dt = float(dt)
        self.naive = naive

    def stage_values(self, t0: float) -> np.ndarray:
        if self.npairs == 0:
            return np.zeros((4, 0))
        if self.naive:
            return np.stack([self.D.value(self.points, t0 + s * self.dt) for s in NAIVE_TIMES])
        derivs = np.stack([self.D.dt(self.points, t0, k) * self.dt**k for k in range(4)])
        return STAGE_MATRIX @ derivs


class NoCorrections:
    def __init__(self, npairs: int = 0):
        self.npairs = npairs

    def stage_values(self, t0: float) -> np.ndarray:
        return np.zeros((4, self.npairs))


class _Forcing:
    """Caches node forcing per time level (stages reuse n + 1/2)."""

    def __init__(self, problem: ProblemSpec, grid: Grid, sidemap: SideMap):
        self._sampler = problem.forcing_sampler(grid.coords(), sidemap.sign)
        self._cache: dict[float, np.ndarray] = {}

    def __call__(self, t: float) -> np.ndarray:
        if t not in self._cache:
            if len(self._cache) > 4:
                self._cache.clear()
            self._cache[t] = self._sampler(t)
        return self._cache[t]


def _rk4(state: WaveState, c: float, grid: Grid, sidemap: SideMap, stage_d: np.ndarray, forcing, dt: float):
    u0, v0, t = state.u, state.v, state.t
    c2 = c * c
    times = (t, t + 0.5 * dt, t + 0.5 * dt, t + dt)
    steps = (0.5 * dt, 0.5 * dt, dt)
    ku, kv = [], []
    u, v = u0, v0
    for s in range(4):
        lap = laplacian(u, grid)
        if stage_d.shape[1]:
            lap = lap + correction_source(stage_d[s], sidemap, grid)
        ku.append(v)
        kv.append(c2 * (lap - forcing(times[s])))
        if s < 3:
            u = u0 + steps[s] * ku[-1]
            v = v0 + steps[s] * kv[-1]
    u1 = u0 + dt / 6.0 * (ku[0] + 2.0 * ku[1] + 2.0 * ku[2] + ku[3])
    v1 = v0 + dt / 6.0 * (kv[0] + 2.0 * kv[1] + 2.0 * kv[2] + kv[3])
    return WaveState(u1, v1, t + dt)


def rk4_step(state: WaveState, problem: ProblemSpec, grid: Grid, sidemap: SideMap, corrections,
             dt: float, forcing=None) -> WaveState:
    """One RK4 step using stage-consistent corrections from ``corrections``."""
    forcing = forcing or _Forcing(problem, grid, sidemap)
    return _rk4(state, problem.c, grid, sidemap, corrections.stage_values(state.t), forcing, dt)


def naive_rk4_step(state: WaveState, problem: ProblemSpec, grid: Grid, sidemap: SideMap, corrections,
                   dt: float, forcing=None) -> WaveState:
    """RK4 step fed with D sampled at t_n, t_n+1/2, t_n+1/2, t_n+1.

    ``corrections`` must be built with ``naive=True``.
    """
    if not getattr(corrections, "naive", False) and corrections.npairs:
        raise ValueError("naive_rk4_step needs corrections built with naive=True")
    forcing = forcing or _Forcing(problem, grid, sidemap)
    return _rk4(state, problem.c, grid, sidemap, corrections.stage_values(state.t), forcing, dt)


def initial_state(problem: ProblemSpec, grid: Grid, sidemap: SideMap) -> WaveState:
    x = grid.coords()
    return WaveState(problem.exact(x, sidemap.sign, 0.0), problem.exact_dt(x, sidemap.sign, 0.0), 0.0)


def spectral_radius_1d() -> float:
    """Largest magnitude of the 5-point symbol times dx^2 (attained at pi)."""
    return 16.0 / 3.0


def stability_limit(c: float, dx: float, dim: int) -> float:
    """Largest stable dt/dx for RK4 with the 5-point Laplacian.

    The semi-discrete eigenvalues are ``+-i c sqrt(lam)`` with
    ``lam <= dim * (16/3) / dx^2``; RK4 covers the imaginary axis up to
    ``2 sqrt(2)``.
    """
    if dim not in (1, 2):
        raise ValueError("dim must be 1 or 2")
    omega_max = c * math.sqrt(dim * spectral_radius_1d()) / dx
    return RK4_IMAG_BOUND / omega_max / dx
