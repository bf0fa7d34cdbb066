"""Least-squares solve of the correction-function PDE on one region.

The functional minimised over the Hermite weights ``w`` is

    l_c**3 * int int (lap D - D_tt / c**2 - f_d)**2
    + c1 * int int_Gamma (D - alpha)**2
    + c2 * l_c**2 * int int_Gamma (dD/dn - beta)**2

over the region's space-time prism.  Every quadrature point contributes one
weighted row ``a`` with target ``g``; the normal equations are
``M = sum w a a^T`` and ``b = sum w a g``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import EmptyInterface, IllConditioned
from .geometry import InterfaceCurve, clip_to_region
from .interp import tensor_basis
from .problems import ProblemSpec
from .regions import Region

COND_LIMIT = 1e14
VOLUME, DIRICHLET, NEUMANN = 0, 1, 2


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.size

    def integrate(self, f, a: float = 0.0, b: float = 1.0) -> float:
        x = a + (b - a) * self.nodes
        return float((b - a) * np.sum(self.weights * f(x)))


@lru_cache(maxsize=None)
def gauss_rule(n: int = 6) -> QuadratureRule:
    """Gauss-Legendre rule mapped to [0, 1]; exact to degree ``2n - 1``."""
    x, w = np.polynomial.legendre.leggauss(n)
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w)


@dataclass
class RowSet:
    """Quadrature rows of one region plus what is needed to sample the data."""

    A: np.ndarray
    w: np.ndarray
    kind: np.ndarray
    x: np.ndarray
    normal: np.ndarray
    tau: np.ndarray
    n_segments: int

    @property
    def size(self) -> int:
        return self.w.size


def sample_data(problem: ProblemSpec, kind, x, normal, tau, t0: float, dt: float) -> np.ndarray:
    """Targets for each row: f_d, alpha or beta at ``t0 + tau * dt``."""
    t = t0 + tau * dt
    g = np.empty(kind.shape)
    m = kind == VOLUME
    if m.any():
        g[m] = problem.f_d(x[m], t[m])
    m = kind == DIRICHLET
    if m.any():
        g[m] = problem.alpha(x[m], t[m])
    m = kind == NEUMANN
    if m.any():
        g[m] = problem.beta(x[m], normal[m], t[m])
    return g


@lru_cache(maxsize=32)
def _volume_template(dim: int, n: int):
    rule = gauss_rule(n)
    grids = np.meshgrid(*([rule.nodes] * (dim + 1)), indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=1)
    wq = np.ones(u.shape[0])
    for g in np.meshgrid(*([rule.weights] * (dim + 1)), indexing="ij"):
        wq = wq * g.ravel()
    lap = np.zeros((u.shape[0], 4 ** (dim + 1)))
    for d in range(dim):
        orders = [0] * (dim + 1)
        orders[d] = 2
        lap += tensor_basis(u, orders)
    tt = tensor_basis(u, [0] * dim + [2])
    return u, wq, lap, tt


def quadrature_rows(region: Region, curve: InterfaceCurve, c: float, rule: QuadratureRule | None = None,
                    c1: float = 1.0, c2: float = 1.0, l_c: float | None = None) -> RowSet:
    rule = rule or gauss_rule()
    dim = region.dim
    L, dt = region.length, region.dt
    l_c = L if l_c is None else l_c

    # volume term
    u, wq, lap, tt = _volume_template(dim, rule.size)
    A_vol = lap / L**2 - tt / (c**2 * dt**2)
    w_vol = l_c**3 * wq * L**dim * dt
    x_vol = region.origin + (u[:, :dim] * L) @ region.axes

    segments = clip_to_region(curve, region)
    if not segments:
        raise EmptyInterface(f"region of node {region.owner} contains no interface")

    # interface terms: points (x, normal, arc weight)
    gx, gn, gw = [], [], []
    if dim == 1:
        for seg in segments:
            k = int(round(seg.theta_a))
            gx.append(curve.points[k : k + 1, None])
            gn.append(np.array([[curve.normal_sign(k)]]))
            gw.append(np.ones(1))
    else:
        for seg in segments:
            th = seg.theta_a + (seg.theta_b - seg.theta_a) * rule.nodes
            gx.append(curve.position(th))
            gn.append(curve.frame(th, strict=False)[0])
            gw.append(rule.weights * (seg.theta_b - seg.theta_a) * curve.speed(th))
    gx = np.concatenate(gx)
    gn = np.concatenate(gn)
    gw = np.concatenate(gw)
    ng, nt = gx.shape[0], rule.size
    xs = np.repeat(gx, nt, axis=0)
    ns = np.repeat(gn, nt, axis=0)
    taus = np.tile(rule.nodes, ng)
    ws = np.repeat(gw, nt) * np.tile(rule.weights, ng) * dt
    s = region.local(xs)
    ut = np.column_stack([s, taus])
    B = tensor_basis(ut, (0,) * (dim + 1))
    # n . grad B = sum_k (n . axis_k) / L * dB/ds_k
    proj = ns @ region.axes.T / L
    dB = np.zeros_like(B)
    for k in range(dim):
        orders = [0] * (dim + 1)
        orders[k] = 1
        dB += proj[:, k : k + 1] * tensor_basis(ut, orders)

    A = np.vstack([A_vol, B, dB])
    w = np.concatenate([w_vol, c1 * ws, c2 * l_c**2 * ws])
    nv = A_vol.shape[0]
    kind = np.concatenate([np.full(nv, VOLUME), np.full(B.shape[0], DIRICHLET), np.full(B.shape[0], NEUMANN)])
    x = np.vstack([x_vol, xs, xs])
    normal = np.vstack([np.zeros((nv, dim)), ns, ns])
    tau = np.concatenate([u[:, dim], taus, taus])
    return RowSet(A, w, kind, x, normal, tau, len(segments))


@dataclass
class CFSystem:
    """Normal equations ``M w = b`` with ``J(w) = w.M.w - 2 b.w + const``.

    ``Aw`` and ``gw`` keep the square-root-weighted rows and targets so the
    minimiser can be computed by QR without squaring the condition number.
    """

    M: np.ndarray
    b: np.ndarray
    const: float
    region: Region | None = None
    c1: float = 1.0
    c2: float = 1.0
    l_c: float = 0.0
    Aw: np.ndarray | None = None
    gw: np.ndarray | None = None

    @property
    def cond(self) -> float:
        return float(np.linalg.cond(self.M))


def normal_equations(rows: RowSet, g: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    Aw = rows.A * rows.w[:, None]
    M = rows.A.T @ Aw
    M = 0.5 * (M + M.T)
    return M, Aw.T @ g, float(np.sum(rows.w * g * g))


def least_squares_operator(A: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, float]:
    """Linear map ``P`` with ``weights = P @ g`` minimising ``sum w (A x - g)^2``.

    Solved by QR of the column-equilibrated, square-root-weighted rows.
    Returns ``P`` and the condition number of the factored matrix.
    """
    sw = np.sqrt(w)
    Aw = A * sw[:, None]
    scale = 1.0 / np.linalg.norm(Aw, axis=0)
    Q, R = scipy.linalg.qr(Aw * scale, mode="economic")
    cond = np.linalg.cond(R)
    P = scipy.linalg.solve_triangular(R, Q.T) * sw[None, :]
    return P * scale[:, None], float(cond)


def assemble(region: Region, problem: ProblemSpec, curve: InterfaceCurve | None = None,
             rule: QuadratureRule | None = None, c1: float = 1.0, c2: float = 1.0,
             l_c: float | None = None) -> CFSystem:
    curve = curve or problem.curve
    rows = quadrature_rows(region, curve, problem.c, rule, c1, c2, l_c)
    g = sample_data(problem, rows.kind, rows.x, rows.normal, rows.tau, region.t0, region.dt)
    M, b, const = normal_equations(rows, g)
    sw = np.sqrt(rows.w)
    return CFSystem(M, b, const, region, c1, c2, region.length if l_c is None else l_c,
                    rows.A * sw[:, None], g * sw)


def _check(cond, system, region_id):
    if not np.isfinite(cond) or cond > COND_LIMIT:
        rid = region_id if region_id is not None else getattr(system.region, "owner", None)
        raise IllConditioned(rid, cond)


def solve(system: CFSystem, region_id=None) -> np.ndarray:
    """Minimiser of the functional.

    Uses QR on the weighted rows when they are available, otherwise an
    equilibrated Cholesky solve of ``M`` with a least-squares fallback.  The
    condition number of whichever matrix gets factored is checked.
    """
    if system.Aw is not None:
        scale = 1.0 / np.linalg.norm(system.Aw, axis=0)
        Q, R = scipy.linalg.qr(system.Aw * scale, mode="economic")
        _check(np.linalg.cond(R), system, region_id)
        return scale * scipy.linalg.solve_triangular(R, Q.T @ system.gw)
    d = 1.0 / np.sqrt(np.diag(system.M))
    Ms = system.M * d[:, None] * d[None, :]
    _check(np.linalg.cond(Ms), system, region_id)
    try:
        factor = scipy.linalg.cho_factor(Ms)
        return d * scipy.linalg.cho_solve(factor, d * system.b)
    except np.linalg.LinAlgError:
        return d * np.linalg.lstsq(Ms, d * system.b, rcond=None)[0]


def residual(system: CFSystem, w) -> float:
    w = np.asarray(w, dtype=float)
    return float(w @ system.M @ w - 2.0 * system.b @ w + system.const)


def diagnostics(system: CFSystem, w) -> dict:
    return {
        "node": list(system.region.owner) if system.region is not None else None,
        "cond": system.cond,
        "J_min": residual(system, w),
        "w_norm": float(np.linalg.norm(w)),
    }
