"""Interface curves and the geometric queries used by tiling and quadrature.

Orientation convention: the normal points from the minus side into the plus
side, and jumps are always ``q_plus - q_minus``.  For the closed 2D curves
shipped here the minus side is the bounded component, so the normal is the
outward one when the curve is traversed counter-clockwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CornerPoint

TWO_PI = 2.0 * math.pi
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class CurveSegment:
    """Parameter interval of a curve lying inside a region."""

    theta_a: float
    theta_b: float
    length: float


class InterfaceCurve:
    """Common interface for all curve variants.

    Subclasses provide ``side``, ``closest`` and ``frame``.  2D curves also
    expose ``position(theta)`` and ``derivative(theta)``.
    """

    dim: int = 2
    closed: bool = True
    theta_range: tuple[float, float] = (0.0, TWO_PI)
    corners: tuple[float, ...] = ()
    scale: float = 1.0

    def side(self, p) -> np.ndarray:
        raise NotImplementedError

    def closest(self, p) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def frame(self, theta, strict: bool = True) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    @property
    def tol(self) -> float:
        return 1e-12 * self.scale


# ---------------------------------------------------------------------------
# 1D
# ---------------------------------------------------------------------------


class Points1D(InterfaceCurve):
    """Interface made of isolated abscissae on a line.

    The leftmost component is the minus side and the sign alternates at each
    point, so the normal is +1 at even-indexed points and -1 at odd ones.
    """

    dim = 1
    closed = False

    def __init__(self, points: Sequence[float], scale: float = 1.0):
        self.points = np.array(sorted(float(x) for x in points))
        self.theta_range = (0.0, float(len(self.points) - 1))
        self.scale = scale

    def __repr__(self):
        return f"Points1D({self.points.tolist()})"

    def position(self, theta):
        idx = np.asarray(np.rint(theta), dtype=int)
        return self.points[idx][..., None]

    def normal_sign(self, index):
        return np.where(np.asarray(index) % 2 == 0, 1.0, -1.0)

    def side(self, p):
        x = np.asarray(p, dtype=float)
        if x.ndim and x.shape[-1] == 1:
            x = x[..., 0]
        count = np.zeros(x.shape, dtype=int)
        on = np.zeros(x.shape, dtype=bool)
        for xp in self.points:
            on |= np.abs(x - xp) <= self.tol
            count += x > xp
        out = np.where(count % 2 == 1, 1, -1)
        return np.where(on, 0, out)

    def closest(self, p):
        x = np.asarray(p, dtype=float)
        if x.ndim and x.shape[-1] == 1:
            x = x[..., 0]
        d = np.abs(x[..., None] - self.points)
        idx = np.argmin(d, axis=-1)
        return idx.astype(float), self.points[idx][..., None]

    def frame(self, theta, strict=True):
        idx = int(round(float(theta)))
        return np.array([float(self.normal_sign(idx))]), np.zeros(0)


# ---------------------------------------------------------------------------
# 2D parametric curves
# ---------------------------------------------------------------------------


class ParametricCurve(InterfaceCurve):
    """Closed parametric curve, counter-clockwise, minus side inside."""

    n_coarse = 2048
    n_golden = 40

    def position(self, theta) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, theta) -> np.ndarray:
        raise NotImplementedError

    def speed(self, theta) -> np.ndarray:
        return np.linalg.norm(self.derivative(theta), axis=-1)

    def is_corner(self, theta, tol=1e-12) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        hit = np.zeros(theta.shape, dtype=bool)
        lo, hi = self.theta_range
        period = hi - lo
        for c in self.corners:
            d = np.mod(theta - c + 0.5 * period, period) - 0.5 * period
            hit |= np.abs(d) <= tol
        return hit

    def frame(self, theta, strict=True):
        theta = np.asarray(theta, dtype=float)
        if strict and np.any(self.is_corner(theta)):
            raise CornerPoint(f"curve is not differentiable at theta={theta}")
        d = self.derivative(theta)
        t = d / np.linalg.norm(d, axis=-1, keepdims=True)
        n = np.stack([t[..., 1], -t[..., 0]], axis=-1)
        return n, t

    def _samples(self, n):
        cache = self.__dict__.setdefault("_sample_cache", {})
        if n not in cache:
            lo, hi = self.theta_range
            th = np.linspace(lo, hi, n + 1)
            if self.corners:
                th = np.union1d(th, np.asarray(self.corners, dtype=float))
            cache[n] = (th, self.position(th))
        return cache[n]

    @property
    def perimeter(self) -> float:
        if "_perimeter" not in self.__dict__:
            th, pts = self._samples(16384)
            self._perimeter = float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
        return self._perimeter

    def closest(self, p):
        """Coarse sampling followed by golden-section refinement."""
        p = np.asarray(p, dtype=float)
        shape = p.shape[:-1]
        q = p.reshape(-1, 2)
        lo, hi = self.theta_range
        th = np.linspace(lo, hi, self.n_coarse, endpoint=False)
        pts = self.position(th)
        d2 = ((q[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
        k = np.argmin(d2, axis=1)
        h = (hi - lo) / self.n_coarse
        a = th[k] - h
        b = th[k] + h

        def f(x):
            return ((self.position(x) - q) ** 2).sum(-1)

        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc, fd = f(c), f(d)
        for _ in range(self.n_golden):
            left = fc <= fd
            a, b = np.where(left, a, c), np.where(left, d, b)
            c_new = np.where(left, b - _GOLDEN * (b - a), d)
            d_new = np.where(left, c, a + _GOLDEN * (b - a))
            fc_new = np.where(left, f(c_new), fd)
            fd_new = np.where(left, fc, f(d_new))
            c, d, fc, fd = c_new, d_new, fc_new, fd_new
        theta = np.mod(0.5 * (a + b) - lo, hi - lo) + lo
        return theta.reshape(shape), self.position(theta).reshape(shape + (2,))


class Circle(ParametricCurve):
    def __init__(self, center, radius, scale=1.0):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.scale = scale

    def __repr__(self):
        return f"Circle({self.center.tolist()}, {self.radius})"

    def position(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.center + self.radius * np.stack([np.cos(theta), np.sin(theta)], axis=-1)

    def derivative(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.radius * np.stack([-np.sin(theta), np.cos(theta)], axis=-1)

    def side(self, p):
        r = np.linalg.norm(np.asarray(p, dtype=float) - self.center, axis=-1)
        d = r - self.radius
        return np.where(np.abs(d) <= self.tol, 0, np.where(d > 0, 1, -1))

    def closest(self, p):
        v = np.asarray(p, dtype=float) - self.center
        theta = np.mod(np.arctan2(v[..., 1], v[..., 0]), TWO_PI)
        return theta, self.position(theta)


class ParametricStar(ParametricCurve):
    """``r(theta) = r0 + r1 sin(lobes theta)`` about ``center``."""

    def __init__(self, center=(0.5, 0.5), r0=0.25, r1=0.05, lobes=5, scale=1.0):
        self.center = np.asarray(center, dtype=float)
        self.r0, self.r1, self.lobes = float(r0), float(r1), int(lobes)
        self.scale = scale

    def __repr__(self):
        return f"ParametricStar({self.center.tolist()}, {self.r0}, {self.r1}, {self.lobes})"

    def radius(self, theta):
        return self.r0 + self.r1 * np.sin(self.lobes * np.asarray(theta, dtype=float))

    def position(self, theta):
        theta = np.asarray(theta, dtype=float)
        r = self.radius(theta)
        return self.center + np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)

    def derivative(self, theta):
        theta = np.asarray(theta, dtype=float)
        r = self.radius(theta)
        dr = self.r1 * self.lobes * np.cos(self.lobes * theta)
        c, s = np.cos(theta), np.sin(theta)
        return np.stack([dr * c - r * s, dr * s + r * c], axis=-1)

    def side(self, p):
        v = np.asarray(p, dtype=float) - self.center
        rho = np.hypot(v[..., 0], v[..., 1])
        d = rho - self.radius(np.arctan2(v[..., 1], v[..., 0]))
        return np.where(np.abs(d) <= self.tol, 0, np.where(d > 0, 1, -1))


@dataclass(frozen=True)
class _Arc:
    center: np.ndarray
    radius: float
    phi_a: float
    phi_b: float


class OsculatingCircles(ParametricCurve):
    """Boundary of the curvilinear triangle left between three mutually
    tangent discs.

    Arc ``k`` occupies ``theta in [2 pi k / 3, 2 pi (k + 1) / 3)``; the three
    junctions are cusps where consecutive arcs share a tangent line.
    """

    def __init__(self, centers, radius, scale=1.0):
        self.centers = np.asarray(centers, dtype=float)
        self.radius_ = float(radius)
        self.scale = scale
        if self.centers.shape != (3, 2):
            raise ValueError("three circle centers are required")
        g = self.centers.mean(axis=0)
        # order centers counter-clockwise about the centroid
        ang = np.arctan2(self.centers[:, 1] - g[1], self.centers[:, 0] - g[0])
        c = self.centers[np.argsort(ang)]
        arcs = []
        for k in range(3):
            prev_c, cur, next_c = c[k - 1], c[k], c[(k + 1) % 3]
            start = 0.5 * (cur + prev_c)
            end = 0.5 * (cur + next_c)
            pa = math.atan2(start[1] - cur[1], start[0] - cur[0])
            pb = math.atan2(end[1] - cur[1], end[0] - cur[0])
            # the arc facing the centroid is the short one (60 degrees here)
            delta = math.remainder(pb - pa, TWO_PI)
            arcs.append(_Arc(cur, self.radius_, pa, pa + delta))
        self.arcs = tuple(arcs)
        self.corners = (0.0, TWO_PI / 3.0, 2.0 * TWO_PI / 3.0)
        self._check_traversal()

    def __repr__(self):
        return f"OsculatingCircles({self.centers.tolist()}, {self.radius_})"

    def _check_traversal(self):
        # arcs must traverse the gap counter-clockwise (gap on the left)
        th = np.linspace(0.1, TWO_PI - 0.1, 64)
        p = self.position(th)
        area = 0.5 * np.sum(p[:-1, 0] * p[1:, 1] - p[1:, 0] * p[:-1, 1])
        if area <= 0:
            self.arcs = tuple(reversed([_Arc(a.center, a.radius, a.phi_b, a.phi_a) for a in self.arcs]))

    def tangency_points(self) -> np.ndarray:
        return self.position(np.asarray(self.corners))

    def _split(self, theta, one_sided_left=False):
        theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        u = theta * 3.0 / TWO_PI
        k = np.minimum(np.floor(u).astype(int), 2)
        s = u - k
        if one_sided_left:
            at_start = s <= 1e-12
            k = np.where(at_start, (k - 1) % 3, k)
            s = np.where(at_start, 1.0, s)
        return k, s

    def _eval(self, k, s, deriv):
        cx = np.array([a.center[0] for a in self.arcs])[k]
        cy = np.array([a.center[1] for a in self.arcs])[k]
        pa = np.array([a.phi_a for a in self.arcs])[k]
        pb = np.array([a.phi_b for a in self.arcs])[k]
        phi = pa + s * (pb - pa)
        r = self.radius_
        if not deriv:
            return np.stack([cx + r * np.cos(phi), cy + r * np.sin(phi)], axis=-1)
        w = (pb - pa) * 3.0 / TWO_PI
        return np.stack([-r * np.sin(phi) * w, r * np.cos(phi) * w], axis=-1)

    def position(self, theta):
        k, s = self._split(theta)
        return self._eval(k, s, False)

    def derivative(self, theta, one_sided_left=False):
        k, s = self._split(theta, one_sided_left)
        return self._eval(k, s, True)

    def frame(self, theta, strict=True):
        theta = np.asarray(theta, dtype=float)
        if strict and np.any(self.is_corner(theta)):
            raise CornerPoint(f"osculating-circle junction at theta={theta}")
        # normal points to the disc center (from the gap into the discs)
        k, s = self._split(theta)
        p = self._eval(k, s, False)
        c = np.array([a.center for a in self.arcs])[k]
        n = (c - p) / self.radius_
        t = np.stack([-n[..., 1], n[..., 0]], axis=-1)
        return n, t

    def side(self, p):
        p = np.asarray(p, dtype=float)
        d = np.stack([np.linalg.norm(p - a.center, axis=-1) - a.radius for a in self.arcs])
        dmin = d.min(axis=0)
        inside_tri = self._in_triangle(p)
        out = np.where(inside_tri & (dmin > 0), -1, 1)
        return np.where(inside_tri & (np.abs(dmin) <= self.tol), 0, out)

    def _in_triangle(self, p):
        c = np.array([a.center for a in self.arcs])
        signs = []
        for k in range(3):
            a, b = c[k], c[(k + 1) % 3]
            cross = (b[0] - a[0]) * (p[..., 1] - a[1]) - (b[1] - a[1]) * (p[..., 0] - a[0])
            signs.append(cross)
        s = np.stack(signs)
        tol = self.tol
        return np.all(s >= -tol, axis=0) | np.all(s <= tol, axis=0)

    def closest(self, p):
        p = np.asarray(p, dtype=float)
        best_d = None
        best_theta = None
        for k, a in enumerate(self.arcs):
            v = p - a.center
            phi = np.arctan2(v[..., 1], v[..., 0])
            mid = 0.5 * (a.phi_a + a.phi_b)
            delta = np.mod(phi - mid + math.pi, TWO_PI) - math.pi
            s = np.clip(0.5 + delta / (a.phi_b - a.phi_a), 0.0, 1.0)
            theta = (k + s) * TWO_PI / 3.0
            q = self._eval(np.full(np.shape(s), k), s, False)
            dist = np.linalg.norm(p - q, axis=-1)
            if best_d is None:
                best_d, best_theta = dist, theta
            else:
                # strict improvement only: ties keep the smaller parameter
                better = dist < best_d - 1e-14 * self.scale
                best_d = np.where(better, dist, best_d)
                best_theta = np.where(better, theta, best_theta)
        best_theta = np.mod(best_theta, TWO_PI)
        return best_theta, self.position(best_theta)


class GenericParametric(ParametricCurve):
    """User-supplied closed curve; derivative by central differences when absent."""

    def __init__(
        self,
        position: Callable,
        side: Callable,
        theta_range=(0.0, TWO_PI),
        derivative: Callable | None = None,
        corners: Sequence[float] = (),
        scale=1.0,
    ):
        self._pos = position
        self._side = side
        self._der = derivative
        self.theta_range = tuple(float(v) for v in theta_range)
        self.corners = tuple(corners)
        self.scale = scale

    def position(self, theta):
        return np.asarray(self._pos(np.asarray(theta, dtype=float)), dtype=float)

    def derivative(self, theta):
        if self._der is not None:
            return np.asarray(self._der(np.asarray(theta, dtype=float)), dtype=float)
        h = 1e-6
        theta = np.asarray(theta, dtype=float)
        return (self.position(theta + h) - self.position(theta - h)) / (2 * h)

    def side(self, p):
        return np.asarray(self._side(np.asarray(p, dtype=float)), dtype=int)


# ---------------------------------------------------------------------------
# Functional API
# ---------------------------------------------------------------------------


def side_of(curve: InterfaceCurve, p):
    """+1 on the plus side, -1 on the minus side, 0 on the curve."""
    s = curve.side(p)
    return int(s) if np.ndim(s) == 0 else s


def closest_point(curve: InterfaceCurve, p):
    """Parameter and location of the curve point nearest to ``p``.

    Exact ties resolve to the smallest parameter.
    """
    theta, p0 = curve.closest(p)
    if np.ndim(theta) == 0:
        return float(theta), np.asarray(p0, dtype=float)
    return theta, p0


def frame_at(curve: InterfaceCurve, theta):
    """Unit normal (minus to plus) and unit tangent at ``theta``.

    Raises CornerPoint at C0 junctions.
    """
    return curve.frame(theta, strict=True)


def clip_to_region(curve: InterfaceCurve, region, n_samples: int | None = None,
                   min_length: float = 1e-12) -> list[CurveSegment]:
    """Pieces of the curve inside ``region``, sorted by parameter.

    ``region`` must provide ``contains(points)`` and a characteristic
    ``size``.  Segments are split at curve corners so that each one is
    smooth.
    """
    if curve.dim == 1:
        segs = []
        inside = region.contains(curve.points[:, None])
        for k in np.flatnonzero(inside):
            segs.append(CurveSegment(float(k), float(k), 0.0))
        return segs

    lo, hi = curve.theta_range
    if n_samples is None:
        n_samples = max(4096, int(math.ceil(40.0 * curve.perimeter / region.size)))
    th, pts = curve._samples(n_samples)
    inside = region.contains(pts)
    if not inside.any():
        return []
    change = np.flatnonzero(inside[1:] != inside[:-1])
    a = th[change].copy()
    b = th[change + 1].copy()
    a_in = inside[change]
    # bisection on the membership indicator
    for _ in range(60):
        m = 0.5 * (a + b)
        m_in = region.contains(curve.position(m))
        same = m_in == a_in
        a = np.where(same, m, a)
        b = np.where(same, b, m)
    crossings = 0.5 * (a + b)

    bounds = []
    start = lo if inside[0] else None
    for x, entering in zip(crossings, ~a_in):
        if entering:
            start = x
        else:
            bounds.append((start, x))
            start = None
    if start is not None:
        bounds.append((start, hi))

    pieces = []
    for ta, tb in bounds:
        cuts = [c for c in curve.corners if ta < c < tb]
        edges = [ta, *cuts, tb]
        pieces.extend(zip(edges[:-1], edges[1:]))

    xg, wg = np.polynomial.legendre.leggauss(16)
    out = []
    for ta, tb in pieces:
        if tb - ta <= 0:
            continue
        x = 0.5 * (ta + tb) + 0.5 * (tb - ta) * xg
        length = float(0.5 * (tb - ta) * np.sum(wg * curve.speed(x)))
        if length > min_length * curve.scale:
            out.append(CurveSegment(float(ta), float(tb), length))
    return out
