"""Node-centred space-time regions and the tiling over all affected nodes."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import CornerPoint, CoverageFailure
from .geometry import InterfaceCurve, closest_point, frame_at
from .grid import Grid, SideMap
from .interp import SpaceTimeInterpolant

L_FACTOR_RANGE = (3.0, 5.0)


@dataclass(frozen=True)
class Region:
    """Square (2D) or interval (1D) around ``p0`` times the slab ``[t0, t0+dt]``.

    In 2D the square has side ``length`` and its diagonals run along the
    interface normal and tangent at ``p0``.  ``axes`` holds the edge
    directions used as the interpolant's local frame.
    """

    owner: tuple[int, ...]
    owner_flat: int
    theta0: float
    p0: np.ndarray
    normal: np.ndarray
    tangent: np.ndarray
    length: float
    t0: float
    dt: float

    @property
    def dim(self) -> int:
        return self.p0.size

    @property
    def axes(self) -> np.ndarray:
        if self.dim == 1:
            return np.array([[1.0]])
        n, t = self.normal, self.tangent
        return np.array([(n + t) / math.sqrt(2.0), (t - n) / math.sqrt(2.0)])

    @property
    def origin(self) -> np.ndarray:
        return self.p0 - 0.5 * self.length * self.axes.sum(axis=0)

    @property
    def size(self) -> float:
        return self.length

    def local(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        return (pts - self.origin) @ self.axes.T / self.length

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        s = self.local(points)
        return np.all((s >= -tol) & (s <= 1.0 + tol), axis=1)

    def vertices(self) -> np.ndarray:
        if self.dim == 1:
            return np.array([[self.p0[0] - 0.5 * self.length], [self.p0[0] + 0.5 * self.length]])
        h = self.length / math.sqrt(2.0)
        n, t = self.normal, self.tangent
        return np.array([self.p0 + h * n, self.p0 + h * t, self.p0 - h * n, self.p0 - h * t])

    def at_time(self, t0: float, dt: float | None = None) -> Region:
        return replace(self, t0=float(t0), dt=self.dt if dt is None else float(dt))

    def interpolant(self, weights=None) -> SpaceTimeInterpolant:
        return SpaceTimeInterpolant(self.origin, self.axes, self.length, self.t0, self.dt, weights)


def region_length(grid: Grid, l_factor: float) -> float:
    return l_factor * math.sqrt(grid.dim) * grid.dx


def _frame(curve: InterfaceCurve, theta: float):
    try:
        n, t = frame_at(curve, theta)
    except CornerPoint:
        # the square only needs the diagonal directions; the one-sided frame
        # of the arc holding the closest approach provides them
        n, t = curve.frame(theta, strict=False)
    return np.asarray(n, dtype=float), np.asarray(t, dtype=float)


def _opposite_taps(node, curve, grid, sidemap):
    if sidemap is not None:
        k = grid.flat(node)
        return sidemap.pair_point[sidemap.taps_of(k)]
    p = grid.point(node)
    s_node = curve.side(p)
    s_node = -1 if s_node == 0 else s_node
    taps = []
    for axis in range(grid.dim):
        for off in (-2, -1, 1, 2):
            q = p.copy()
            q[axis] += off * grid.dx
            s = curve.side(q)
            s = -1 if s == 0 else s
            if s != s_node:
                taps.append(q)
    return np.array(taps).reshape(-1, grid.dim)


def build_region(node, curve: InterfaceCurve, grid: Grid, l_factor: float, t0: float, dt: float,
                 sidemap: SideMap | None = None) -> Region:
    """Region owned by ``node``; raises CoverageFailure when too small."""
    if not L_FACTOR_RANGE[0] <= l_factor <= L_FACTOR_RANGE[1]:
        raise ValueError(f"L factor must lie in {L_FACTOR_RANGE}, got {l_factor}")
    node = tuple(int(i) for i in np.atleast_1d(node))
    p = grid.point(node)
    theta0, p0 = closest_point(curve, p)
    n, t = _frame(curve, theta0)
    region = Region(
        owner=node,
        owner_flat=grid.flat(node),
        theta0=float(theta0),
        p0=np.asarray(p0, dtype=float).reshape(grid.dim),
        normal=n.reshape(-1),
        tangent=t.reshape(-1),
        length=region_length(grid, l_factor),
        t0=float(t0),
        dt=float(dt),
    )
    taps = _opposite_taps(node, curve, grid, sidemap)
    if taps.size and not region.contains(taps).all():
        raise CoverageFailure(node)
    return region


@dataclass
class Tiling:
    regions: list[Region]
    length: float
    l_factor: float

    def __post_init__(self):
        self.by_owner = {r.owner_flat: i for i, r in enumerate(self.regions)}

    def __len__(self):
        return len(self.regions)

    def region_of(self, node_flat: int) -> Region:
        return self.regions[self.by_owner[int(node_flat)]]

    def at_time(self, t0: float, dt: float | None = None) -> Tiling:
        return Tiling([r.at_time(t0, dt) for r in self.regions], self.length, self.l_factor)

    def check_coverage(self, sidemap: SideMap) -> None:
        for r in self.regions:
            taps = sidemap.pair_point[sidemap.taps_of(r.owner_flat)]
            if not r.contains(taps).all():
                raise CoverageFailure(r.owner)


def build_tiling(sidemap: SideMap, curve: InterfaceCurve | None, grid: Grid, l_factor: float,
                 t0: float, dt: float) -> Tiling:
    """One region per affected node, ordered by flat node index."""
    if not L_FACTOR_RANGE[0] <= l_factor <= L_FACTOR_RANGE[1]:
        raise ValueError(f"L factor must lie in {L_FACTOR_RANGE}, got {l_factor}")
    length = region_length(grid, l_factor)
    nodes = sidemap.affected
    if curve is None or nodes.size == 0:
        return Tiling([], length, l_factor)
    pts = grid.coords().reshape(-1, grid.dim)[nodes]
    thetas, p0s = curve.closest(pts)
    thetas = np.atleast_1d(thetas)
    p0s = np.asarray(p0s).reshape(-1, grid.dim)
    regions = []
    for k, theta, p0 in zip(nodes, thetas, p0s):
        n, t = _frame(curve, float(theta))
        regions.append(
            Region(
                owner=grid.unflat(k),
                owner_flat=int(k),
                theta0=float(theta),
                p0=np.asarray(p0, dtype=float),
                normal=n.reshape(-1),
                tangent=t.reshape(-1),
                length=length,
                t0=float(t0),
                dt=float(dt),
            )
        )
    tiling = Tiling(regions, length, l_factor)
    tiling.check_coverage(sidemap)
    return tiling


def dump_tiling(tiling: Tiling, path) -> None:
    """JSON list of ``{node, p0, frame, L, vertices}`` for external plotting."""
    out = []
    for r in tiling.regions:
        out.append(
            {
                "node": list(r.owner),
                "p0": r.p0.tolist(),
                "frame": {"normal": r.normal.tolist(), "tangent": r.tangent.tolist()},
                "L": r.length,
                "vertices": r.vertices().tolist(),
            }
        )
    Path(path).write_text(json.dumps(out, indent=1))
