"""Periodic Cartesian grid, wave-state storage and side classification."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import InterfaceCurve

STENCIL_OFFSETS = (-2, -1, 1, 2)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``n`` nodes per axis and equal spacing.

    Node ``i`` sits at ``lower + i * dx``; the node at ``upper`` is the
    periodic image of node 0.
    """

    dim: int
    n: int
    lower: tuple[float, ...] = (0.0, 0.0)
    upper: tuple[float, ...] = (1.0, 1.0)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        lo = tuple(float(v) for v in self.lower)[: self.dim]
        hi = tuple(float(v) for v in self.upper)[: self.dim]
        if len(lo) < self.dim:
            lo = lo + (lo[-1],) * (self.dim - len(lo))
            hi = hi + (hi[-1],) * (self.dim - len(hi))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        widths = [h - l for l, h in zip(lo, hi)]
        if any(w <= 0 for w in widths):
            raise ValueError("upper bound must exceed lower bound")
        if max(widths) - min(widths) > 1e-12 * max(widths):
            raise ValueError("only square grids (dx == dy) are supported")
        if self.n < 5:
            raise ValueError("at least 5 nodes per axis are needed by the stencil")

    @property
    def dx(self) -> float:
        return (self.upper[0] - self.lower[0]) / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def width(self) -> float:
        return self.upper[0] - self.lower[0]

    def axis(self, d: int = 0) -> np.ndarray:
        return self.lower[d] + np.arange(self.n) * self.dx

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``shape + (dim,)`` in ``ij`` order."""
        axes = [self.axis(d) for d in range(self.dim)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def point(self, node) -> np.ndarray:
        node = np.atleast_1d(node)
        return np.array([self.lower[d] + node[d] * self.dx for d in range(self.dim)])

    def flat(self, node) -> int:
        return int(np.ravel_multi_index(tuple(int(i) for i in np.atleast_1d(node)), self.shape))

    def unflat(self, k: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(int(k), self.shape))


def wrap(grid: Grid, index):
    """Periodic index wrap (scalar or array)."""
    return np.mod(index, grid.n) if isinstance(index, np.ndarray) else int(index) % grid.n


@dataclass
class WaveState:
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def copy(self) -> WaveState:
        return WaveState(self.u.copy(), self.v.copy(), self.t)


@dataclass
class SideMap:
    """Per-node side sign plus the list of opposite-side stencil taps.

    Each entry ``k`` of the pair arrays describes one (node, tap) couple: the
    flat node index, the flat wrapped tap index, the axis and signed offset
    of the tap, and the tap position unwrapped around the node.
    """

    sign: np.ndarray
    pair_node: np.ndarray
    pair_tap: np.ndarray
    pair_axis: np.ndarray
    pair_offset: np.ndarray
    pair_point: np.ndarray
    affected: np.ndarray = field(init=False)

    def __post_init__(self):
        self.affected = np.unique(self.pair_node)

    def taps_of(self, node_flat: int) -> np.ndarray:
        return np.flatnonzero(self.pair_node == node_flat)

    def is_affected(self, node_flat: int) -> bool:
        return bool(np.any(self.affected == node_flat))


def classify_nodes(grid: Grid, curve: InterfaceCurve | None) -> SideMap:
    """Side sign for every node and the opposite-side taps of every node.

    Nodes lying on the curve are assigned to the minus side.
    """
    pts = grid.coords()
    if curve is None:
        sign = np.ones(grid.shape, dtype=int)
    else:
        sign = np.asarray(curve.side(pts), dtype=int).reshape(grid.shape)
        sign = np.where(sign == 0, -1, sign)
    flat_sign = sign.ravel()
    idx = np.indices(grid.shape).reshape(grid.dim, -1).T  # (size, dim)
    node_flat = np.arange(grid.size)

    pn, pt, pa, po, pp = [], [], [], [], []
    base_pts = pts.reshape(-1, grid.dim)
    for axis in range(grid.dim):
        for off in STENCIL_OFFSETS:
            tap_idx = idx.copy()
            tap_idx[:, axis] = (tap_idx[:, axis] + off) % grid.n
            tap_flat = np.ravel_multi_index(tuple(tap_idx.T), grid.shape)
            opp = flat_sign[tap_flat] != flat_sign
            k = node_flat[opp]
            pn.append(k)
            pt.append(tap_flat[opp])
            pa.append(np.full(k.size, axis))
            po.append(np.full(k.size, off))
            p = base_pts[k].copy()
            p[:, axis] += off * grid.dx
            pp.append(p)
    pn = np.concatenate(pn)
    order = np.lexsort((np.concatenate(po), np.concatenate(pa), pn))
    return SideMap(
        sign=sign,
        pair_node=pn[order],
        pair_tap=np.concatenate(pt)[order],
        pair_axis=np.concatenate(pa)[order],
        pair_offset=np.concatenate(po)[order],
        pair_point=np.concatenate(pp)[order].reshape(-1, grid.dim),
    )


# ---------------------------------------------------------------------------
# Snapshot export
# ---------------------------------------------------------------------------


def write_snapshot(path, grid: Grid, state: WaveState, problem_id: str = "") -> None:
    """CSV with columns ``x[,y],u,v`` preceded by a one-line JSON header.

    The header line starts with ``#`` so CSV readers can skip it as a
    comment.
    """
    path = Path(path)
    meta = {
        "dim": grid.dim,
        "n": grid.n,
        "lower": list(grid.lower),
        "upper": list(grid.upper),
        "dx": grid.dx,
        "t": state.t,
        "problem": problem_id,
    }
    pts = grid.coords().reshape(-1, grid.dim)
    names = ["x", "y"][: grid.dim] + ["u", "v"]
    with path.open("w", newline="") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for p, u, v in zip(pts, state.u.ravel(), state.v.ravel()):
            w.writerow([repr(float(c)) for c in p] + [repr(float(u)), repr(float(v))])


def read_snapshot(path) -> tuple[dict, np.ndarray]:
    """Inverse of :func:`write_snapshot`: returns (metadata, table)."""
    with Path(path).open() as fh:
        meta = json.loads(fh.readline()[1:])
        fh.readline()
        rows = [[float(x) for x in line.split(",")] for line in fh if line.strip()]
    return meta, np.array(rows)
