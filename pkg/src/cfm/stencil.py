"""Five-point fourth-order second-derivative stencil and its corrected form."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingCorrection
from .grid import Grid, SideMap, wrap


@dataclass(frozen=True)
class StencilTaps:
    offsets: tuple[int, ...] = (-2, -1, 0, 1, 2)
    numerators: tuple[float, ...] = (-1.0, 16.0, -30.0, 16.0, -1.0)
    denominator: float = 12.0

    def coefficients(self, dx: float) -> np.ndarray:
        return np.array(self.numerators) / (self.denominator * dx * dx)

    def weight(self, offset: int, dx: float) -> float:
        return self.numerators[self.offsets.index(int(offset))] / (self.denominator * dx * dx)


TAPS = StencilTaps()


def laplacian(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Uncorrected fourth-order Laplacian of the whole periodic field."""
    out = np.zeros_like(u)
    c = TAPS.coefficients(grid.dx)
    for axis in range(grid.dim):
        for off, w in zip(TAPS.offsets, c):
            out += w * np.roll(u, -off, axis=axis)
    return out


def laplacian_at(u: np.ndarray, node, grid: Grid) -> float:
    node = tuple(int(i) for i in np.atleast_1d(node))
    c = TAPS.coefficients(grid.dx)
    total = 0.0
    for axis in range(grid.dim):
        for off, w in zip(TAPS.offsets, c):
            tap = list(node)
            tap[axis] = wrap(grid, tap[axis] + off)
            total += w * u[tuple(tap)]
    return float(total)


def correction_weights(sidemap: SideMap, grid: Grid) -> np.ndarray:
    """Signed stencil weight multiplying D for each (node, tap) pair.

    A plus-side node reconstructs ``u_plus = u_minus + D`` at its minus taps;
    a minus-side node subtracts D from its plus taps.
    """
    node_sign = sidemap.sign.ravel()[sidemap.pair_node]
    w = np.array([TAPS.weight(o, grid.dx) for o in sidemap.pair_offset])
    return node_sign * w


def correction_source(values: np.ndarray, sidemap: SideMap, grid: Grid) -> np.ndarray:
    """Source term added to the Laplacian, given one D value per pair."""
    s = np.bincount(
        sidemap.pair_node,
        weights=correction_weights(sidemap, grid) * values,
        minlength=grid.size,
    )
    return s.reshape(grid.shape)


def corrected_laplacian_at(u: np.ndarray, node, grid: Grid, sidemap: SideMap,
                           corrections: dict) -> float:
    """Laplacian at ``node`` with opposite-side taps shifted by D.

    ``corrections`` maps the tap's grid index tuple to the D value computed in
    the node's own region.
    """
    node = tuple(int(i) for i in np.atleast_1d(node))
    k = grid.flat(node)
    value = laplacian_at(u, node, grid)
    sgn = sidemap.sign.ravel()[k]
    for p in sidemap.taps_of(k):
        tap = grid.unflat(sidemap.pair_tap[p])
        if tap not in corrections:
            raise MissingCorrection(f"node {node}: no correction for tap {tap}")
        value += sgn * TAPS.weight(sidemap.pair_offset[p], grid.dx) * corrections[tap]
    return float(value)
