"""Shared fixtures-as-functions for the test modules."""

import numpy as np

from cfm.geometry import Circle, Points1D
from cfm.grid import Grid, classify_nodes
from cfm.regions import build_tiling

# osculating corners need a slightly larger region at coarse N
L_FACTORS = {"osculating": 4.5}


class PolynomialProblem:
    """Duck-typed problem whose correction is D = (x - x0) (t - t0)^2.

    D is cubic along every box axis, so the Hermite space holds it exactly,
    and ``lap D - D_tt / c^2 = -2 (x - x0) / c^2``.
    """

    def __init__(self, dim, x0=0.31, t0=0.2, c=0.8):
        self.dim, self.x0, self.t0, self.c = dim, x0, t0, c
        self.curve = Points1D([0.3, 0.7]) if dim == 1 else Circle((0.5, 0.5), 0.25)

    def D(self, x, t):
        x = np.asarray(x, dtype=float)
        return (x[..., 0] - self.x0) * (t - self.t0) ** 2

    def f_d(self, x, t):
        x = np.asarray(x, dtype=float)
        return -2.0 * (x[..., 0] - self.x0) / self.c**2 + 0.0 * t

    def alpha(self, x, t):
        return self.D(x, t)

    def beta(self, x, normal, t):
        return np.asarray(normal, dtype=float)[..., 0] * (t - self.t0) ** 2


def tiling_for(problem, n, t0=0.0, dt=None):
    lower = getattr(problem, "lower", (0.0,) * problem.dim)
    upper = getattr(problem, "upper", (1.0,) * problem.dim)
    g = Grid(problem.dim, n, lower, upper)
    sm = classify_nodes(g, problem.curve)
    lf = L_FACTORS.get(getattr(problem, "id", ""), 4.0)
    tiling = build_tiling(sm, problem.curve, g, lf, t0, g.dx if dt is None else dt)
    return g, sm, tiling


def region_for(problem, n, index, t0=0.0, dt=None):
    return tiling_for(problem, n, t0, dt)[2].regions[index]


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, ok: bool, detail: str) -> str:
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line
