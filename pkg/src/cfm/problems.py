"""Manufactured interface problems with closed-form branch solutions.

Each branch solution is stored as a sum of separable terms
``amp * prod_d X_d(x_d) * T(t)`` whose factors are sinusoids or
exponentials, so every derivative the solver needs (gradient, Laplacian,
time derivatives of any order, forcing) is available in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Circle, InterfaceCurve, OsculatingCircles, ParametricStar, Points1D

SPEED_OF_LIGHT = 299792458.0


@dataclass(frozen=True)
class Factor:
    """``cos(k s + phase)`` or ``exp(k s)`` (``kind='exp'``) or 1."""

    kind: str = "const"
    k: float = 0.0
    phase: float = 0.0

    def __call__(self, s, n: int = 0):
        s = np.asarray(s, dtype=float)
        if self.kind == "const":
            return np.ones_like(s) if n == 0 else np.zeros_like(s)
        if self.kind == "exp":
            return self.k**n * np.exp(self.k * s)
        return self.k**n * np.cos(self.k * s + self.phase + n * math.pi / 2)


def cos_(k, phase=0.0):
    return Factor("cos", float(k), float(phase))


def sin_(k, phase=0.0):
    return Factor("cos", float(k), float(phase) - math.pi / 2)


def exp_(k):
    return Factor("exp", float(k))


ONE = Factor()


@dataclass(frozen=True)
class Term:
    amp: float
    space: tuple[Factor, ...]
    time: Factor

    def scaled(self, a: float) -> Term:
        return Term(self.amp * a, self.space, self.time)


@dataclass(frozen=True)
class Branch:
    """Smooth solution on one side, extended across the interface."""

    terms: tuple[Term, ...] = ()

    def __sub__(self, other: Branch) -> Branch:
        return Branch(self.terms + tuple(t.scaled(-1.0) for t in other.terms))

    def _eval(self, x, t, space_orders, time_order):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        out = np.zeros(np.broadcast_shapes(x.shape[:-1], t.shape))
        for term in self.terms:
            v = term.amp * term.time(t, time_order)
            for d, f in enumerate(term.space):
                v = v * f(x[..., d], space_orders[d])
            out = out + v
        return out

    def value(self, x, t):
        x = np.asarray(x, dtype=float)
        return self._eval(x, t, (0,) * x.shape[-1], 0)

    def dt(self, x, t, n: int = 1):
        x = np.asarray(x, dtype=float)
        return self._eval(x, t, (0,) * x.shape[-1], n)

    def space_deriv(self, x, t, orders, time_order: int = 0):
        return self._eval(x, t, tuple(orders), time_order)

    def grad(self, x, t):
        x = np.asarray(x, dtype=float)
        dim = x.shape[-1]
        return np.stack(
            [self._eval(x, t, tuple(int(d == a) for d in range(dim)), 0) for a in range(dim)],
            axis=-1,
        )

    def laplacian(self, x, t):
        x = np.asarray(x, dtype=float)
        dim = x.shape[-1]
        return sum(self._eval(x, t, tuple(2 * int(d == a) for d in range(dim)), 0) for a in range(dim))

    def forcing(self, x, t, c):
        return self.laplacian(x, t) - self.dt(x, t, 2) / c**2


class SeparableSampler:
    """Evaluates ``sum_k S_k(x) * T_k^(m_k)(t)`` at fixed points.

    The spatial parts ``S_k`` are computed once; each call only evaluates
    the time factors.  With ``index`` set, ``t`` holds a short list of
    distinct times and point ``i`` uses ``t[index[i]]``.
    """

    def __init__(self, parts, shape, index=None):
        self.parts = [(f, m, np.asarray(S, dtype=float)) for f, m, S in parts]
        self.shape = tuple(shape)
        self.index = None if index is None else np.asarray(index)

    def __call__(self, t):
        out = np.zeros(self.shape)
        t = np.asarray(t, dtype=float)
        for factor, m, S in self.parts:
            T = factor(t, m)
            if self.index is not None:
                T = T[self.index]
            out = out + S * T
        return out


def _space_product(term: Term, x, orders):
    v = np.full(x.shape[:-1], term.amp)
    for d, f in enumerate(term.space):
        v = v * f(x[..., d], orders[d])
    return v


def _unit(dim, a, k=1):
    return tuple(k * int(d == a) for d in range(dim))


def value_parts(branch: Branch, x, time_order: int = 0, weight=1.0):
    x = np.asarray(x, dtype=float)
    return [(t.time, time_order, weight * _space_product(t, x, (0,) * x.shape[-1])) for t in branch.terms]


def forcing_parts(branch: Branch, x, c: float, weight=1.0):
    x = np.asarray(x, dtype=float)
    dim = x.shape[-1]
    parts = []
    for t in branch.terms:
        lap = sum(_space_product(t, x, _unit(dim, a, 2)) for a in range(dim))
        parts.append((t.time, 0, weight * lap))
        parts.append((t.time, 2, -weight * _space_product(t, x, (0,) * dim) / c**2))
    return parts


def normal_parts(branch: Branch, x, normal, weight=1.0):
    x = np.asarray(x, dtype=float)
    normal = np.asarray(normal, dtype=float)
    dim = x.shape[-1]
    return [
        (t.time, 0, weight * sum(normal[..., a] * _space_product(t, x, _unit(dim, a)) for a in range(dim)))
        for t in branch.terms
    ]


@dataclass
class ProblemSpec:
    """A manufactured wave-interface problem.

    ``plus`` and ``minus`` are the branch solutions; forcing, jump data and
    initial data all derive from them.
    """

    id: str
    dim: int
    c: float
    curve: InterfaceCurve | None
    plus: Branch
    minus: Branch
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    t_end: float
    gamma: float = 1.0
    dt_rule: str | None = None
    notes: dict = field(default_factory=dict)

    def _select(self, side, a, b):
        return np.where(np.asarray(side) > 0, a, b)

    def exact(self, x, side, t):
        return self._select(side, self.plus.value(x, t), self.minus.value(x, t))

    def exact_dt(self, x, side, t, n: int = 1):
        return self._select(side, self.plus.dt(x, t, n), self.minus.dt(x, t, n))

    def forcing(self, x, side, t):
        return self._select(side, self.plus.forcing(x, t, self.c), self.minus.forcing(x, t, self.c))

    @property
    def correction(self) -> Branch:
        """Exact correction function D = u_plus - u_minus."""
        return self.plus - self.minus

    def alpha(self, x, t):
        return self.plus.value(x, t) - self.minus.value(x, t)

    def beta(self, x, normal, t):
        g = self.plus.grad(x, t) - self.minus.grad(x, t)
        return np.sum(np.asarray(normal) * g, axis=-1)

    def f_d(self, x, t):
        return self.plus.forcing(x, t, self.c) - self.minus.forcing(x, t, self.c)

    def exact_sampler(self, x, side, time_order: int = 0) -> SeparableSampler:
        """Fast evaluator of ``exact`` (or its time derivative) on fixed nodes."""
        plus = (np.asarray(side) > 0).astype(float)
        parts = value_parts(self.plus, x, time_order, plus) + value_parts(self.minus, x, time_order, 1.0 - plus)
        return SeparableSampler(parts, plus.shape)

    def forcing_sampler(self, x, side) -> SeparableSampler:
        plus = (np.asarray(side) > 0).astype(float)
        parts = forcing_parts(self.plus, x, self.c, plus) + forcing_parts(self.minus, x, self.c, 1.0 - plus)
        return SeparableSampler(parts, plus.shape)

    def data_sampler(self, kind, x, normal, tau) -> SeparableSampler:
        """Interface data (f_d, alpha or beta by ``kind``) at slab points.

        Call with ``t0 + tau_values * dt`` where ``tau_values`` is the
        sampler's ``tau_values`` attribute.
        """
        kind = np.asarray(kind)
        D = self.correction
        vol, dir_, neu = ((kind == k).astype(float) for k in (0, 1, 2))
        parts = forcing_parts(D, x, self.c, vol) + value_parts(D, x, 0, dir_) + normal_parts(D, x, normal, neu)
        tau_values, index = np.unique(np.asarray(tau, dtype=float), return_inverse=True)
        sampler = SeparableSampler(parts, kind.shape, index)
        sampler.tau_values = tau_values
        return sampler

    def period_steps(self, dx: float, gamma: float | None = None) -> tuple[int, float]:
        """Number of steps and step size reaching ``t_end`` exactly."""
        dt = self.step_size(dx, gamma)
        n = max(1, int(math.ceil(self.t_end / dt - 1e-9)))
        return n, self.t_end / n

    def step_size(self, dx: float, gamma: float | None = None) -> float:
        if gamma is not None:
            return gamma * dx
        if self.dt_rule is not None:
            return evaluate_dt_rule(self.dt_rule, dx=dx, c=self.c)
        return self.gamma * dx


def evaluate_dt_rule(expr: str, **names) -> float:
    """Evaluate an arithmetic step-size rule such as ``0.75*dx/c``."""
    import ast
    import operator

    ops = {
        ast.Add: operator.add,
        ast.Sub: operator.sub,
        ast.Mult: operator.mul,
        ast.Div: operator.truediv,
        ast.Pow: operator.pow,
        ast.USub: operator.neg,
    }

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id in names:
                return float(names[node.id])
            if node.id == "sqrt2":
                return math.sqrt(2.0)
            raise ValueError(f"unknown name {node.id!r} in dt rule")
        if isinstance(node, ast.BinOp) and type(node.op) in ops:
            return ops[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in ops:
            return ops[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported dt rule: {expr!r}")

    return ev(ast.parse(expr, mode="eval"))


# ---------------------------------------------------------------------------
# Library
# ---------------------------------------------------------------------------

TWO_PI = 2.0 * math.pi
# Unit-period problems in 2D use c = 1/sqrt(2): with it the circle and star
# branches are free waves and dt = dx sits inside the RK4 limit.
C_2D = 1.0 / math.sqrt(2.0)


def problem_1d_two_interfaces(c: float = 1.0) -> ProblemSpec:
    base = Term(1.0, (sin_(TWO_PI),), cos_(TWO_PI))
    return ProblemSpec(
        id="line1d",
        dim=1,
        c=c,
        curve=Points1D([0.3, 0.7]),
        plus=Branch((base.scaled(2.0),)),
        minus=Branch((base,)),
        lower=(0.0,),
        upper=(1.0,),
        t_end=1.0,
        gamma=1.0,
    )


def problem_circle(c: float = C_2D) -> ProblemSpec:
    base = Term(1.0, (sin_(TWO_PI), sin_(TWO_PI)), cos_(TWO_PI))
    return ProblemSpec(
        id="circle",
        dim=2,
        c=c,
        curve=Circle((0.5, 0.5), 0.25),
        plus=Branch((base.scaled(-2.0),)),
        minus=Branch((base,)),
        lower=(0.0, 0.0),
        upper=(1.0, 1.0),
        t_end=1.0,
    )


def problem_star(c: float = C_2D) -> ProblemSpec:
    return ProblemSpec(
        id="star",
        dim=2,
        c=c,
        curve=ParametricStar((0.5, 0.5), 0.25, 0.05, 5),
        plus=Branch(),
        minus=Branch((Term(1.0, (exp_(math.pi), sin_(3 * math.pi)), cos_(TWO_PI)),)),
        lower=(0.0, 0.0),
        upper=(1.0, 1.0),
        t_end=1.0,
    )


def osculating_curve() -> OsculatingCircles:
    h = math.sqrt(3.0) / 2.0
    return OsculatingCircles([(0.5 + h, 0.9), (0.5 - h, 0.9), (0.5, -0.6)], h)


def problem_osculating(c: float = C_2D) -> ProblemSpec:
    return ProblemSpec(
        id="osculating",
        dim=2,
        c=c,
        curve=osculating_curve(),
        plus=Branch((Term(0.5, (sin_(TWO_PI), sin_(TWO_PI)), cos_(TWO_PI)),)),
        minus=Branch((Term(1.0, (exp_(1.0), exp_(1.0)), cos_(TWO_PI)),)),
        lower=(0.0, 0.0),
        upper=(1.0, 1.0),
        t_end=1.0,
    )


def problem_em_shielding(c: float = 1.0) -> ProblemSpec:
    """Plane scalar-potential wave outside a star, zero inside.

    ``sin(2 pi (x + y) - w t)`` is expanded into separable products.
    """
    w = 2.0 * math.sqrt(2.0) * math.pi * c
    k = TWO_PI
    ct, st = cos_(-w), sin_(-w)
    terms = (
        Term(1.0, (sin_(k), cos_(k)), ct),
        Term(1.0, (cos_(k), sin_(k)), ct),
        Term(1.0, (cos_(k), cos_(k)), st),
        Term(-1.0, (sin_(k), sin_(k)), st),
    )
    return ProblemSpec(
        id="em-shield",
        dim=2,
        c=c,
        curve=ParametricStar((0.0, 0.0), 0.25, 0.05, 5),
        plus=Branch(terms),
        minus=Branch(),
        lower=(-0.5, -0.5),
        upper=(0.5, 0.5),
        t_end=TWO_PI / w,
        dt_rule="0.75*dx/c",
        notes={"omega": w},
    )


def without_interface(problem: ProblemSpec, keep: str = "minus") -> ProblemSpec:
    """Same problem with one branch filling the whole domain."""
    branch = problem.minus if keep == "minus" else problem.plus
    return ProblemSpec(
        id=problem.id + "-continuous",
        dim=problem.dim,
        c=problem.c,
        curve=None,
        plus=branch,
        minus=branch,
        lower=problem.lower,
        upper=problem.upper,
        t_end=problem.t_end,
        gamma=problem.gamma,
        dt_rule=problem.dt_rule,
    )


PROBLEMS = {
    "line1d": problem_1d_two_interfaces,
    "circle": problem_circle,
    "star": problem_star,
    "osculating": problem_osculating,
    "em-shield": problem_em_shielding,
}


def get_problem(problem_id: str, c: float | None = None) -> ProblemSpec:
    try:
        factory = PROBLEMS[problem_id]
    except KeyError:
        raise ValueError(f"unknown problem {problem_id!r}; choose from {sorted(PROBLEMS)}") from None
    return factory() if c is None else factory(c=c)
