"""Run configurations, error norms, convergence fits and stability sweeps.

Everything here is deterministic: grids, tilings and step sequences depend
only on the configuration, and every writer emits floats with ``repr`` so
two runs of the same configuration give byte-identical files.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cfsolve import assemble, diagnostics, solve
from .errors import CoverageFailure, InstabilityDetected
from .grid import Grid, classify_nodes, write_snapshot
from .march import (
    CorrectionOperator,
    NoCorrections,
    _Forcing,
    initial_state,
    naive_rk4_step,
    rk4_step,
    stability_limit,
)
from .problems import PROBLEMS, ProblemSpec, evaluate_dt_rule, get_problem, without_interface
from .regions import L_FACTOR_RANGE, build_tiling, dump_tiling

log = logging.getLogger(__name__)

MODES = ("run", "converge", "stability", "ablation", "calibrate")
L_FACTOR_STEP = 0.5
BLOWUP_FACTOR = 10.0
CALIBRATION_VALUES = (1e-2, 1.0, 1e2)


@dataclass
class RunConfig:
    """Parameters of a single simulation (or of every level of a sweep).

    ``gamma`` is the ratio dt/dx.  When neither ``gamma`` nor ``dt_rule``
    is set the problem's default step rule is used.
    """

    problem: str = "line1d"
    n: int = 100
    gamma: float | None = None
    dt_rule: str | None = None
    l_factor: float = 4.0
    c1: float = 1.0
    c2: float = 1.0
    t_end: float | None = None
    out: str | None = None
    mode: str = "run"
    wave_speed: float | None = None
    naive: bool = False
    exact_gamma: bool = False
    snapshot_every: int = 0
    dump_tiling: bool = False
    diagnostics: bool = False

    def validate(self) -> RunConfig:
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}; choose from {sorted(PROBLEMS)}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if int(self.n) != self.n or self.n < 5:
            raise ValueError(f"n must be an integer >= 5, got {self.n}")
        lo, hi = L_FACTOR_RANGE
        if not lo <= self.l_factor <= hi:
            raise ValueError(f"l_factor must lie in [{lo}, {hi}], got {self.l_factor}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.gamma is not None and self.dt_rule is not None:
            raise ValueError("give either gamma or dt_rule, not both")
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError("penalty coefficients c1, c2 must be positive")
        if self.t_end is not None and self.t_end < 0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if self.wave_speed is not None and not self.wave_speed > 0:
            raise ValueError(f"wave speed must be positive, got {self.wave_speed}")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0")
        return self

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)


def _coerce(name: str, text: str):
    kinds = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    if name not in kinds:
        raise ValueError(f"unknown configuration key {name!r}")
    kind = str(kinds[name])
    text = text.strip()
    if text.lower() in ("none", "") and "None" in kind:
        return None
    if kind.startswith("bool"):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {text!r}")
    if kind.startswith("int"):
        return int(text)
    if kind.startswith("float"):
        return float(text)
    return text


def load_config_file(path) -> dict:
    """Read ``key = value`` lines (``#`` starts a comment) into a dict.

    ``n`` may hold a comma- or space-separated list for sweep modes.
    """
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "n":
            values["n"] = [int(v) for v in val.replace(",", " ").split()]
        else:
            values[key] = _coerce(key, val)
    return values


# ---------------------------------------------------------------------------
# Single run
# ---------------------------------------------------------------------------


@dataclass
class ErrorReport:
    """Space-time error norms accumulated over every time level incl. t = 0.

    ``l2 = sqrt(sum e^2 / (n_x * n_t))`` with ``n_x`` the total node count
    and ``n_t`` the number of time levels; ``linf`` is the max over both.
    """

    problem: str
    n: int
    dx: float
    dt: float
    steps: int
    l2: float
    linf: float
    n_x: int
    n_t: int
    l_factor: float
    series_max: np.ndarray = field(repr=False)
    series_sumsq: np.ndarray = field(repr=False)

    def row(self) -> dict:
        return {"N": self.n, "dx": self.dx, "dt": self.dt, "L2": self.l2, "Linf": self.linf}


def norms_from_series(sumsq, maxima, n_x: int) -> tuple[float, float]:
    sumsq = np.asarray(sumsq, dtype=float)
    l2 = math.sqrt(float(np.sum(sumsq)) / (n_x * sumsq.size))
    return l2, float(np.max(maxima))


@dataclass
class RunResult:
    report: ErrorReport
    state: object
    grid: Grid
    sidemap: object
    tiling: object
    problem: ProblemSpec


def step_plan(problem: ProblemSpec, dx: float, config: RunConfig) -> tuple[int, float, float]:
    """Number of steps, step size and end time for a configuration.

    Normally the nominal step is shrunk slightly so the steps land on
    ``t_end`` exactly.  With ``exact_gamma`` the step is ``gamma * dx``
    verbatim and the run may overshoot ``t_end`` by less than one step.
    """
    t_end = problem.t_end if config.t_end is None else float(config.t_end)
    if config.dt_rule is not None:
        dt = evaluate_dt_rule(config.dt_rule, dx=dx, c=problem.c)
    else:
        dt = problem.step_size(dx, config.gamma)
    if t_end == 0.0:
        return 0, dt, 0.0
    steps = max(1, int(math.ceil(t_end / dt - 1e-9)))
    if config.exact_gamma:
        return steps, dt, steps * dt
    return steps, t_end / steps, t_end


def _tiling_with_retry(sidemap, problem, grid, l_factor, dt):
    lf = l_factor
    while True:
        try:
            return build_tiling(sidemap, problem.curve, grid, lf, 0.0, dt), lf
        except CoverageFailure as exc:
            nxt = lf + L_FACTOR_STEP
            if nxt > L_FACTOR_RANGE[1] + 1e-12:
                raise
            log.warning("coverage failure at node %s with L factor %.2f; retrying with %.2f", exc.node, lf, nxt)
            lf = nxt


def run(config: RunConfig, problem: ProblemSpec | None = None, observer=None,
        blowup_factor: float | None = None) -> RunResult:
    """Tile, march to ``t_end`` and accumulate error norms.

    ``observer(step, state, exact)`` is called at every time level.  With
    ``blowup_factor`` set, a solution exceeding that multiple of the largest
    exact value seen so far raises :class:`InstabilityDetected`.
    """
    config.validate()
    problem = problem or get_problem(config.problem, c=config.wave_speed)
    grid = Grid(problem.dim, config.n, problem.lower, problem.upper)
    sidemap = classify_nodes(grid, problem.curve)
    steps, dt, _ = step_plan(problem, grid.dx, config)

    tiling, lf = _tiling_with_retry(sidemap, problem, grid, config.l_factor, dt)
    if len(tiling) == 0:
        corrections = NoCorrections(sidemap.pair_node.size)
    else:
        corrections = CorrectionOperator(problem, grid, sidemap, tiling, dt, c1=config.c1, c2=config.c2,
                                         naive=config.naive)
    stepper = naive_rk4_step if config.naive else rk4_step
    forcing = _Forcing(problem, grid, sidemap)

    out = Path(config.out) if config.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        if config.dump_tiling:
            dump_tiling(tiling, out / f"tiling_N{config.n}.json")
        if config.diagnostics:
            write_diagnostics(out / f"diagnostics_N{config.n}.json", tiling, problem, dt, config)

    exact_at = problem.exact_sampler(grid.coords(), sidemap.sign)
    state = initial_state(problem, grid, sidemap)
    maxima = np.empty(steps + 1)
    sumsq = np.empty(steps + 1)
    exact_max = 0.0
    for k in range(steps + 1):
        if k > 0:
            state = stepper(state, problem, grid, sidemap, corrections, dt, forcing)
        exact = exact_at(state.t)
        if not np.all(np.isfinite(state.u)):
            raise InstabilityDetected(k, state.t)
        exact_max = max(exact_max, float(np.max(np.abs(exact))))
        if blowup_factor is not None and np.max(np.abs(state.u)) > blowup_factor * exact_max:
            raise InstabilityDetected(k, state.t, f"max|u| exceeds {blowup_factor:g}x the exact maximum")
        err = state.u - exact
        maxima[k] = np.max(np.abs(err))
        sumsq[k] = np.sum(err * err)
        if observer is not None:
            observer(k, state, exact)
        if out is not None and config.snapshot_every and k % config.snapshot_every == 0:
            write_snapshot(out / f"snapshot_N{config.n}_{k:06d}.csv", grid, state, problem.id)

    l2, linf = norms_from_series(sumsq, maxima, grid.size)
    report = ErrorReport(problem.id, config.n, grid.dx, dt, steps, l2, linf, grid.size, steps + 1, lf,
                         maxima, sumsq)
    if out is not None:
        write_snapshot(out / f"final_N{config.n}.csv", grid, state, problem.id)
    return RunResult(report, state, grid, sidemap, tiling, problem)


def write_diagnostics(path, tiling, problem, dt, config: RunConfig) -> None:
    """Per-region ``{node, cond(M), J_p_min, |w|}`` for the first step."""
    rows = []
    for region in tiling.at_time(0.0, dt).regions:
        system = assemble(region, problem, c1=config.c1, c2=config.c2)
        rows.append(diagnostics(system, solve(system)))
    Path(path).write_text(json.dumps(rows, indent=1, sort_keys=True))


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def fit_order(dx, err) -> float:
    """Least-squares slope of log(err) against log(dx)."""
    dx = np.asarray(dx, dtype=float)
    err = np.asarray(err, dtype=float)
    if dx.size < 2:
        raise ValueError("need at least two levels to fit an order")
    return float(np.polyfit(np.log(dx), np.log(err), 1)[0])


@dataclass
class ConvergenceResult:
    reports: list[ErrorReport]
    orders: dict[str, float]


def _levels(ns) -> list[int]:
    ns = [int(n) for n in ns]
    if len(ns) < 3:
        raise ValueError(f"need at least 3 grid levels, got {len(ns)}")
    return ns


def converge(config: RunConfig, ns, problem: ProblemSpec | None = None) -> ConvergenceResult:
    reports = [run(config.replace(n=n), problem).report for n in _levels(ns)]
    dx = [r.dx for r in reports]
    orders = {
        "L2": fit_order(dx, [r.l2 for r in reports]),
        "Linf": fit_order(dx, [r.linf for r in reports]),
    }
    if config.out:
        out = Path(config.out)
        write_errors_csv(out / "errors.csv", reports)
        write_order_json(out / "order.json", orders)
    return ConvergenceResult(reports, orders)


@dataclass
class AblationResult:
    modified: ConvergenceResult
    naive: ConvergenceResult

    @property
    def gap(self) -> float:
        return self.modified.orders["Linf"] - self.naive.orders["Linf"]


def ablation(config: RunConfig, ns) -> AblationResult:
    """Convergence of the stage-consistent and the naive stepper side by side."""
    ns = _levels(ns)
    sub = None
    if config.out:
        sub = Path(config.out)
    mod = converge(config.replace(naive=False, out=str(sub / "modified") if sub else None), ns)
    nai = converge(config.replace(naive=True, out=str(sub / "naive") if sub else None), ns)
    result = AblationResult(mod, nai)
    if sub is not None:
        summary = {"modified": mod.orders, "naive": nai.orders, "gap_Linf": result.gap}
        (sub / "ablation.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    return result


def is_stable(config: RunConfig, gamma: float, problem: ProblemSpec | None = None,
              blowup_factor: float = BLOWUP_FACTOR) -> bool:
    """One-period run at ``dt = gamma * dx``; unstable if it blows up."""
    try:
        run(config.replace(gamma=gamma, dt_rule=None, exact_gamma=True, out=None), problem,
            blowup_factor=blowup_factor)
    except InstabilityDetected:
        return False
    return True


def bisect_gamma(config: RunConfig, problem: ProblemSpec | None = None, lo: float = 1.0, hi: float = 1.5,
                 iterations: int = 8) -> float:
    """Midpoint of the final bracket between the last stable and unstable gamma."""
    if not is_stable(config, lo, problem):
        log.warning("unstable already at gamma=%g", lo)
        return lo
    if is_stable(config, hi, problem):
        log.warning("still stable at gamma=%g", hi)
        return hi
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if is_stable(config, mid, problem):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class StabilityRow:
    n: int
    gamma_t: float
    gamma_c: float
    gamma_cfm: float


def stability_sweep(config: RunConfig, ns, lo: float = 1.0, hi: float = 1.5, iterations: int = 8,
                    continuous: bool = True) -> list[StabilityRow]:
    """Measured stability limits with and without the interface."""
    problem = get_problem(config.problem, c=config.wave_speed)
    rows = []
    for n in ns:
        cfg = config.replace(n=int(n))
        grid = Grid(problem.dim, cfg.n, problem.lower, problem.upper)
        gamma_t = stability_limit(problem.c, grid.dx, problem.dim)
        gamma_c = float("nan")
        if continuous:
            gamma_c = bisect_gamma(cfg, without_interface(problem), lo, hi, iterations)
        gamma_cfm = bisect_gamma(cfg, problem, lo, hi, iterations)
        rows.append(StabilityRow(cfg.n, gamma_t, gamma_c, gamma_cfm))
        log.info("N=%d gamma_t=%.4f gamma_c=%.4f gamma_cfm=%.4f", cfg.n, gamma_t, gamma_c, gamma_cfm)
    if config.out:
        write_stability_csv(Path(config.out) / "stability.csv", rows)
    return rows


def calibrate(config: RunConfig, values=CALIBRATION_VALUES) -> tuple[float, float, list[dict]]:
    """Pick (c1, c2) with the smallest max error on ``config.n``.

    Ties go to the first pair in scan order, so the result is deterministic.
    """
    table = []
    best = None
    for c1 in values:
        for c2 in values:
            rep = run(config.replace(c1=c1, c2=c2, out=None)).report
            table.append({"c1": c1, "c2": c2, "L2": rep.l2, "Linf": rep.linf})
            if best is None or rep.linf < best[2]:
                best = (c1, c2, rep.linf)
    if config.out:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "calibration.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["c1", "c2", "L2", "Linf"])
            for r in table:
                w.writerow([repr(float(r[k])) for k in ("c1", "c2", "L2", "Linf")])
    return best[0], best[1], table


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------


def write_errors_csv(path, reports) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N", "dx", "dt", "L2", "Linf"])
        for r in reports:
            w.writerow([r.n, repr(float(r.dx)), repr(float(r.dt)), repr(float(r.l2)), repr(float(r.linf))])


def write_order_json(path, orders: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({k: float(v) for k, v in orders.items()}, indent=1, sort_keys=True) + "\n")


def write_stability_csv(path, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N", "gamma_t", "gamma_c", "gamma_cfm"])
        for r in rows:
            w.writerow([r.n, repr(float(r.gamma_t)), repr(float(r.gamma_c)), repr(float(r.gamma_cfm))])
