"""Command line entry point: ``cfm run|converge|stability|ablation|calibrate``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness
from .errors import CFMError
from .problems import PROBLEMS


def _n_list(values) -> list[int]:
    out = []
    for v in values:
        out += [int(s) for s in str(v).replace(",", " ").split()]
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", choices=sorted(PROBLEMS), help="problem id")
    common.add_argument("--n", nargs="+", help="grid points per axis (a list for sweeps)")
    step = common.add_mutually_exclusive_group()
    step.add_argument("--gamma", type=float, help="dt/dx")
    step.add_argument("--dt-rule", help="step-size expression in dx and c, e.g. '0.75*dx/c'")
    common.add_argument("--l-factor", type=float, help="region side in units of sqrt(sum dx_i^2), in [3, 5]")
    common.add_argument("--c1", type=float, help="Dirichlet penalty")
    common.add_argument("--c2", type=float, help="Neumann penalty")
    common.add_argument("--t-end", type=float, help="final time (default: one period)")
    common.add_argument("--wave-speed", type=float, help="override the problem's wave speed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--config", help="key=value file; command-line flags take precedence")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="cfm", description="Correction function method for the wave equation.")
    sub = parser.add_subparsers(dest="mode", required=True)

    p = sub.add_parser("run", parents=[common], help="single simulation")
    p.add_argument("--snapshot-every", type=int, help="write a field snapshot every k steps")
    p.add_argument("--dump-tiling", action="store_true", help="write the region tiling as JSON")
    p.add_argument("--diagnostics", action="store_true", help="write per-region solve diagnostics")
    p.add_argument("--naive", action="store_true", help="use the naive stage corrections")

    p = sub.add_parser("converge", parents=[common], help="error norms and fitted orders over a grid ladder")
    p.add_argument("--naive", action="store_true", help="use the naive stage corrections")

    p = sub.add_parser("stability", parents=[common], help="bisect the largest stable dt/dx")
    p.add_argument("--gamma-lo", type=float, default=1.0)
    p.add_argument("--gamma-hi", type=float, default=1.5)
    p.add_argument("--iterations", type=int, default=8)

    sub.add_parser("ablation", parents=[common], help="stage-consistent vs naive stepper orders")
    sub.add_parser("calibrate", parents=[common], help="scan c1, c2 in {1e-2, 1, 1e2} on a coarse grid")
    return parser


_CONFIG_KEYS = ("problem", "gamma", "dt_rule", "l_factor", "c1", "c2", "t_end", "wave_speed", "out",
                "snapshot_every", "dump_tiling", "diagnostics", "naive")


def config_from_args(args) -> tuple[harness.RunConfig, list[int]]:
    values = harness.load_config_file(args.config) if args.config else {}
    ns = values.pop("n", None)
    for key in _CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            values[key] = val
    if args.n:
        ns = _n_list(args.n)
    if not ns:
        ns = [harness.RunConfig.n]
    if "gamma" in values and "dt_rule" in values:
        # a flag on the command line overrides the other one from the file
        values.pop("dt_rule" if args.gamma is not None else "gamma")
    cfg = harness.RunConfig(mode=args.mode, n=ns[0], **values)
    cfg.validate()
    return cfg, ns


def _print_reports(reports) -> None:
    print(f"{'N':>6} {'dx':>12} {'dt':>12} {'L2':>12} {'Linf':>12}")
    for r in reports:
        print(f"{r.n:>6d} {r.dx:12.4e} {r.dt:12.4e} {r.l2:12.4e} {r.linf:12.4e}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg, ns = config_from_args(args)
        if args.mode == "run":
            if len(ns) != 1:
                raise ValueError("run takes a single --n")
            res = harness.run(cfg)
            _print_reports([res.report])
            if cfg.out:
                harness.write_errors_csv(Path(cfg.out) / "errors.csv", [res.report])
        elif args.mode == "converge":
            res = harness.converge(cfg, ns)
            _print_reports(res.reports)
            print(json.dumps(res.orders, sort_keys=True))
        elif args.mode == "ablation":
            res = harness.ablation(cfg, ns)
            print("modified", json.dumps(res.modified.orders, sort_keys=True))
            print("naive   ", json.dumps(res.naive.orders, sort_keys=True))
        elif args.mode == "stability":
            rows = harness.stability_sweep(cfg, ns, args.gamma_lo, args.gamma_hi, args.iterations)
            print(f"{'N':>6} {'gamma_t':>9} {'gamma_c':>9} {'gamma_cfm':>9}")
            for r in rows:
                print(f"{r.n:>6d} {r.gamma_t:9.4f} {r.gamma_c:9.4f} {r.gamma_cfm:9.4f}")
        elif args.mode == "calibrate":
            c1, c2, _ = harness.calibrate(cfg)
            print(json.dumps({"c1": c1, "c2": c2}))
    except (CFMError, ValueError, OSError) as exc:
        print(f"cfm: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
