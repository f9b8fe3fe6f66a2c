"""``einselect`` command line: analyze, simulate, sweep.

Exit codes: 0 pass, 2 negative verdict, 1 operational error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import EinselectError
from .experiment import RunConfig, run_analyze, run_simulate, run_sweep

log = logging.getLogger("einselect")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="einselect", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("analyze", "check separability (A) and nondemolition (B)"),
        ("simulate", "compute correlation amplitudes and criterion (b)"),
        ("sweep", "environment-size sweep: criteria (a)-(d) and overall verdict"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        p.add_argument("--output-dir", type=Path, help="override output_dir from the config")
        if name != "analyze":
            p.add_argument("--figures", action="store_true", help="also render PNG figures")
        if name == "sweep":
            p.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = RunConfig.load(args.config)
        if args.output_dir is not None:
            cfg.output_dir = args.output_dir
        if args.command == "analyze":
            report, code = run_analyze(cfg)
            v = report["verdict"]
            print(f"separable={v['separable']} nondemolition={v['nondemolition']}")
            if "witness" in v:
                w = v["witness"]
                pair = f"({w['alpha']}, {w['beta']})"
                print(f"witness: {w['side']} factors {pair}, ||[.,.]||_F = {w['commutator_norm']:.6g}")
        elif args.command == "simulate":
            report, code = run_simulate(cfg, figures=args.figures)
            for pair, res in report.get("cond_b", {}).items():
                print(f"z_{pair}: |<z>_T| = {res['final_abs_running_average']:.3e} pass={res['pass']}")
            if "error" in report:
                print(report["error"])
        else:
            if args.jobs is not None and args.jobs < 1:
                raise EinselectError("--jobs: must be >= 1")
            report, code = run_sweep(cfg, jobs=args.jobs, figures=args.figures)
            print(f"r1_verdict={report['r1_verdict']}")
            for reason in report["reasons"]:
                print(f"  {reason}")
        log.info("wrote %s", cfg.output_dir)
        return code
    except (EinselectError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
