"""Command-line entry point: ``eebeam <experiment> --scenario FILE --out DIR``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .experiments import RUNNERS, ExperimentSpec
from .linkbudget import default_scenario_dict
from .optimizer import AlgorithmConfig

COMMANDS = {"convergence": "convergence", "sweep-pt": "sweep_pt", "sweep-p0": "sweep_p0"}


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eebeam", description="Energy-efficient multibeam precoding experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--scenario", help="scenario JSON (default: built-in K=M=8 synthetic)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seeds", type=_ints, default=list(range(1, 21)), help="e.g. 1,2,3")
        if name != "convergence":
            p.add_argument("--grid-dbw", type=_floats, default=None, help="e.g. 6,8,10")
            p.add_argument("--no-continuation", action="store_true",
                           help="start every grid point from a fresh initialisation")
        p.add_argument("--xi", type=float, default=1e-3)
        p.add_argument("--max-iter", type=int, default=50)
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("-v", "--verbose", action="store_true")
    t = sub.add_parser("scenario-template", help="print the default scenario JSON")
    t.add_argument("--users", type=int, default=8)
    t.add_argument("--feeds", type=int, default=8)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "scenario-template":
        json.dump(default_scenario_dict(args.users, args.feeds), sys.stdout, indent=2)
        sys.stdout.write("\n")
        return 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    experiment = COMMANDS[args.command]
    spec = ExperimentSpec(
        experiment=experiment,
        scenario=args.scenario,
        grid_dBW=getattr(args, "grid_dbw", None),
        seeds=args.seeds,
        out_dir=args.out,
        algorithm=AlgorithmConfig(xi=args.xi, max_outer_iter=args.max_iter),
        jobs=args.jobs,
        continuation=not getattr(args, "no_continuation", False),
    )
    res = RUNNERS[experiment](spec)
    for r in res.mean_rows()[-3:] if experiment == "convergence" else res.mean_rows():
        key = "iteration" if experiment == "convergence" else "grid_dBW"
        print(f"{key}={r[key]}  mean EE = {r['ee_gbps_per_W']:.4f} Gbps/W "
              f"(ZF {r['zf_ee_gbps_per_W']:.4f})")
    print(f"wrote {args.out}/{experiment}.csv and {experiment}_manifest.json "
          f"({res.manifest['wall_time_s']:.1f} s)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
