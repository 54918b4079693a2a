"""Command line front end: run sweeps, aggregate results, move scenarios.

Exit status is 0 on success and 2 on any validation or I/O failure, with a
one-line message on stderr.  The worker count for `simulate` falls back to
the V2XCOEX_JOBS environment variable when --jobs is not given.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import harness
from .scenario import ScenarioError, generate_urban, load_scenario, \
    save_scenario

JOBS_ENV = "V2XCOEX_JOBS"


def _jobs_default() -> int:
    raw = os.environ.get(JOBS_ENV, "1")
    try:
        jobs = int(raw)
    except ValueError:
        raise harness.ConfigError(
            f"{JOBS_ENV}={raw!r} is not an integer") from None
    if jobs < 1:
        raise harness.ConfigError(f"{JOBS_ENV} must be >= 1")
    return jobs


def _cmd_simulate(args) -> int:
    cfg = harness.load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise harness.ConfigError("--seed must be >= 0")
        cfg = replace(cfg, seed=args.seed)
    jobs = args.jobs if args.jobs is not None else _jobs_default()
    if jobs < 1:
        raise harness.ConfigError("--jobs must be >= 1")
    result = harness.run_sweep(cfg, jobs=jobs)
    out = args.out or cfg.out or "results.csv"
    harness.write_result(result, out)
    print(f"wrote {len(result.rows)} rows to {out}")
    return 0


def _cmd_summarize(args) -> int:
    axes = tuple(a.strip() for a in args.group_by.split(",") if a.strip())
    result = harness.read_result(args.inp)
    table = harness.summarize(result, axes)
    sys.stdout.write(harness.summary_to_csv(table, axes))
    return 0


def _cmd_scenario_export(args) -> int:
    cfg = (harness.load_config(args.config) if args.config
           else harness.config_from_json({}))
    speed = args.speed if args.speed is not None else cfg.sweep.speeds_kmh[0]
    scenario = generate_urban(cfg.scenario_config(speed,
                                                  cfg.sweep.gammas_db[0]),
                              seed=np.random.SeedSequence(args.seed))
    save_scenario(scenario, args.json)
    print(f"wrote {len(scenario.vehicles)} vehicles to {args.json}")
    return 0


def _cmd_scenario_import(args) -> int:
    scenario = load_scenario(args.json)
    spectrum = scenario.spectrum
    print(f"{args.json}: {len(scenario.vehicles)} vehicles, "
          f"{len(scenario.users())} users, "
          f"K={spectrum.k_dedicated}+{spectrum.k_unlicensed}, "
          f"T={scenario.sps.subframes}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="v2xcoex",
        description="Seeded coexistence scheduling experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a sweep from a JSON config")
    sim.add_argument("--config", required=True, help="experiment JSON path")
    sim.add_argument("--out", help="result CSV path "
                                   "(default: config 'out' or results.csv)")
    sim.add_argument("--seed", type=int, help="override the master seed")
    sim.add_argument("--jobs", type=int,
                     help=f"worker processes (default: ${JOBS_ENV} or 1)")
    sim.set_defaults(func=_cmd_simulate)

    summ = sub.add_parser("summarize",
                          help="aggregate a result CSV by sweep axes")
    summ.add_argument("--in", dest="inp", required=True,
                      help="result CSV path")
    summ.add_argument("--group-by", dest="group_by", required=True,
                      help="comma separated axes out of "
                           + ",".join(harness.GROUP_AXES))
    summ.set_defaults(func=_cmd_summarize)

    scn = sub.add_parser("scenario", help="export or import scenario JSON")
    actions = scn.add_subparsers(dest="action", required=True)
    exp = actions.add_parser("export",
                             help="generate a scenario and write it as JSON")
    exp.add_argument("--json", required=True, help="output path")
    exp.add_argument("--config", help="experiment JSON supplying the "
                                      "scenario and phy blocks")
    exp.add_argument("--seed", type=int, default=0,
                     help="placement seed (default 0)")
    exp.add_argument("--speed", type=float,
                     help="vehicle speed in km/h (default: first sweep "
                          "entry)")
    exp.set_defaults(func=_cmd_scenario_export)
    imp = actions.add_parser("import",
                             help="load and validate a scenario JSON")
    imp.add_argument("--json", required=True, help="input path")
    imp.set_defaults(func=_cmd_scenario_import)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (harness.ConfigError, harness.HarnessError, ScenarioError,
            ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
