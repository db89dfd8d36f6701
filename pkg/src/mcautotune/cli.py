"""Command-line front end.

Exit codes: 0 success, 1 property/tuning anomaly (unproven verdict or a
deadlocked config), 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from pathlib import Path

from .config import RunConfig, build_run_config
from .explorer import check_overtime
from .machine import DeadlockError, deterministic_run, format_trace
from .model import ConfigError, TuningParams, feasible, feasible_configs
from .promela import export_promela
from .search import (SearchError, best_row, bisect_min_time, estimate_initial_time,
                     exhaustive_sweep, rows_to_csv, swarm_min_time)

log = logging.getLogger("mcautotune")

OK, ANOMALY, USAGE = 0, 1, 2


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _context(rc: RunConfig) -> dict:
    return {"platform": rc.platform.to_dict(), "problem": rc.problem.to_dict(),
            "seed": rc.seed}


def _params(args, rc: RunConfig) -> TuningParams:
    if (args.wg is None) != (args.ts is None):
        raise ConfigError("--wg and --ts must be given together")
    if args.wg is None:
        return random.Random(rc.seed).choice(feasible_configs(rc.problem))
    p = TuningParams(args.wg, args.ts)
    p.validate(rc.problem.size)
    if not feasible(rc.problem, p):
        raise ConfigError(f"wg*ts={p.wg * p.ts} exceeds size={rc.problem.size} "
                          "for the minimum kernel")
    return p


def cmd_simulate(args, rc: RunConfig) -> int:
    params = _params(args, rc)
    out = rc.prepare_output()
    run = deterministic_run(rc.platform, rc.problem, params)
    trace_path = out / "simulate_trace.txt"
    trace_path.write_text(format_trace(rc.platform, rc.problem, run.trace))
    summary = {**_context(rc), **run.trace.summary(), "trace_path": str(trace_path)}
    _write_json(out / "simulate.json", summary)
    print(f"wg={params.wg} ts={params.ts}")
    print(f"time={run.time}")
    if run.result is not None:
        print(f"result={run.result}")
    print(f"transitions={run.steps}")
    return OK


def cmd_check(args, rc: RunConfig) -> int:
    if args.T is None:
        raise ConfigError("check needs -T <ticks>")
    out = rc.prepare_output()
    v = check_overtime(rc.platform, rc.problem, args.T, rc.limits)
    trace_path = None
    if v.trace is not None:
        trace_path = out / "check_trace.txt"
        trace_path.write_text(format_trace(rc.platform, rc.problem, v.trace))
    summary = {**_context(rc), "T": args.T,
               **v.summary(str(trace_path) if trace_path else None)}
    _write_json(out / "check.json", summary)
    print(f"property: G(FIN -> time > {args.T})")
    print(v)
    return OK if v.violated or v.exhaustive else ANOMALY


def cmd_tune(args, rc: RunConfig) -> int:
    out = rc.prepare_output()
    t_hi = args.T if args.T is not None else estimate_initial_time(
        rc.platform, rc.problem, rc.seed)
    print(f"T_ini={t_hi}")
    res = bisect_min_time(rc.platform, rc.problem, t_hi, rc.limits)
    (out / "tune_trace.txt").write_text(format_trace(rc.platform, rc.problem, res.trace))
    (out / "tune.csv").write_text(rows_to_csv(
        [{"size": rc.problem.size, **res.trace.summary()}]))
    _write_json(out / "tune.json", {**_context(rc), **res.to_dict()})
    print(f"checks={res.stats['checks_run']} states={res.stats['states_visited_total']}")
    print(res.line())
    return OK if res.proven else ANOMALY


def cmd_tune_swarm(args, rc: RunConfig) -> int:
    out = rc.prepare_output()
    first = args.budget_secs if args.budget_secs is not None else 10.0
    res = swarm_min_time(rc.platform, rc.problem, workers=rc.workers, seed=rc.seed,
                         first_budget=first)
    (out / "swarm_trace.txt").write_text(format_trace(rc.platform, rc.problem, res.trace))
    ranking = [{"size": rc.problem.size, **r} for r in res.stats["ranking"]]
    (out / "swarm_trails.csv").write_text(rows_to_csv(ranking))
    _write_json(out / "swarm.json", {**_context(rc), **res.to_dict()})
    print(f"rounds={res.stats['rounds']} traces={res.stats['traces_found']}")
    print(res.line())
    # a swarm result is heuristic by construction, not an anomaly
    return OK


def cmd_sweep(args, rc: RunConfig) -> int:
    out = rc.prepare_output()
    rows = exhaustive_sweep(rc.platform, rc.problem)
    text = rows_to_csv([r for r in rows if r.status == "ok"])
    (out / "sweep.csv").write_text(text)
    data = {**_context(rc), "rows": [vars(r) for r in rows]}
    try:
        b = best_row(rows)
        data["best"] = {"wg": b.wg, "ts": b.ts, "time": b.time}
    except SearchError:
        data["best"] = None
    _write_json(out / "sweep.json", data)
    sys.stdout.write(text)
    for r in rows:
        if r.status != "ok":
            print(f"# wg={r.wg} ts={r.ts} {r.status}")
    return ANOMALY if any(r.status == "deadlock" for r in rows) else OK


def cmd_export_promela(args, rc: RunConfig) -> int:
    out = rc.prepare_output()
    path = out / f"{rc.problem.kernel}_size{rc.problem.size}.pml"
    path.write_text(export_promela(rc.platform, rc.problem, args.full_hierarchy))
    print(path)
    return OK


COMMANDS = {
    "simulate": (cmd_simulate, "run one schedule of one config"),
    "check": (cmd_check, "check G(FIN -> time > T) over all configs"),
    "tune": (cmd_tune, "bisection search for the minimal time"),
    "tune-swarm": (cmd_tune_swarm, "randomised swarm search for the minimal time"),
    "sweep": (cmd_sweep, "simulate every config once"),
    "export-promela": (cmd_export_promela, "write the model as SPIN input"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--size", type=int)
    common.add_argument("--kernel", choices=["abstract", "minimum"])
    common.add_argument("--input", help="input array, one integer per line")
    common.add_argument("--nd", type=int)
    common.add_argument("--nu", type=int)
    common.add_argument("--np", type=int)
    common.add_argument("--gmt", type=int)
    common.add_argument("--wg", type=int)
    common.add_argument("--ts", type=int)
    common.add_argument("-T", type=int, help="time bound in ticks")
    common.add_argument("--workers", type=int, default=4)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--max-depth", type=int)
    common.add_argument("--budget-secs", type=float)
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--full-hierarchy", action="store_true",
                        help="export-promela: keep all devices and units")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="mcautotune",
                                description="Auto-tuning by model checking.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    func, _ = COMMANDS[args.command]
    try:
        rc = build_run_config(args.config, nd=args.nd, nu=args.nu, np=args.np, gmt=args.gmt,
                              size=args.size, kernel=args.kernel, input_path=args.input,
                              max_depth=args.max_depth, budget_secs=args.budget_secs,
                              workers=args.workers, seed=args.seed, out=args.out)
        return func(args, rc)
    except (ConfigError, ValueError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE
    except (SearchError, DeadlockError) as e:
        print(f"error: {e}", file=sys.stderr)
        return ANOMALY


if __name__ == "__main__":
    sys.exit(main())
