"""Desk-scale tuning table for the abstract kernel.

For each size, run bisection (and optionally the swarm) and print one CSV
row per size. Engine statistics replace SPIN's memory/time columns.

    python scripts/table1.py --sizes 8 16 32 --swarm
"""

import argparse
import csv
import sys

from mcautotune import PlatformConfig, ProblemSpec, bisect_min_time, swarm_min_time
from mcautotune.search import estimate_initial_time


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 16])
    ap.add_argument("--gmt", type=int, default=4)
    ap.add_argument("--np", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--swarm", action="store_true", help="add swarm columns")
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args(argv)

    plat = PlatformConfig(np=args.np, gmt=args.gmt)
    w = csv.writer(sys.stdout, lineterminator="\n")
    head = ["size", "wg", "ts", "time", "checks", "engine_states", "engine_seconds"]
    if args.swarm:
        head += ["swarm_time", "swarm_wg", "swarm_ts", "swarm_seconds"]
    w.writerow(head)
    for size in args.sizes:
        prob = ProblemSpec(size)
        t_ini = estimate_initial_time(plat, prob, args.seed)
        r = bisect_min_time(plat, prob, t_ini)
        row = [size, r.params.wg, r.params.ts, r.t_min, r.stats["checks_run"],
               r.stats["states_visited_total"], r.stats["wall_seconds"]]
        if args.swarm:
            s = swarm_min_time(plat, prob, workers=args.workers, seed=args.seed)
            row += [s.t_min, s.params.wg, s.params.ts, s.stats["wall_seconds"]]
        w.writerow(row)
        sys.stdout.flush()


if __name__ == "__main__":
    main()
