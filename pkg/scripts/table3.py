"""Minimum-kernel sweep: every config per size, ranked by time.

Prints CSV rows ``size,wg,ts,time,transitions`` and marks the best row per
size, to show how WG and TS move the run time.

    python scripts/table3.py --sizes 16 32 64
"""

import argparse
import sys

from mcautotune import PlatformConfig, ProblemSpec, best_row, exhaustive_sweep, rows_to_csv


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[16, 32, 64])
    ap.add_argument("--gmt", type=int, default=4)
    ap.add_argument("--np", type=int, default=4)
    args = ap.parse_args(argv)

    plat = PlatformConfig(np=args.np, gmt=args.gmt)
    for size in args.sizes:
        rows = exhaustive_sweep(plat, ProblemSpec(size, "minimum"))
        ok = [r for r in rows if r.status == "ok"]
        sys.stdout.write(rows_to_csv(ok))
        b = best_row(rows)
        skipped = len(rows) - len(ok)
        print(f"# size={size} best wg={b.wg} ts={b.ts} time={b.time} "
              f"({skipped} configs skipped: wg*ts > size)")


if __name__ == "__main__":
    main()
