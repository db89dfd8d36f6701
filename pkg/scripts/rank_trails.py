"""Rank trace files by time, then transition count.

Each file is replayed against the model before it is ranked; files that do
not replay are reported on stderr and skipped.

    python scripts/rank_trails.py out/ --size 8
"""

import argparse
import sys
from pathlib import Path

from mcautotune import (PlatformConfig, ProblemSpec, TraceError, load_trace, rank_trails,
                        replay, rows_to_csv)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("directory")
    ap.add_argument("--size", type=int, required=True)
    ap.add_argument("--kernel", default="abstract", choices=["abstract", "minimum"])
    ap.add_argument("--gmt", type=int, default=4)
    ap.add_argument("--np", type=int, default=4)
    args = ap.parse_args(argv)

    plat = PlatformConfig(np=args.np, gmt=args.gmt)
    prob = ProblemSpec(args.size, args.kernel)
    traces = []
    for path in sorted(Path(args.directory).glob("*.txt")):
        try:
            t = load_trace(path.read_text())
            replay(plat, prob, t)
        except TraceError as e:
            print(f"skip {path}: {e}", file=sys.stderr)
            continue
        traces.append(t)
    sys.stdout.write(rows_to_csv({"size": args.size, **d} for d in rank_trails(traces)))


if __name__ == "__main__":
    main()
