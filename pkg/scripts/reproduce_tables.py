"""Run the Abalone and Bank benchmarks and write their reports under results/.

    python scripts/reproduce_tables.py                 # both, skipping missing data
    python scripts/reproduce_tables.py --only abalone --jobs 4

Each benchmark goes through the same code path as ``icpnn run``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from icpnn.cli import main as icpnn_main

BENCHMARKS = {
    # name: (csv file, k, q, hidden units, measure args)
    "abalone": ("abalone.csv", 4, 299, 8, ["--measure", "all", "--beta", "0", "0.5"]),
    "bank": ("bank8nm.csv", 2, 399, 13, ["--measure", "all", "--beta", "0", "0.5"]),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--data-dir", type=Path, default=Path("data"))
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--only", choices=sorted(BENCHMARKS))
    ap.add_argument("--repeats", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)

    status = 0
    for name, (fname, k, q, hidden, extra) in BENCHMARKS.items():
        if args.only and name != args.only:
            continue
        path = args.data_dir / fname
        if not path.exists():
            print(f"[{name}] {path} not found, skipping (see scripts/prepare_{name}.py)", file=sys.stderr)
            status = 2
            continue
        print(f"[{name}] k={k} q={q} hidden={hidden} repeats={args.repeats}")
        code = icpnn_main(["run", "--data", str(path), "--k", str(k), "--q", str(q),
                           "--hidden", str(hidden), "--repeats", str(args.repeats),
                           "--seed", str(args.seed), "--jobs", str(args.jobs),
                           "--out", str(args.out / name)] + extra)
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main())
