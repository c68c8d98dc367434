"""Convert the DELVE bank-8nm data to the numeric CSV the CLI reads.

The DELVE distribution (``bank-8nm.tar.gz``) holds ``bank/Dataset.data.gz``:
8192 whitespace-separated rows of 8 attributes followed by the target
(fraction of customers who leave the queue). Pass either the archive or the
extracted ``Dataset.data`` / ``Dataset.data.gz``.

    python scripts/prepare_bank.py --src bank-8nm.tar.gz --out data/bank8nm.csv
"""

from __future__ import annotations

import argparse
import csv
import gzip
import tarfile
from pathlib import Path

N_ROWS, N_COLS = 8192, 9
HEADER = [f"a{i}" for i in range(1, N_COLS)] + ["rej"]


def read_source(src: Path) -> str:
    name = src.name
    if name.endswith((".tar.gz", ".tgz", ".tar")):
        with tarfile.open(src) as tar:
            member = next(m for m in tar.getmembers() if m.name.endswith(("Dataset.data.gz", "Dataset.data")))
            blob = tar.extractfile(member).read()
        return (gzip.decompress(blob) if member.name.endswith(".gz") else blob).decode()
    if name.endswith(".gz"):
        return gzip.decompress(src.read_bytes()).decode()
    return src.read_text()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--src", type=Path, required=True, help="bank-8nm archive or Dataset.data[.gz]")
    ap.add_argument("--out", type=Path, default=Path("data/bank8nm.csv"))
    args = ap.parse_args(argv)

    rows = [line.split() for line in read_source(args.src).splitlines() if line.strip()]
    bad = [i for i, r in enumerate(rows, 1) if len(r) != N_COLS]
    if bad:
        raise SystemExit(f"row {bad[0]} has {len(rows[bad[0] - 1])} fields, expected {N_COLS}")
    if len(rows) != N_ROWS:
        raise SystemExit(f"expected {N_ROWS} rows, got {len(rows)}")

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HEADER)
        w.writerows(rows)
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
