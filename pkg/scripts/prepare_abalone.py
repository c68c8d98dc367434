"""Convert the UCI Abalone data to the numeric CSV the CLI reads.

Sources, in order of preference:
  1. ``--raw abalone.data`` (the file from the UCI repository, no header),
  2. the copy bundled inside the ``scikit-lego`` wheel (``pip install scikit-lego``
     or a downloaded wheel passed via ``--wheel``).

Sex is coded M=1, F=2, I=3 so the attribute count stays at 8.

    python scripts/prepare_abalone.py --out data/abalone.csv
"""

from __future__ import annotations

import argparse
import csv
import io
import zipfile
from pathlib import Path

SEX = {"M": "1", "F": "2", "I": "3"}
HEADER = ["sex", "length", "diameter", "height", "whole_weight", "shucked_weight",
          "viscera_weight", "shell_weight", "rings"]


def rows_from_raw(text: str, has_header: bool):
    reader = csv.reader(io.StringIO(text))
    if has_header:
        next(reader)
    for row in reader:
        if row:
            yield [SEX[row[0].strip()]] + [c.strip() for c in row[1:]]


def from_sklego_wheel(wheel: Path | None) -> str:
    if wheel is None:
        import sklego  # noqa: F401  only to locate the package

        path = Path(sklego.__file__).parent / "data" / "abalone.zip"
        blob = path.read_bytes()
    else:
        blob = zipfile.ZipFile(wheel).read("sklego/data/abalone.zip")
    inner = zipfile.ZipFile(io.BytesIO(blob))
    return inner.read(inner.namelist()[0]).decode()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--raw", type=Path, help="UCI abalone.data file")
    ap.add_argument("--wheel", type=Path, help="scikit-lego wheel containing sklego/data/abalone.zip")
    ap.add_argument("--out", type=Path, default=Path("data/abalone.csv"))
    args = ap.parse_args(argv)

    if args.raw:
        rows = list(rows_from_raw(args.raw.read_text(), has_header=False))
    else:
        rows = list(rows_from_raw(from_sklego_wheel(args.wheel), has_header=True))
    if len(rows) != 4177:
        raise SystemExit(f"expected 4177 rows, got {len(rows)}")

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HEADER)
        w.writerows(rows)
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
