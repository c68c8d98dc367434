"""Datasets, attribute scaling, ICP and cross-validation splits, cyclic features."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, InvalidSplitError, ParseError


@dataclass(frozen=True)
class Dataset:
    attributes: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    column_names: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.array(self.attributes, dtype=float)
        y = np.array(self.labels, dtype=float).ravel()
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise InvalidInputError(f"attributes {X.shape} do not match labels {y.shape}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvalidInputError("dataset contains non-finite values")
        if self.column_names is not None and len(self.column_names) != X.shape[1]:
            raise InvalidInputError("column_names length does not match attribute count")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "attributes", X)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def n_attributes(self) -> int:
        return self.attributes.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.attributes[idx], self.labels[idx], self.column_names)

    def with_attributes(self, X: np.ndarray) -> "Dataset":
        return Dataset(X, self.labels, self.column_names)


def load_csv(
    path: str | Path, label_column: int | str = -1, header: bool | None = None
) -> Dataset:
    """Read a numeric CSV file.

    ``label_column`` is a column index (negative counts from the end) or, when
    the file has a header, a column name. ``header=None`` sniffs for a header
    row by checking whether the first row parses as numbers.
    """
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"no such file: {path}")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{path}: empty file")

    if header is None:
        header = not _is_numeric_row(rows[0])
    names = None
    first_line = 1
    if header:
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
        first_line = 2
    if not rows:
        raise ParseError(f"{path}: no data rows")

    width = len(rows[0])
    values = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(
                f"{path}: expected {width} fields, found {len(row)}", row=i + first_line
            )
        for j, cell in enumerate(row):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise ParseError(f"{path}: non-numeric cell {cell!r}", row=i + first_line, column=j + 1) from None
            if not math.isfinite(values[i, j]):
                raise ParseError(f"{path}: non-finite cell {cell!r}", row=i + first_line, column=j + 1)

    if isinstance(label_column, str):
        if names is None or label_column not in names:
            raise ParseError(f"{path}: label column {label_column!r} not found in header")
        label_idx = names.index(label_column)
    else:
        label_idx = label_column % width if -width <= label_column < width else None
        if label_idx is None:
            raise ParseError(f"{path}: label column {label_column} out of range for {width} columns")
    if width < 2:
        raise ParseError(f"{path}: need at least one attribute column besides the label")

    keep = [j for j in range(width) if j != label_idx]
    col_names = tuple(names[j] for j in keep) if names else None
    return Dataset(values[:, keep], values[:, label_idx], col_names)


def _is_numeric_row(row: Sequence[str]) -> bool:
    try:
        for c in row:
            float(c)
    except ValueError:
        return False
    return True


def save_csv(ds: Dataset, path: str | Path, label_name: str = "label") -> None:
    names = list(ds.column_names or (f"x{j}" for j in range(ds.n_attributes)))
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + [label_name])
        for x, y in zip(ds.attributes, ds.labels):
            w.writerow([repr(float(v)) for v in x] + [repr(float(y))])


@dataclass(frozen=True)
class ScalingParams:
    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self):
        if np.any(self.maximum < self.minimum):
            raise InvalidInputError("scaling max < min")


def fit_scaling(train: Dataset) -> ScalingParams:
    if len(train) == 0:
        raise InvalidInputError("cannot fit scaling on an empty dataset")
    return ScalingParams(train.attributes.min(axis=0), train.attributes.max(axis=0))


def scale_attributes(params: ScalingParams, X: np.ndarray) -> np.ndarray:
    """Affine map of each column sending the fitted min to -1 and max to +1; constant columns go to 0."""
    X = np.asarray(X, dtype=float)
    span = params.maximum - params.minimum
    const = span == 0
    safe = np.where(const, 1.0, span)
    out = 2.0 * (X - params.minimum) / safe - 1.0
    if np.any(const):
        out[..., const] = 0.0
    return out


def apply_scaling(params: ScalingParams, ds: Dataset) -> Dataset:
    return ds.with_attributes(scale_attributes(params, ds.attributes))


def is_calibration_size(q: int) -> bool:
    """True when ``q`` has the form ``100n - 1``."""
    return q >= 99 and (q + 1) % 100 == 0


def split_icp(training: Dataset, q: int, seed: int) -> tuple[Dataset, Dataset]:
    """Split into (proper training, calibration) with ``q`` calibration rows chosen by a seeded shuffle.

    Both parts keep the input row order.
    """
    n = len(training)
    if q < 1 or q >= n:
        raise InvalidSplitError(f"calibration size q={q} must satisfy 1 <= q < {n}")
    if not is_calibration_size(q):
        warnings.warn(f"q={q} is not of the form 100n - 1", stacklevel=2)
    if q == n - 1:
        warnings.warn("proper training set has a single example", stacklevel=2)
    perm = np.random.default_rng(seed).permutation(n)
    calib = np.sort(perm[:q])
    proper = np.sort(perm[q:])
    return training.subset(proper), training.subset(calib)


@dataclass(frozen=True)
class SplitPlan:
    k: int
    q: int
    repeats: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise InvalidInputError(f"k must be >= 2, got {self.k}")
        if self.repeats < 1:
            raise InvalidInputError(f"repeats must be >= 1, got {self.repeats}")
        if self.q < 1:
            raise InvalidInputError(f"q must be >= 1, got {self.q}")


Fold = tuple[np.ndarray, np.ndarray]


def kfold_plan(n: int, plan: SplitPlan) -> list[list[Fold]]:
    """Per repeat, ``k`` (train, test) index pairs from a fresh seeded permutation.

    Fold sizes differ by at most one; the larger folds come first.
    """
    if plan.k > n:
        raise InvalidInputError(f"k={plan.k} exceeds number of examples n={n}")
    smallest_train = n - math.ceil(n / plan.k)
    if plan.q >= smallest_train:
        raise InvalidSplitError(f"q={plan.q} is not smaller than the smallest training fold ({smallest_train})")
    out = []
    for r in range(plan.repeats):
        perm = np.random.default_rng([plan.seed, r]).permutation(n)
        tests = np.array_split(perm, plan.k)
        folds = []
        for i, test in enumerate(tests):
            train = np.concatenate([t for j, t in enumerate(tests) if j != i])
            folds.append((np.sort(train), np.sort(test)))
        out.append(folds)
    return out


def write_index_file(path: str | Path, folds: list[list[Fold]]) -> None:
    """One test-index list per line, ordered by repeat then fold; the header records the shape."""
    n = sum(len(test) for _, test in folds[0])
    k = len(folds[0])
    with Path(path).open("w") as fh:
        fh.write(f"# n={n} k={k} repeats={len(folds)}\n")
        for repeat in folds:
            for _, test in repeat:
                fh.write(" ".join(str(int(i)) for i in test) + "\n")


def read_index_file(path: str | Path) -> list[list[Fold]]:
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"no such file: {path}")
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ParseError(f"{path}: missing header line", row=1)
    try:
        meta = dict(tok.split("=") for tok in lines[0][1:].split())
        n, k, repeats = int(meta["n"]), int(meta["k"]), int(meta["repeats"])
    except (ValueError, KeyError):
        raise ParseError(f"{path}: malformed header {lines[0]!r}", row=1) from None
    body = lines[1:]
    if len(body) != k * repeats:
        raise ParseError(f"{path}: expected {k * repeats} index lines, found {len(body)}")
    everything = np.arange(n)
    out = []
    for r in range(repeats):
        folds = []
        for f in range(k):
            lineno = 2 + r * k + f
            try:
                test = np.array(sorted(int(t) for t in body[r * k + f].split()), dtype=int)
            except ValueError:
                raise ParseError(f"{path}: non-integer index", row=lineno) from None
            folds.append((np.setdiff1d(everything, test), test))
        cover = np.sort(np.concatenate([t for _, t in folds]))
        if not np.array_equal(cover, everything):
            raise ParseError(f"{path}: test folds of repeat {r} do not partition 0..{n - 1}")
        out.append(folds)
    return out


def tec_features(hour, day):
    """Quadrature encoding of hour of day and day of year.

    Returns ``(sin_hour, cos_hour, sin_day, cos_day)``; accepts scalars or arrays.
    """
    h = np.asarray(hour, dtype=float)
    d = np.asarray(day, dtype=float)
    if np.any(~np.isfinite(h)) or np.any((h < 0) | (h >= 24)):
        raise InvalidInputError("hour must lie in [0, 24)")
    if np.any(~np.isfinite(d)) or np.any((d < 1) | (d > 365)):
        raise InvalidInputError("day must lie in [1, 365]")
    ah = 2 * np.pi * h / 24
    ad = 2 * np.pi * d / 365
    out = (np.sin(ah), np.cos(ah), np.sin(ad), np.cos(ad))
    if np.ndim(hour) == 0 and np.ndim(day) == 0:
        return tuple(float(v) for v in out)
    return out
