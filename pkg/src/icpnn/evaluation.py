"""Point-prediction metrics, interval width statistics and the cross-validation harness."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from . import conformal
from .data import Dataset, SplitPlan, apply_scaling, fit_scaling, kfold_plan, split_icp
from .errors import DegenerateInputError, ICPError, InvalidInputError
from .regressors import MlpConfig, fit_residual_model, predict, predict_mu, train_mlp

log = logging.getLogger(__name__)

DEFAULT_DELTAS = (0.10, 0.05, 0.01)

# per-(repeat, fold) seed offsets derived from the plan seed
_CALIB_SEED_OFFSET = 10_000
_MLP_SEED_STRIDE = 1_000


def _paired(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise InvalidInputError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise InvalidInputError("empty input")
    return a, b


def rmse(predictions, labels) -> float:
    p, y = _paired(predictions, labels)
    return float(np.sqrt(np.mean((p - y) ** 2)))


def correlation(predictions, labels) -> float:
    """Pearson correlation coefficient."""
    p, y = _paired(predictions, labels)
    pc, yc = p - p.mean(), y - y.mean()
    denom = np.sqrt(np.sum(pc * pc) * np.sum(yc * yc))
    if denom == 0:
        raise DegenerateInputError("correlation undefined for a constant sequence")
    return float(np.clip(np.sum(pc * yc) / denom, -1.0, 1.0))


def quantile(values, p: float) -> float:
    """Linear interpolation between order statistics at 1-based position ``1 + (n-1)p``."""
    return float(np.quantile(np.asarray(values, dtype=float), p, method="linear"))


@dataclass(frozen=True)
class WidthStats:
    decile_10: float
    quartile_25: float
    median: float
    quartile_75: float
    decile_90: float
    interdecile_mean: float


def width_stats(widths) -> WidthStats:
    w = np.asarray(widths, dtype=float).ravel()
    if w.size == 0:
        raise InvalidInputError("no widths")
    if np.any(~np.isfinite(w)) or np.any(w < 0):
        raise InvalidInputError("widths must be finite and non-negative")
    d10, q25, med, q75, d90 = np.quantile(w, [0.1, 0.25, 0.5, 0.75, 0.9], method="linear")
    inner = w[(w >= d10) & (w <= d90)]
    # tiny samples can have no value between the deciles
    idm = float(inner.mean()) if inner.size else float(med)
    return WidthStats(float(d10), float(q25), float(med), float(q75), float(d90), idm)


def miscoverage(intervals: Sequence[conformal.PredictionInterval], labels) -> float:
    """Percentage of labels outside their interval; a label on an endpoint is covered."""
    labels = np.asarray(labels, dtype=float).ravel()
    if len(intervals) != labels.size:
        raise InvalidInputError(f"length mismatch: {len(intervals)} intervals vs {labels.size} labels")
    if labels.size == 0:
        raise InvalidInputError("empty input")
    lo = np.array([iv.lower for iv in intervals])
    hi = np.array([iv.upper for iv in intervals])
    return miscoverage_bounds(lo, hi, labels)


def miscoverage_bounds(lower, upper, labels) -> float:
    lower, labels = _paired(lower, labels)
    upper, _ = _paired(upper, labels)
    return float(100.0 * np.mean((labels < lower) | (labels > upper)))


@dataclass(frozen=True)
class Measure:
    """Nonconformity measure choice: ``absolute`` or ``normalized`` with a ``beta``."""

    kind: str = "absolute"
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("absolute", "normalized"):
            raise InvalidInputError(f"unknown measure {self.kind!r}")
        if self.beta < 0:
            raise InvalidInputError("beta must be >= 0")

    @property
    def label(self) -> str:
        return "absolute" if self.kind == "absolute" else f"normalized(beta={self.beta:g})"


@dataclass(frozen=True)
class LevelResult:
    delta: float
    median_width: float
    interdecile_mean_width: float
    error_percentage: float
    widths: WidthStats


@dataclass(frozen=True)
class EvaluationReport:
    measure: Measure
    levels: tuple[LevelResult, ...]
    rmse: float
    correlation: float
    n_predictions: int
    metadata: dict = field(default_factory=dict)

    def level(self, delta: float) -> LevelResult:
        for lv in self.levels:
            if abs(lv.delta - delta) < 1e-12:
                return lv
        raise KeyError(delta)

    @property
    def error_percentages(self) -> tuple[float, ...]:
        return tuple(lv.error_percentage for lv in self.levels)


@dataclass
class FoldOutput:
    """Everything one (repeat, fold) cell contributes to the pooled report."""

    repeat: int
    fold: int
    y_hat: np.ndarray
    labels: np.ndarray
    # measure label -> (lower, upper) arrays of shape (n_deltas, n_test)
    bounds: dict[str, tuple[np.ndarray, np.ndarray]]


def run_fold(
    dataset: Dataset,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    config: MlpConfig,
    q: int,
    measures: Sequence[Measure],
    deltas: Sequence[float],
    seed: int,
    repeat: int = 0,
    fold: int = 0,
) -> FoldOutput:
    """Scale, split, train, calibrate and predict for a single train/test split."""
    train, test = dataset.subset(train_idx), dataset.subset(test_idx)
    scaling = fit_scaling(train)
    train, test = apply_scaling(scaling, train), apply_scaling(scaling, test)
    proper, calib = split_icp(train, q, seed + _CALIB_SEED_OFFSET)
    model = train_mlp(proper, config)

    cal_hat = predict(model, calib.attributes)
    test_hat = predict(model, test.attributes)
    resid = None
    bounds = {}
    for m in measures:
        if m.kind == "absolute":
            cal_scores = conformal.scores_absolute(calib.labels, cal_hat)
            scale = None
        else:
            if resid is None:
                resid = fit_residual_model(proper, model)
            cal_scores = conformal.scores_normalized(
                calib.labels, cal_hat, predict_mu(resid, calib.attributes), m.beta
            )
            scale = conformal.normalizer(predict_mu(resid, test.attributes), m.beta)
        cal = conformal.build_calibration(cal_scores)
        lo = np.empty((len(deltas), len(test)))
        hi = np.empty_like(lo)
        for i, d in enumerate(deltas):
            lo[i], hi[i] = conformal.interval_bounds(test_hat, cal, d, scale)
        bounds[m.label] = (lo, hi)
    return FoldOutput(repeat, fold, test_hat, test.labels.copy(), bounds)


def _run_cell(args) -> FoldOutput:
    dataset, tr, te, config, q, measures, deltas, seed, r, f = args
    try:
        return run_fold(dataset, tr, te, config, q, measures, deltas, seed, r, f)
    except ICPError as exc:
        raise type(exc)(f"repeat {r}, fold {f}: {exc}") from exc


def run_experiments(
    dataset: Dataset,
    config: MlpConfig,
    plan: SplitPlan,
    measures: Sequence[Measure],
    deltas: Sequence[float] = DEFAULT_DELTAS,
    jobs: int = 1,
    folds=None,
    metadata: dict | None = None,
) -> dict[str, EvaluationReport]:
    """Full repeated k-fold protocol for several measures sharing the same trained networks.

    Returns one report per measure, keyed by :attr:`Measure.label`.
    """
    measures = list(measures)
    if not measures:
        raise InvalidInputError("no measures requested")
    deltas = tuple(float(d) for d in deltas)
    for d in deltas:
        conformal.critical_index(d, plan.q)
    if folds is None:
        folds = kfold_plan(len(dataset), plan)

    cells = []
    for r, repeat in enumerate(folds):
        for f, (tr, te) in enumerate(repeat):
            cell_seed = plan.seed + r * len(repeat) + f
            cfg = replace(config, seed=config.seed + _MLP_SEED_STRIDE * (r * len(repeat) + f))
            cells.append((dataset, tr, te, cfg, plan.q, measures, deltas, cell_seed, r, f))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_run_cell, cells))
    else:
        outputs = []
        for c in cells:
            outputs.append(_run_cell(c))
            log.info("repeat %d fold %d done", c[-2], c[-1])
    outputs.sort(key=lambda o: (o.repeat, o.fold))
    return aggregate(outputs, measures, deltas, metadata or {})


def aggregate(
    outputs: Sequence[FoldOutput], measures: Sequence[Measure], deltas: Sequence[float], metadata: dict
) -> dict[str, EvaluationReport]:
    y_hat = np.concatenate([o.y_hat for o in outputs])
    labels = np.concatenate([o.labels for o in outputs])
    point_rmse = rmse(y_hat, labels)
    point_cc = correlation(y_hat, labels)
    reports = {}
    for m in measures:
        lo = np.concatenate([o.bounds[m.label][0] for o in outputs], axis=1)
        hi = np.concatenate([o.bounds[m.label][1] for o in outputs], axis=1)
        levels = []
        for i, d in enumerate(deltas):
            ws = width_stats(hi[i] - lo[i])
            levels.append(LevelResult(d, ws.median, ws.interdecile_mean,
                                      miscoverage_bounds(lo[i], hi[i], labels), ws))
        meta = dict(metadata, measure=m.kind, beta=m.beta)
        reports[m.label] = EvaluationReport(m, tuple(levels), point_rmse, point_cc, labels.size, meta)
    return reports


def run_experiment(
    dataset: Dataset,
    config: MlpConfig,
    plan: SplitPlan,
    measure: Measure,
    deltas: Sequence[float] = DEFAULT_DELTAS,
    jobs: int = 1,
    folds=None,
    metadata: dict | None = None,
) -> EvaluationReport:
    return run_experiments(dataset, config, plan, [measure], deltas, jobs, folds, metadata)[measure.label]


# -- report rendering --

REPORT_SCHEMA = "icpnn-report/1"


def format_table(reports: Sequence[EvaluationReport]) -> str:
    """Plain-text table: median width, interdecile mean width and error percentage per level."""
    reports = list(reports)
    deltas = [lv.delta for lv in reports[0].levels]
    conf = [f"{100 * (1 - d):g}%" for d in deltas]
    name_w = max(len("Measure"), *(len(r.measure.label) for r in reports))
    col = 9
    head1 = " " * name_w + " | " + " | ".join(
        title.center(col * len(deltas)) for title in ("Median Width", "Interdecile Mean", "Errors (%)")
    )
    head2 = "Measure".ljust(name_w) + " | " + " | ".join(
        "".join(c.rjust(col) for c in conf) for _ in range(3)
    )
    lines = [head1, head2, "-" * len(head2)]
    for r in reports:
        med = "".join(f"{lv.median_width:{col}.4g}" for lv in r.levels)
        idm = "".join(f"{lv.interdecile_mean_width:{col}.4g}" for lv in r.levels)
        err = "".join(f"{lv.error_percentage:{col}.2f}" for lv in r.levels)
        lines.append(r.measure.label.ljust(name_w) + " | " + " | ".join((med, idm, err)))
    lines.append("")
    lines.append(f"RMSE {reports[0].rmse:.4g}   CC {reports[0].correlation:.4f}   "
                 f"predictions {reports[0].n_predictions}")
    return "\n".join(lines) + "\n"


def report_to_kv(reports: Sequence[EvaluationReport]) -> str:
    """Machine-readable ``key = value`` document; floats are written with ``repr`` so reruns compare byte-for-byte."""
    out = [f"schema = {REPORT_SCHEMA}"]
    first = reports[0]
    for k in sorted(first.metadata):
        if k in ("measure", "beta"):
            continue
        out.append(f"meta.{k} = {first.metadata[k]}")
    out.append(f"rmse = {first.rmse!r}")
    out.append(f"correlation = {first.correlation!r}")
    out.append(f"n_predictions = {first.n_predictions}")
    for r in reports:
        key = r.measure.label
        for lv in r.levels:
            p = f"{key}.delta={lv.delta!r}"
            out.append(f"{p}.median_width = {lv.median_width!r}")
            out.append(f"{p}.interdecile_mean_width = {lv.interdecile_mean_width!r}")
            out.append(f"{p}.error_percentage = {lv.error_percentage!r}")
            for name, v in asdict(lv.widths).items():
                out.append(f"{p}.widths.{name} = {v!r}")
    return "\n".join(out) + "\n"


def parse_kv(text: str) -> dict[str, str]:
    lines = text.strip().splitlines()
    if not lines or lines[0] != f"schema = {REPORT_SCHEMA}":
        raise InvalidInputError("not an icpnn report")
    return dict(line.split(" = ", 1) for line in lines[1:])


def boxplot_csv(reports: Sequence[EvaluationReport]) -> str:
    rows = ["measure,confidence,decile_10,quartile_25,median,quartile_75,decile_90"]
    for r in reports:
        for lv in r.levels:
            w = lv.widths
            rows.append(",".join([r.measure.label, repr(1 - lv.delta)] + [
                repr(v) for v in (w.decile_10, w.quartile_25, w.median, w.quartile_75, w.decile_90)
            ]))
    return "\n".join(rows) + "\n"
