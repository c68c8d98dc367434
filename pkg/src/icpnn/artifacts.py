"""On-disk bundle written by ``icpnn fit`` and read by ``icpnn predict``.

A bundle is a directory of small text files::

    manifest.txt     schema line, measure, beta, q, input_dim
    scaling.txt      per-attribute min and max (hex floats)
    regressor.txt    network parameters (see regressors.dump_regressor)
    residual.txt     linear log-residual model, normalized measure only
    calibration.txt  descending calibration scores (hex floats)
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import conformal
from .data import ScalingParams, scale_attributes
from .errors import ArtifactIncompatibleError
from .evaluation import Measure
from .regressors import (
    ResidualModel,
    TrainedRegressor,
    dump_regressor,
    dump_residual_model,
    load_regressor,
    load_residual_model,
    predict,
    predict_mu,
)

BUNDLE_SCHEMA = "icpnn-bundle/1"


@dataclass(frozen=True)
class FittedBundle:
    measure: Measure
    scaling: ScalingParams
    regressor: TrainedRegressor
    residual: ResidualModel | None
    calibration: conformal.CalibrationScores

    @property
    def input_dim(self) -> int:
        return self.regressor.input_dim

    def intervals(self, X_raw: np.ndarray, delta: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Point predictions and interval bounds for raw (unscaled) attribute rows."""
        X_raw = np.atleast_2d(np.asarray(X_raw, dtype=float))
        if X_raw.shape[1] != self.input_dim:
            raise ArtifactIncompatibleError(
                f"model expects {self.input_dim} attributes, input has {X_raw.shape[1]}"
            )
        X = scale_attributes(self.scaling, X_raw)
        y_hat = predict(self.regressor, X)
        scale = None
        if self.measure.kind == "normalized":
            scale = conformal.normalizer(predict_mu(self.residual, X), self.measure.beta)
        lo, hi = conformal.interval_bounds(y_hat, self.calibration, delta, scale)
        return y_hat, lo, hi


def _hex(values) -> str:
    return " ".join(float(v).hex() for v in np.ravel(values))


def _unhex(line: str) -> np.ndarray:
    try:
        return np.array([float.fromhex(t) for t in line.split()], dtype=float)
    except ValueError:
        raise ArtifactIncompatibleError("malformed numeric line in bundle") from None


def save_bundle(bundle: FittedBundle, directory: str | Path) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    (d / "manifest.txt").write_text(
        f"{BUNDLE_SCHEMA}\nmeasure {bundle.measure.kind}\nbeta {float(bundle.measure.beta).hex()}\n"
        f"q {bundle.calibration.q}\ninput_dim {bundle.input_dim}\n"
    )
    (d / "scaling.txt").write_text(f"{_hex(bundle.scaling.minimum)}\n{_hex(bundle.scaling.maximum)}\n")
    (d / "regressor.txt").write_text(dump_regressor(bundle.regressor))
    if bundle.residual is not None:
        (d / "residual.txt").write_text(dump_residual_model(bundle.residual))
    (d / "calibration.txt").write_text(_hex(bundle.calibration.scores) + "\n")


def load_bundle(directory: str | Path) -> FittedBundle:
    d = Path(directory)
    try:
        manifest = (d / "manifest.txt").read_text().splitlines()
    except OSError:
        raise ArtifactIncompatibleError(f"{d}: no manifest.txt, not a model bundle") from None
    if not manifest or manifest[0] != BUNDLE_SCHEMA:
        raise ArtifactIncompatibleError(f"{d}: unsupported bundle schema {manifest[:1]}")
    meta = dict(line.split(" ", 1) for line in manifest[1:] if line)
    try:
        measure = Measure(meta["measure"], float.fromhex(meta["beta"]))
        q, input_dim = int(meta["q"]), int(meta["input_dim"])
        scaling_lines = (d / "scaling.txt").read_text().splitlines()
        regressor = load_regressor((d / "regressor.txt").read_text())
        residual = None
        if measure.kind == "normalized":
            residual = load_residual_model((d / "residual.txt").read_text())
        scores = _unhex((d / "calibration.txt").read_text())
    except (KeyError, ValueError, OSError) as exc:
        raise ArtifactIncompatibleError(f"{d}: incomplete bundle ({exc})") from None
    scaling = ScalingParams(_unhex(scaling_lines[0]), _unhex(scaling_lines[1]))
    calibration = conformal.CalibrationScores(scores)
    dims = {regressor.input_dim, scaling.minimum.size, input_dim}
    if residual is not None:
        dims.add(residual.input_dim)
    if len(dims) != 1 or calibration.q != q:
        raise ArtifactIncompatibleError(f"{d}: bundle components disagree on dimensions")
    return FittedBundle(measure, scaling, regressor, residual, calibration)
