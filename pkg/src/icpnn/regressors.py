"""Underlying point predictor and the log-residual model.

The point predictor is a one-hidden-layer tanh network with a linear output,
trained by Levenberg-Marquardt (damped Gauss-Newton) steps with early stopping
on a held-out slice of the proper training set, best of several random
restarts. The residual model is plain linear least squares on
``log |y - y_hat|``.

Parameter vectors use the order ``W1`` (hidden x inputs, row-major), ``b1``,
``w2``, ``b2``; serialization uses the same order.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import ArtifactIncompatibleError, InvalidInputError, TrainingDivergedError

log = logging.getLogger(__name__)

MIN_RESIDUAL = 1e-6
RIDGE_DAMPING = 1e-8

MODEL_MAGIC = "icpnn-mlp"
RESIDUAL_MAGIC = "icpnn-residual"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class MlpConfig:
    hidden_units: int
    max_epochs: int = 1000
    restarts: int = 10
    validation_fraction: float = 0.1
    patience: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.hidden_units < 1:
            raise InvalidInputError("hidden_units must be >= 1")
        if self.max_epochs < 1:
            raise InvalidInputError("max_epochs must be >= 1")
        if self.restarts < 1:
            raise InvalidInputError("restarts must be >= 1")
        if not 0 < self.validation_fraction < 1:
            raise InvalidInputError("validation_fraction must lie in (0, 1)")
        if self.patience < 1:
            raise InvalidInputError("patience must be >= 1")


@dataclass(frozen=True)
class TrainedRegressor:
    hidden_weights: np.ndarray = field(repr=False)  # (hidden, input_dim)
    hidden_bias: np.ndarray = field(repr=False)  # (hidden,)
    output_weights: np.ndarray = field(repr=False)  # (hidden,)
    output_bias: float = 0.0
    validation_mse: float = math.nan
    training_mse: float = math.nan
    initial_training_mse: float = math.nan

    def __post_init__(self):
        W1 = np.array(self.hidden_weights, dtype=float)
        b1 = np.array(self.hidden_bias, dtype=float).ravel()
        w2 = np.array(self.output_weights, dtype=float).ravel()
        if W1.ndim != 2 or b1.shape != (W1.shape[0],) or w2.shape != (W1.shape[0],):
            raise InvalidInputError("inconsistent network parameter shapes")
        if not (np.all(np.isfinite(W1)) and np.all(np.isfinite(b1)) and np.all(np.isfinite(w2))
                and math.isfinite(self.output_bias)):
            raise InvalidInputError("network parameters must be finite")
        for name, arr in (("hidden_weights", W1), ("hidden_bias", b1), ("output_weights", w2)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "output_bias", float(self.output_bias))

    @property
    def input_dim(self) -> int:
        return self.hidden_weights.shape[1]

    @property
    def hidden_units(self) -> int:
        return self.hidden_weights.shape[0]

    @property
    def params(self) -> np.ndarray:
        return _pack(self.hidden_weights, self.hidden_bias, self.output_weights, self.output_bias)

    @classmethod
    def from_params(cls, theta: np.ndarray, input_dim: int, hidden_units: int, **meta) -> "TrainedRegressor":
        return cls(*_unpack(theta, input_dim, hidden_units), **meta)


def _pack(W1, b1, w2, b2) -> np.ndarray:
    return np.concatenate([np.ravel(W1), np.ravel(b1), np.ravel(w2), [b2]])


def _unpack(theta: np.ndarray, d: int, h: int):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (h * d + 2 * h + 1,):
        raise InvalidInputError(f"expected {h * d + 2 * h + 1} parameters, got {theta.shape}")
    W1 = theta[: h * d].reshape(h, d)
    b1 = theta[h * d : h * d + h]
    w2 = theta[h * d + h : h * d + 2 * h]
    return W1, b1, w2, float(theta[-1])


def _as_matrix(X, input_dim: int) -> tuple[np.ndarray, bool]:
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    if single:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != input_dim:
        raise InvalidInputError(f"expected {input_dim} attributes, got shape {np.shape(X)}")
    return X, single


def _forward(theta: np.ndarray, X: np.ndarray, h: int):
    W1, b1, w2, b2 = _unpack(theta, X.shape[1], h)
    A = np.tanh(X @ W1.T + b1)
    return A @ w2 + b2, A


def predict(model: TrainedRegressor, x) -> float | np.ndarray:
    """Forward pass for one attribute vector (returns a float) or a matrix of rows."""
    X, single = _as_matrix(x, model.input_dim)
    A = np.tanh(X @ model.hidden_weights.T + model.hidden_bias)
    out = A @ model.output_weights + model.output_bias
    return float(out[0]) if single else out


def jacobian(theta: np.ndarray, X: np.ndarray, h: int) -> tuple[np.ndarray, np.ndarray]:
    """Network outputs and their Jacobian with respect to the parameter vector, shape (n, p)."""
    n, d = X.shape
    out, A = _forward(theta, X, h)
    w2 = theta[h * d + h : h * d + 2 * h]
    G = (1.0 - A * A) * w2  # d out / d b1
    J = np.empty((n, h * d + 2 * h + 1))
    J[:, : h * d] = (G[:, :, None] * X[:, None, :]).reshape(n, h * d)
    J[:, h * d : h * d + h] = G
    J[:, h * d + h : h * d + 2 * h] = A
    J[:, -1] = 1.0
    return out, J


def loss_and_gradient(theta: np.ndarray, X: np.ndarray, y: np.ndarray, h: int) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient."""
    out, J = jacobian(theta, X, h)
    r = out - y
    return float(np.mean(r * r)), (2.0 / len(y)) * (J.T @ r)


def _mse(theta, X, y, h) -> float:
    r = _forward(theta, X, h)[0] - y
    return float(np.mean(r * r))


def init_params(rng: np.random.Generator, d: int, h: int) -> np.ndarray:
    a1 = 1.0 / math.sqrt(d)
    a2 = 1.0 / math.sqrt(h)
    W1 = rng.uniform(-a1, a1, size=(h, d))
    b1 = rng.uniform(-a1, a1, size=h)
    w2 = rng.uniform(-a2, a2, size=h)
    b2 = rng.uniform(-a2, a2)
    return _pack(W1, b1, w2, b2)


@dataclass
class _RestartResult:
    theta: np.ndarray
    val_mse: float
    train_mse: float
    init_train_mse: float
    epochs: int


def _train_once(
    X: np.ndarray, y: np.ndarray, Xv: np.ndarray, yv: np.ndarray, config: MlpConfig, seed: int
) -> _RestartResult:
    h = config.hidden_units
    rng = np.random.default_rng(seed)
    theta = init_params(rng, X.shape[1], h)
    p = theta.size
    eye = np.eye(p)

    train_mse = init_mse = _mse(theta, X, y, h)
    best = (math.inf, theta, train_mse)
    stale = 0
    lam = 1e-3
    epoch = 0
    for epoch in range(1, config.max_epochs + 1):
        out, J = jacobian(theta, X, h)
        r = out - y
        if not np.all(np.isfinite(r)):
            raise TrainingDivergedError(f"non-finite outputs at epoch {epoch}")
        JtJ = J.T @ J
        g = J.T @ r
        if not np.any(g):
            break
        accepted = False
        while lam < 1e10:
            try:
                step = np.linalg.solve(JtJ + lam * eye, -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            cand = theta + step
            cand_mse = _mse(cand, X, y, h)
            if math.isfinite(cand_mse) and cand_mse < train_mse:
                theta, train_mse = cand, cand_mse
                lam = max(lam * 0.1, 1e-20)
                accepted = True
                break
            lam *= 10
        if not accepted:
            break

        val = _mse(theta, Xv, yv, h)
        if not math.isfinite(val):
            raise TrainingDivergedError(f"non-finite validation loss at epoch {epoch}")
        if val < best[0]:
            best = (val, theta, train_mse)
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break

    if not math.isfinite(best[0]):
        # no step was ever accepted; fall back to the initial point
        best = (_mse(theta, Xv, yv, h), theta, train_mse)
    return _RestartResult(best[1], best[0], best[2], init_mse, epoch)


def validation_split(n: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    n_val = max(1, int(round(fraction * n)))
    if n_val >= n:
        raise InvalidInputError(f"validation split leaves no training rows (n={n})")
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def train_restarts(proper_training: Dataset, config: MlpConfig) -> list[_RestartResult | None]:
    """Every restart's outcome (``None`` where training diverged), in restart order."""
    if len(proper_training) < 10:
        raise InvalidInputError(f"need at least 10 proper training examples, got {len(proper_training)}")
    X, y = proper_training.attributes, proper_training.labels
    tr, va = validation_split(len(y), config.validation_fraction, config.seed)
    results: list[_RestartResult | None] = []
    for i in range(config.restarts):
        try:
            results.append(_train_once(X[tr], y[tr], X[va], y[va], config, config.seed + i))
        except TrainingDivergedError as exc:
            log.warning("restart %d discarded: %s", i, exc)
            results.append(None)
    return results


def train_mlp(proper_training: Dataset, config: MlpConfig) -> TrainedRegressor:
    """Train ``config.restarts`` networks and keep the one with the lowest validation MSE.

    Ties go to the lowest restart index. Restart ``i`` draws its initial
    weights from ``seed + i``; the validation slice is the same for all.
    """
    results = train_restarts(proper_training, config)
    valid = [(r.val_mse, i, r) for i, r in enumerate(results) if r is not None]
    if not valid:
        raise TrainingDivergedError(f"all {config.restarts} restarts diverged")
    _, _, best = min(valid, key=lambda t: (t[0], t[1]))
    return TrainedRegressor.from_params(
        best.theta,
        proper_training.n_attributes,
        config.hidden_units,
        validation_mse=best.val_mse,
        training_mse=best.train_mse,
        initial_training_mse=best.init_train_mse,
    )


@dataclass(frozen=True)
class ResidualModel:
    weights: np.ndarray = field(repr=False)
    bias: float = 0.0

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if not (np.all(np.isfinite(w)) and math.isfinite(self.bias)):
            raise InvalidInputError("residual model parameters must be finite")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def input_dim(self) -> int:
        return self.weights.shape[0]


def log_residual_targets(y: np.ndarray, y_hat: np.ndarray, min_residual: float = MIN_RESIDUAL) -> np.ndarray:
    if min_residual <= 0:
        raise InvalidInputError("min_residual must be > 0")
    return np.log(np.maximum(np.abs(np.asarray(y) - np.asarray(y_hat)), min_residual))


def fit_linear(X: np.ndarray, t: np.ndarray, damping: float = RIDGE_DAMPING) -> ResidualModel:
    """Least squares with an unpenalised intercept and a tiny ridge on the weights."""
    X = np.asarray(X, dtype=float)
    t = np.asarray(t, dtype=float)
    if X.shape[0] == 0:
        raise InvalidInputError("cannot fit on an empty dataset")
    x_mean = X.mean(axis=0)
    t_mean = t.mean()
    Xc = X - x_mean
    A = Xc.T @ Xc + damping * np.eye(X.shape[1])
    w = np.linalg.solve(A, Xc.T @ (t - t_mean))
    return ResidualModel(w, t_mean - x_mean @ w)


def fit_residual_model(
    proper_training: Dataset, model: TrainedRegressor, min_residual: float = MIN_RESIDUAL
) -> ResidualModel:
    """Fit ``mu(x)``, a linear predictor of ``log |y - y_hat|`` over the proper training set."""
    if len(proper_training) == 0:
        raise InvalidInputError("proper training set is empty")
    y_hat = predict(model, proper_training.attributes)
    t = log_residual_targets(proper_training.labels, y_hat, min_residual)
    return fit_linear(proper_training.attributes, t)


def predict_mu(resid: ResidualModel, x) -> float | np.ndarray:
    X, single = _as_matrix(x, resid.input_dim)
    out = X @ resid.weights + resid.bias
    return float(out[0]) if single else out


# -- serialization: line-oriented text, floats as hex for exact round-trip --


def _hex_line(values) -> str:
    return " ".join(float(v).hex() for v in np.ravel(values))


def _parse_hex(line: str, count: int, what: str) -> np.ndarray:
    try:
        vals = np.array([float.fromhex(t) for t in line.split()], dtype=float)
    except ValueError:
        raise ArtifactIncompatibleError(f"malformed {what} line") from None
    if vals.size != count:
        raise ArtifactIncompatibleError(f"{what}: expected {count} values, found {vals.size}")
    return vals


def dump_regressor(model: TrainedRegressor) -> str:
    return "\n".join([
        f"{MODEL_MAGIC} {FORMAT_VERSION}",
        f"input_dim {model.input_dim}",
        f"hidden_units {model.hidden_units}",
        "hidden_weights " + _hex_line(model.hidden_weights),
        "hidden_bias " + _hex_line(model.hidden_bias),
        "output_weights " + _hex_line(model.output_weights),
        "output_bias " + _hex_line([model.output_bias]),
    ]) + "\n"


def _expect_header(lines: list[str], magic: str) -> list[str]:
    if not lines:
        raise ArtifactIncompatibleError(f"empty {magic} artifact")
    head = lines[0].split()
    if len(head) != 2 or head[0] != magic:
        raise ArtifactIncompatibleError(f"not a {magic} artifact: {lines[0]!r}")
    if head[1] != str(FORMAT_VERSION):
        raise ArtifactIncompatibleError(f"{magic} format version {head[1]} unsupported (want {FORMAT_VERSION})")
    return lines[1:]


def _fields(lines: list[str]) -> dict[str, str]:
    out = {}
    for line in lines:
        key, _, rest = line.partition(" ")
        out[key] = rest
    return out


def load_regressor(text: str) -> TrainedRegressor:
    f = _fields(_expect_header(text.strip().splitlines(), MODEL_MAGIC))
    try:
        d, h = int(f["input_dim"]), int(f["hidden_units"])
        W1 = _parse_hex(f["hidden_weights"], h * d, "hidden_weights").reshape(h, d)
        b1 = _parse_hex(f["hidden_bias"], h, "hidden_bias")
        w2 = _parse_hex(f["output_weights"], h, "output_weights")
        b2 = _parse_hex(f["output_bias"], 1, "output_bias")[0]
    except (KeyError, ValueError) as exc:
        raise ArtifactIncompatibleError(f"incomplete {MODEL_MAGIC} artifact: {exc}") from None
    return TrainedRegressor(W1, b1, w2, b2)


def dump_residual_model(resid: ResidualModel) -> str:
    return "\n".join([
        f"{RESIDUAL_MAGIC} {FORMAT_VERSION}",
        f"input_dim {resid.input_dim}",
        "weights " + _hex_line(resid.weights),
        "bias " + _hex_line([resid.bias]),
    ]) + "\n"


def load_residual_model(text: str) -> ResidualModel:
    f = _fields(_expect_header(text.strip().splitlines(), RESIDUAL_MAGIC))
    try:
        d = int(f["input_dim"])
        w = _parse_hex(f["weights"], d, "weights")
        b = _parse_hex(f["bias"], 1, "bias")[0]
    except (KeyError, ValueError) as exc:
        raise ArtifactIncompatibleError(f"incomplete {RESIDUAL_MAGIC} artifact: {exc}") from None
    return ResidualModel(w, b)
