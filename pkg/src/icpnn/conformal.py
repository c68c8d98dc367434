"""Inductive conformal prediction for regression.

Nonconformity measures, the sorted calibration scores, p-values and the
closed-form prediction intervals built from them. Everything here is a pure
function over immutable values.

Intervals are reported as closed ``[lower, upper]``: with the ``>=`` count in
:func:`p_value`, a candidate label whose score equals the critical score still
has p-value above ``delta``, so the endpoints belong to the region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable

import numpy as np

from .errors import (
    DegenerateConfidenceError,
    DegenerateNormalizerError,
    EmptyCalibrationError,
    InsufficientCalibrationError,
    InvalidInputError,
)


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidInputError(f"non-finite value: {v!r}")


@dataclass(frozen=True)
class NormalizationParams:
    """Difficulty estimate for one example: ``exp(mu) + beta`` divides the residual."""

    beta: float
    mu: float

    def __post_init__(self):
        _check_finite(self.beta, self.mu)
        if self.beta < 0:
            raise InvalidInputError(f"beta must be >= 0, got {self.beta}")

    @property
    def scale(self) -> float:
        s = math.exp(self.mu) + self.beta
        if s <= 0:
            raise DegenerateNormalizerError(f"exp(mu) + beta = {s} (mu={self.mu}, beta={self.beta})")
        return s


@dataclass(frozen=True)
class CalibrationScores:
    """Calibration nonconformity scores, sorted largest first."""

    scores: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.scores, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise EmptyCalibrationError("calibration needs at least one score")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("calibration scores must be finite")
        if np.any(arr < 0):
            raise InvalidInputError("nonconformity scores must be non-negative")
        if np.any(arr[:-1] < arr[1:]):
            raise InvalidInputError("calibration scores must be sorted descending")
        arr.flags.writeable = False
        object.__setattr__(self, "scores", arr)

    @property
    def q(self) -> int:
        return int(self.scores.size)

    def kth_largest(self, s: int) -> float:
        """1-indexed: ``kth_largest(1)`` is the maximum."""
        return float(self.scores[s - 1])

    def __len__(self) -> int:
        return self.q


@dataclass(frozen=True)
class PredictionInterval:
    lower: float
    upper: float
    confidence: float

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise InvalidInputError(f"lower {self.lower} > upper {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __contains__(self, y: float) -> bool:
        return self.lower <= y <= self.upper


def score_absolute(y: float, y_hat: float) -> float:
    _check_finite(y, y_hat)
    return abs(y - y_hat)


def score_normalized(y: float, y_hat: float, norm: NormalizationParams) -> float:
    _check_finite(y, y_hat)
    return abs(y - y_hat) / norm.scale


def scores_absolute(y: np.ndarray, y_hat: np.ndarray) -> np.ndarray:
    """Vectorised :func:`score_absolute`."""
    y, y_hat = np.asarray(y, dtype=float), np.asarray(y_hat, dtype=float)
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(y_hat))):
        raise InvalidInputError("non-finite label or prediction")
    return np.abs(y - y_hat)


def normalizer(mu: np.ndarray, beta: float) -> np.ndarray:
    """``exp(mu) + beta`` elementwise, rejecting non-positive results."""
    if beta < 0:
        raise InvalidInputError(f"beta must be >= 0, got {beta}")
    d = np.exp(np.asarray(mu, dtype=float)) + beta
    if not np.all(np.isfinite(d)) or np.any(d <= 0):
        raise DegenerateNormalizerError("exp(mu) + beta must be finite and positive")
    return d


def scores_normalized(y: np.ndarray, y_hat: np.ndarray, mu: np.ndarray, beta: float) -> np.ndarray:
    """Vectorised :func:`score_normalized`."""
    return scores_absolute(y, y_hat) / normalizer(mu, beta)


def build_calibration(raw_scores: Iterable[float]) -> CalibrationScores:
    if not isinstance(raw_scores, np.ndarray):
        raw_scores = list(raw_scores)
    arr = np.asarray(raw_scores, dtype=float).ravel()
    if arr.size == 0:
        raise EmptyCalibrationError("calibration needs at least one score")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("calibration scores must be finite")
    return CalibrationScores(np.sort(arr)[::-1])


def critical_index(delta: float, q: int) -> int:
    """Return ``s = floor(delta * (q + 1))``, the rank of the critical score.

    ``delta`` is read as the decimal it prints as, so ``0.1`` with ``q=399``
    gives 40 and not 39 from binary rounding.
    """
    if not 0 < delta < 1:
        raise InvalidInputError(f"delta must lie in (0, 1), got {delta}")
    if q < 1:
        raise EmptyCalibrationError(f"q must be >= 1, got {q}")
    s = math.floor(Decimal(str(float(delta))) * (q + 1))
    if s == 0:
        need = math.ceil(1 / delta) - 1
        raise InsufficientCalibrationError(
            f"significance {delta} needs at least {need} calibration examples, have q={q}; increase q"
        )
    if s > q:
        raise DegenerateConfidenceError(f"delta={delta} with q={q} gives s={s} > q")
    return s


def critical_score(calib: CalibrationScores, delta: float) -> float:
    return calib.kth_largest(critical_index(delta, calib.q))


def interval_absolute(y_hat: float, calib: CalibrationScores, delta: float) -> PredictionInterval:
    _check_finite(y_hat)
    a = critical_score(calib, delta)
    return PredictionInterval(y_hat - a, y_hat + a, 1 - delta)


def interval_normalized(
    y_hat: float, norm: NormalizationParams, calib: CalibrationScores, delta: float
) -> PredictionInterval:
    _check_finite(y_hat)
    half = critical_score(calib, delta) * norm.scale
    return PredictionInterval(y_hat - half, y_hat + half, 1 - delta)


def interval_bounds(
    y_hat: np.ndarray, calib: CalibrationScores, delta: float, scale: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised interval construction. ``scale`` is ``exp(mu) + beta`` per row, if normalized."""
    y_hat = np.asarray(y_hat, dtype=float)
    half = np.full_like(y_hat, critical_score(calib, delta))
    if scale is not None:
        half = half * scale
    return y_hat - half, y_hat + half


def p_value(candidate_score: float, calib: CalibrationScores) -> float:
    """Fraction of calibration scores, plus the candidate itself, that are ``>= candidate_score``."""
    _check_finite(candidate_score)
    # scores descending -> negated ascending; count of -s <= -c equals count of s >= c
    count = int(np.searchsorted(-calib.scores, -candidate_score, side="right"))
    return (count + 1) / (calib.q + 1)
