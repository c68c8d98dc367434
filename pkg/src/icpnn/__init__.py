"""Inductive conformal prediction intervals for neural network regression."""

from .conformal import (
    CalibrationScores,
    NormalizationParams,
    PredictionInterval,
    build_calibration,
    critical_index,
    interval_absolute,
    interval_normalized,
    p_value,
    score_absolute,
    score_normalized,
)
from .data import Dataset, SplitPlan, load_csv
from .evaluation import EvaluationReport, Measure, run_experiment, run_experiments
from .regressors import MlpConfig, TrainedRegressor, ResidualModel, train_mlp

__version__ = "0.1.0"
