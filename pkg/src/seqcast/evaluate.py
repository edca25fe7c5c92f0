"""Regression metric battery over unscaled prices, plus test-set prediction.

MAPE guards against near-zero actuals: samples with |actual| below a
threshold are excluded and counted instead of producing astronomical
percentages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date

import numpy as np

from .lstm_core import NetworkConfig, NetworkParams, network_forward
from .preprocess import ScalerParams, WindowedDataset, inverse_transform
from .training import EmptySetError, PredictionSet, mse_loss


class ZeroVarianceError(ValueError):
    """Actuals are constant (or fewer than two): R2 and EVS are undefined."""


class AllExcludedError(ValueError):
    """Every actual fell below the MAPE threshold."""


class ScalerMismatchError(ValueError):
    """Prediction asked for without a usable scaler."""


def rmse(p: PredictionSet) -> float:
    return math.sqrt(mse_loss(p))


def mae(p: PredictionSet) -> float:
    return float(np.mean(np.abs(p.y - p.y_hat)))


def r_squared(p: PredictionSet) -> float:
    """1 - SSres/SStot; 1.0 is perfect, 0.0 matches the mean predictor."""
    if p.n < 2:
        raise ZeroVarianceError("r_squared needs at least 2 samples")
    residual = p.y - p.y_hat
    total = p.y - p.y.mean()
    ss_tot = float(np.sum(total * total))
    if ss_tot == 0.0:
        raise ZeroVarianceError("actuals are all equal")
    return 1.0 - float(np.sum(residual * residual)) / ss_tot


def mape(p: PredictionSet, threshold: float = 1e-8) -> tuple[float, int]:
    """Mean |y - y_hat| / |y| over samples with |y| >= threshold.

    Returns (fraction, excluded_count); raises AllExcludedError when no
    sample survives the guard.
    """
    keep = np.abs(p.y) >= threshold
    excluded = int(p.n - keep.sum())
    if excluded == p.n:
        raise AllExcludedError(f"all {p.n} actuals below threshold {threshold}")
    ratios = np.abs(p.y[keep] - p.y_hat[keep]) / np.abs(p.y[keep])
    return float(np.mean(ratios)), excluded


def explained_variance(p: PredictionSet) -> float:
    """1 - Var(y - y_hat)/Var(y) with population variances.

    Shift-invariant: a constant prediction bias does not lower the score,
    which is why explained_variance >= r_squared always holds.
    """
    if p.n < 2:
        raise ZeroVarianceError("explained_variance needs at least 2 samples")
    var_y = float(np.var(p.y))
    if var_y == 0.0:
        raise ZeroVarianceError("actuals are all equal")
    return 1.0 - float(np.var(p.y - p.y_hat)) / var_y


@dataclass(frozen=True)
class MetricsReport:
    rmse: float
    mae: float
    r_squared: float
    mape: float
    explained_variance: float
    mape_excluded_count: int


def compute_metrics(p: PredictionSet, mape_threshold: float = 1e-8) -> MetricsReport:
    mape_value, excluded = mape(p, threshold=mape_threshold)
    return MetricsReport(
        rmse=rmse(p),
        mae=mae(p),
        r_squared=r_squared(p),
        mape=mape_value,
        explained_variance=explained_variance(p),
        mape_excluded_count=excluded,
    )


def report_as_dict(report: MetricsReport, symbol: str, window: int, config_hash: str) -> dict:
    """JSON-ready report: the six metric fields plus run identity."""
    return {
        "symbol": symbol,
        "window": window,
        "config_hash": config_hash,
        "rmse": report.rmse,
        "mae": report.mae,
        "r_squared": report.r_squared,
        "mape": report.mape,
        "explained_variance": report.explained_variance,
        "mape_excluded_count": report.mape_excluded_count,
    }


def predict_series(
    params: NetworkParams,
    config: NetworkConfig,
    scaler: ScalerParams,
    windows: WindowedDataset,
    batch_size: int = 256,
) -> tuple[PredictionSet, tuple[date, ...] | None]:
    """Inference over test windows, inverse-scaled to price units.

    One (actual, predicted) pair per test day; windows come from
    bridge_test_windows so every target has a full history.
    """
    if not isinstance(scaler, ScalerParams):
        raise ScalerMismatchError(f"need ScalerParams to unscale predictions, got {scaler!r}")
    if windows.n_samples == 0:
        raise EmptySetError("no windows to predict")
    chunks = []
    for lo in range(0, windows.n_samples, batch_size):
        pred, _ = network_forward(
            params, config, windows.inputs[lo : lo + batch_size], mode="inference"
        )
        chunks.append(pred[:, 0])
    scaled_pred = np.concatenate(chunks)
    pset = PredictionSet(
        y=inverse_transform(scaler, windows.targets),
        y_hat=inverse_transform(scaler, scaled_pred),
    )
    return pset, windows.target_dates
