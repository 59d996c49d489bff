"""
Linear benchmark models emitting Gaussian densities of log consumption: the trend and seasonality layer on its own,
and an ARX model with one autoregressive lag plus the temperatures.
"""
import logging
from typing import Sequence

import numpy as np
import pandas as pd

from nax_forecast.core.exceptions import DegenerateFitError, ForecastError, RankDeficientError
from nax_forecast.core.models.density import DensityForecast
from nax_forecast.core.models.glm import ARX_COLUMNS, ArxFit, GlmFit
from nax_forecast.core.models.records import LogSeries
from nax_forecast.features import calendar_matrix, weather_matrix
from nax_forecast.glm import build_design_matrix, glm_predict, ols

APP_LOGGER = logging.getLogger(__name__)


def arx_design(glm_design: np.ndarray, lagged: np.ndarray, weather: np.ndarray) -> np.ndarray:
    return np.column_stack([glm_design, lagged, weather])


def fit_arx(log_series: LogSeries, calendar: np.ndarray, weather: np.ndarray) -> ArxFit:
    """
    OLS of Y_t on [GLM design columns, Y_{t-1}, dry bulb, wet bulb]. The first day has no lag and is dropped.
    """
    y = np.asarray(log_series.values, dtype=float)
    if len(y) < 2:
        raise RankDeficientError(f"ARX needs at least 2 days, got {len(y)}")
    design = arx_design(build_design_matrix(calendar)[1:], y[:-1], np.asarray(weather, dtype=float)[1:])
    coefficients, fitted, variance = ols(design, y[1:], ARX_COLUMNS)
    if not variance > 0:
        raise DegenerateFitError(f"ARX residual variance must be positive, got {variance!r}")
    APP_LOGGER.debug(f"ARX fitted on {len(y) - 1} days, phi={coefficients['y_lag1']:.4f}")
    return ArxFit(coefficients, fitted, y[1:] - fitted, variance)


def arx_mean_and_variance(fit: ArxFit, calendar: np.ndarray, weather: np.ndarray, last_y: float):
    """Iterated one-step means and the h-step variances σ² Σ_{j<h} φ^{2j}"""
    glm_part = build_design_matrix(calendar) @ fit.glm_part
    weather_part = np.asarray(weather, dtype=float) @ fit.weather_part
    phi = fit.phi
    mean = np.empty(len(glm_part))
    previous = float(last_y)
    for h in range(len(glm_part)):
        mean[h] = glm_part[h] + phi * previous + weather_part[h]
        previous = mean[h]
    variance = fit.residual_variance * np.cumsum(phi ** (2 * np.arange(len(glm_part))))
    return mean, variance


def _density(dates: Sequence, mean: np.ndarray, sigma: np.ndarray) -> DensityForecast:
    return DensityForecast(pd.DatetimeIndex(dates, name="date"), mean, sigma, np.exp(mean))


def forecast_arx(fit: ArxFit, days: pd.DataFrame, t: Sequence[int], last_y: float) -> DensityForecast:
    """
    Ex-post ARX forecast over `days` (realised temperatures and calendar flags, day indices `t`), starting from the
    last observed log consumption `last_y`. The predicted mean is fed back as the next lag.
    """
    if len(days) == 0:
        raise ForecastError("Nothing to forecast: no out-of-sample days")
    mean, variance = arx_mean_and_variance(fit, calendar_matrix(days, t), weather_matrix(days), last_y)
    return _density(days.index, mean, np.sqrt(variance))


def forecast_glm_density(fit: GlmFit, days: pd.DataFrame, t: Sequence[int]) -> DensityForecast:
    """Mean T_t + S_t with the constant training residual standard deviation"""
    if not fit.residual_variance > 0:
        raise DegenerateFitError("GLM residual variance is zero; the density forecast would be degenerate")
    mean = glm_predict(fit.coefficients, calendar_matrix(days, t))
    return _density(days.index, mean, np.full(len(mean), np.sqrt(fit.residual_variance)))
