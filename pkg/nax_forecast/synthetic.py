"""
Synthetic daily (or hourly) consumption and weather data with a known generating process: a planted trend and
seasonality layer, sinusoidal temperatures with autocorrelated noise, and residuals that respond to temperature with
temperature-dependent noise. Alternatively the residuals are simulated from a planted network, so a fitted network
can be checked against the process that generated its data.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from datetime import date
from typing import FrozenSet, Optional, Tuple

import numpy as np
import pandas as pd

from nax_forecast.core.exceptions import IngestError
from nax_forecast.core.models import DAYS_IN_YEAR, MWH_PER_GWH, OMEGA, Activation
from nax_forecast.core.models.nax import NaxParams
from nax_forecast.core.models.records import CONSUMPTION, DRY_BULB, WET_BULB
from nax_forecast.core.models.segmentation import _as_date
from nax_forecast.features import INPUT_COLUMNS, day_of_year, fit_scaler, input_matrix, leap_free_dates, transform
from nax_forecast.holidays import default_holidays
from nax_forecast.ingest import daily_frame
from nax_forecast.nax import forward

APP_LOGGER = logging.getLogger(__name__)

# Relative shape of demand over the day, scaled so the hours sum to the daily total
DIURNAL_PROFILE = 1.0 + 0.25 * np.sin(2 * np.pi * (np.arange(24) - 9) / 24)


@dataclass(frozen=True)
class SyntheticConfig:
    start: date = date(2007, 1, 1)
    end: date = date(2012, 12, 31)
    # intercept, trend, sin ωt, cos ωt, sin 2ωt, cos 2ωt, Saturday, Sunday, holiday
    beta: Tuple[float, ...] = (math.log(330.0), 2e-5, 0.02, 0.08, 0.01, 0.06, -0.12, -0.15, -0.06)
    temperature_mean: float = 50.0
    temperature_amplitude: float = 22.0
    coldest_day: int = 20  # day-of-year of the seasonal minimum
    temperature_noise: float = 4.0
    temperature_ar: float = 0.7
    wet_bulb_spread: float = 4.0
    comfort_temperature: float = 62.0
    cooling_response: float = 0.004  # per °F above comfort
    heating_response: float = 0.002  # per °F below comfort
    noise_sigma: float = 0.02
    noise_temperature_slope: float = 0.5  # relative noise increase per 20°F away from comfort
    ar_phi: float = 0.5
    include_floating_holidays: bool = False
    include_leap_days: bool = False
    hourly: bool = False
    # When set, residuals are planted_scale * (μ_t + σ_t ε_t) from this network run over the min-max scaled inputs,
    # replacing the AR(1) noise and the temperature response
    planted_nax: Optional[NaxParams] = field(default=None, compare=False)
    planted_activation: Activation = Activation.SIGMOID
    planted_scale: float = 0.02

    def __post_init__(self):
        object.__setattr__(self, "start", _as_date(self.start))
        object.__setattr__(self, "end", _as_date(self.end))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if len(self.beta) != 9:
            raise ValueError(f"beta needs 9 values, got {len(self.beta)}")
        object.__setattr__(self, "planted_activation", Activation(self.planted_activation))
        if self.planted_nax is not None and self.planted_nax.inputs != len(INPUT_COLUMNS):
            raise ValueError(f"The planted network needs {len(INPUT_COLUMNS)} inputs, got {self.planted_nax.inputs}")
        if not self.planted_scale > 0:
            raise ValueError(f"planted_scale must be positive, got {self.planted_scale!r}")

    def noise_free(self) -> "SyntheticConfig":
        """The same calendar and GLM layer with no weather response and no noise"""
        return replace(
            self, temperature_noise=0.0, cooling_response=0.0, heating_response=0.0, noise_sigma=0.0, planted_nax=None)


@dataclass(frozen=True, eq=False)
class SyntheticData:
    """The generated data, with the planted components needed to check fitted models against the truth"""

    daily: pd.DataFrame
    hourly: Optional[pd.DataFrame]
    holidays: FrozenSet[date]
    glm_mean: np.ndarray  # planted T_t + S_t per retained (non Feb 29) day
    residuals: np.ndarray
    noise_sigma: np.ndarray
    residual_mean: Optional[np.ndarray] = None  # planted network μ, log units; None without a planted network


def generate_synthetic(config: SyntheticConfig = SyntheticConfig(), seed: int = 0) -> SyntheticData:
    if config.start > config.end:
        raise IngestError(f"Invalid synthetic date range: {config.start} is after {config.end}")
    dates = leap_free_dates(config.start, config.end)
    if len(dates) == 0:
        raise IngestError(f"Synthetic date range {config.start}/{config.end} has no days")

    rng = np.random.default_rng(seed)
    n = len(dates)
    t = np.arange(n, dtype=float)
    holidays = default_holidays(range(config.start.year, config.end.year + 1), config.include_floating_holidays)

    calendar = daily_frame(dates, np.ones(n), np.zeros(n), np.zeros(n), holidays)
    design = np.column_stack([
        np.ones(n), t,
        np.sin(OMEGA * t), np.cos(OMEGA * t), np.sin(2 * OMEGA * t), np.cos(2 * OMEGA * t),
        calendar["is_saturday"].to_numpy(dtype=float),
        calendar["is_sunday"].to_numpy(dtype=float),
        calendar["is_holiday"].to_numpy(dtype=float),
    ])
    glm_mean = design @ np.asarray(config.beta)

    seasonal = config.temperature_mean - config.temperature_amplitude * np.cos(
        2 * np.pi * (day_of_year(dates) - config.coldest_day) / DAYS_IN_YEAR)
    anomaly = np.zeros(n)
    shocks = rng.standard_normal(n)
    for i in range(n):
        previous = anomaly[i - 1] if i else 0.0
        anomaly[i] = config.temperature_ar * previous + config.temperature_noise * shocks[i]
    dry_bulb = seasonal + anomaly
    wet_bulb = dry_bulb - config.wet_bulb_spread * (1.0 + 0.25 * rng.standard_normal(n))

    if config.planted_nax is not None:
        weather = daily_frame(dates, np.ones(n), dry_bulb, wet_bulb, holidays)
        inputs = input_matrix(weather, np.arange(n))
        scaled, mu, sigma = simulate_nax(
            config.planted_nax, transform(fit_scaler(inputs), inputs), rng, config.planted_activation)
        residuals = config.planted_scale * scaled
        residual_mean, noise_sigma = config.planted_scale * mu, config.planted_scale * sigma
        return _finish(config, seed, dates, holidays, glm_mean, dry_bulb, wet_bulb, residuals, noise_sigma,
                       residual_mean)

    # Residual response to temperature, centred on its seasonal level so the GLM layer keeps the mean
    response = (config.cooling_response * np.maximum(dry_bulb - config.comfort_temperature, 0)
                + config.heating_response * np.maximum(config.comfort_temperature - dry_bulb, 0))
    seasonal_response = (config.cooling_response * np.maximum(seasonal - config.comfort_temperature, 0)
                         + config.heating_response * np.maximum(config.comfort_temperature - seasonal, 0))
    noise_sigma = config.noise_sigma * (
        1.0 + config.noise_temperature_slope * np.abs(dry_bulb - config.comfort_temperature) / 20.0)
    innovations = noise_sigma * rng.standard_normal(n)
    residuals = np.zeros(n)
    for i in range(n):
        previous = residuals[i - 1] if i else 0.0
        residuals[i] = config.ar_phi * previous + innovations[i]
    residuals = residuals + response - seasonal_response
    return _finish(config, seed, dates, holidays, glm_mean, dry_bulb, wet_bulb, residuals, noise_sigma)


def _finish(
        config: SyntheticConfig, seed: int, dates: pd.DatetimeIndex, holidays: FrozenSet[date], glm_mean: np.ndarray,
        dry_bulb: np.ndarray, wet_bulb: np.ndarray, residuals: np.ndarray, noise_sigma: np.ndarray,
        residual_mean: Optional[np.ndarray] = None) -> SyntheticData:
    daily = daily_frame(dates, np.exp(glm_mean + residuals), dry_bulb, wet_bulb, holidays)
    if config.include_leap_days:
        daily = _with_leap_days(daily)

    hourly = _to_hourly(daily) if config.hourly else None
    APP_LOGGER.debug(f"Generated {len(daily)} synthetic days from {config.start} to {config.end} with seed {seed}")
    return SyntheticData(daily, hourly, holidays, glm_mean, residuals, noise_sigma, residual_mean)


def simulate_nax(
        params: NaxParams, inputs: np.ndarray, rng: np.random.Generator,
        activation: Activation = Activation.SIGMOID) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Run the network over `inputs` from P_0 = (0, 0) and draw R_t = μ_t + σ_t ε_t with standard normal ε_t.
    Returns (R, μ, σ). The noise doesn't feed back; the recurrence carries the network's own (μ, σ).
    """
    cache = forward(params, np.asarray(inputs, dtype=float), activation=activation)
    return cache.mu + cache.sigma * rng.standard_normal(len(cache.mu)), cache.mu, cache.sigma


def planted_nax_params() -> NaxParams:
    """
    A two neuron sigmoid network over the `INPUT_COLUMNS` inputs: one neuron switches on with hot days, the other with
    cold days, and both raise the mean and widen the noise. The previous mean feeds back weakly.
    """
    w = np.zeros((2, len(INPUT_COLUMNS)))
    w[0, 0], w[1, 0] = 10.0, -10.0
    return NaxParams(
        w=w,
        w0=np.array([-7.5, 4.0]),
        f=np.array([[0.5, 0.0], [-0.5, 0.0]]),
        l=np.array([[1.0, 0.6], [0.8, 0.8]]),
        l0=np.array([0.0, 0.2]),
    )


def _with_leap_days(daily: pd.DataFrame) -> pd.DataFrame:
    """Insert each Feb 29 in range as a copy of Feb 28"""
    extra = []
    for ts in daily.index[(daily.index.month == 2) & (daily.index.day == 28) & daily.index.is_leap_year]:
        row = daily.loc[[ts]].copy()
        row.index = pd.DatetimeIndex([ts + pd.Timedelta(days=1)], name="date")
        extra.append(row)
    if not extra:
        return daily
    combined = pd.concat([daily, *extra]).sort_index()
    combined["is_saturday"] = combined.index.weekday == 5
    combined["is_sunday"] = combined.index.weekday == 6
    return combined


def _to_hourly(daily: pd.DataFrame) -> pd.DataFrame:
    """Spread each day over 24 hours; hourly demand sums to the daily total, hourly temperatures average to it"""
    share = DIURNAL_PROFILE / DIURNAL_PROFILE.sum()
    swing = 6.0 * np.sin(2 * np.pi * (np.arange(24) - 9) / 24)
    n = len(daily)
    return pd.DataFrame({
        "date": np.repeat(daily.index.to_numpy(), 24),
        "hour": np.tile(np.arange(24), n),
        "demand": (daily[CONSUMPTION].to_numpy()[:, None] * MWH_PER_GWH * share).reshape(-1),
        DRY_BULB: (daily[DRY_BULB].to_numpy()[:, None] + swing).reshape(-1),
        WET_BULB: (daily[WET_BULB].to_numpy()[:, None] + 0.8 * swing).reshape(-1),
    })
