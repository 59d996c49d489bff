"""
Density forecasts from a trained network.

Ex-post forecasts run the recurrence over the out-of-sample period with realised temperatures. Ex-ante forecasts run
it once per bootstrapped temperature path; the predictive law of each day is the equally weighted mixture of the
per-path Gaussians.
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import ndtr, ndtri

from nax_forecast.core.exceptions import FeatureError, ForecastError, IngestError
from nax_forecast.core.models import DAYS_IN_YEAR
from nax_forecast.core.models.density import (
    BootstrapConfig, DensityForecast, MixtureDay, MixtureDensity, TemperatureBlock, TemperaturePath,
)
from nax_forecast.core.models.nax import TrainedNax
from nax_forecast.core.models.records import CONSUMPTION, DRY_BULB, WET_BULB
from nax_forecast.features import calendar_matrix, day_of_year, inverse_transform, transform, weather_matrix
from nax_forecast.glm import glm_predict
from nax_forecast.ingest import check_contiguous
from nax_forecast.nax import forward
from nax_forecast.seeding import BOOTSTRAP, substream

APP_LOGGER = logging.getLogger(__name__)

REPORTED_QUANTILES = (1, 5, 25, 50, 75, 95, 99)
SLICE_DAYS = ((1, 15), (4, 15), (7, 15), (10, 15))
MAX_BLOCK_REDRAWS = 1000
# Mixture quantiles are accurate to this in probability
CDF_TOLERANCE = 1e-10
MAX_BISECTIONS = 200


def horizon_index(model: TrainedNax, dates: pd.DatetimeIndex) -> np.ndarray:
    """
    Day indices t for an out-of-sample horizon, which must start the day after the training window ends (skipping a
    Feb 29) and be contiguous.
    """
    if len(dates) == 0:
        raise ForecastError("Nothing to forecast: the horizon is empty")
    try:
        check_contiguous(pd.DatetimeIndex([pd.Timestamp(model.last_date)]).append(pd.DatetimeIndex(dates)))
    except IngestError as err:
        raise ForecastError(f"The horizon must continue straight on from the training window: {err}")
    return model.last_t + 1 + np.arange(len(dates))


def calendar_frame(days: pd.DataFrame) -> pd.DataFrame:
    """The calendar flags of `days`, without consumption or temperatures"""
    return days.drop(columns=[c for c in (CONSUMPTION, DRY_BULB, WET_BULB) if c in days.columns])


def _network_density(
        model: TrainedNax, days: pd.DataFrame, t: np.ndarray,
        weather_paths: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Run the network over `weather_paths` (T, P, 2) sharing the calendar of `days`, from the state at the end of the
    training window. Returns the log-space total mean and the standard deviation, both (T, P).
    """
    steps, paths, _ = weather_paths.shape
    calendar = calendar_matrix(days, t)
    shared_calendar = np.broadcast_to(calendar[:, None, :], (steps, paths, calendar.shape[1]))
    raw_inputs = np.concatenate([weather_paths, shared_calendar], axis=2)
    scaled = transform(model.input_scaler, raw_inputs)
    cache = forward(model.params, scaled, p0=model.last_feedback, activation=model.config.activation)
    mu_norm, sigma_norm = cache.feedback[1:, :, 0], cache.feedback[1:, :, 1]

    mu = inverse_transform(model.target_scaler, mu_norm[..., None])[..., 0]
    sigma = sigma_norm * model.target_scaler.ranges[0]
    glm_mean = glm_predict(model.glm, calendar)
    return glm_mean[:, None] + mu, sigma


def forecast_expost(model: TrainedNax, days: pd.DataFrame) -> DensityForecast:
    """
    Gaussian density forecasts over `days` using their realised temperatures. `days` must not carry a consumption
    column; its index must continue straight on from the training window.
    """
    if CONSUMPTION in days.columns:
        raise ForecastError("Out-of-sample inputs must not include consumption")
    t = horizon_index(model, days.index)
    try:
        weather = weather_matrix(days)
    except (FeatureError, KeyError) as err:
        raise ForecastError(f"Missing or invalid weather rows: {err}")

    mean, sigma = _network_density(model, days, t, weather[:, None, :])
    mean, sigma = mean[:, 0], sigma[:, 0]
    return DensityForecast(pd.DatetimeIndex(days.index, name="date"), mean, sigma, np.exp(mean))


def _source_history(history: pd.DataFrame, source_years: Sequence[int]) -> Dict[int, np.ndarray]:
    """(365, 2) temperature arrays per source year, NaN where the history has no row"""
    history = history[~((history.index.month == 2) & (history.index.day == 29))]
    arrays = {}
    for year in source_years:
        rows = history[history.index.year == year]
        if rows.empty:
            raise ForecastError(f"Temperature history has no data for source year {year}")
        values = np.full((DAYS_IN_YEAR, 2), np.nan)
        values[day_of_year(rows.index)] = rows[[DRY_BULB, WET_BULB]].to_numpy(dtype=float)
        arrays[year] = values
    return arrays


def bootstrap_path(
        sources: Dict[int, np.ndarray], horizon_doy: np.ndarray, config: BootstrapConfig,
        rng: np.random.Generator) -> TemperaturePath:
    """
    Tile the horizon left to right with blocks. Each block draws a length uniform on [m - Δ, m + Δ], a source year
    and a day-of-year shift uniform on [-Δ, Δ]; it copies the source year's temperatures at (day-of-year + shift)
    mod 365. The last block is cut at the end of the horizon. A block hitting missing history is redrawn.
    """
    years = sorted(sources)
    horizon = len(horizon_doy)
    values = np.empty((horizon, 2))
    blocks = []
    start = 0
    while start < horizon:
        for _ in range(MAX_BLOCK_REDRAWS):
            length = int(rng.integers(config.min_block_length, config.max_block_length + 1))
            year = years[int(rng.integers(len(years)))]
            shift = int(rng.integers(-config.half_range, config.half_range + 1))
            covered = min(length, horizon - start)
            source_days = (horizon_doy[start:start + covered] + shift) % DAYS_IN_YEAR
            block = sources[year][source_days]
            if np.isfinite(block).all():
                break
            APP_LOGGER.debug(f"Redrawing block at horizon day {start}: gap in {year} near day {source_days[0]}")
        else:
            raise ForecastError(f"Couldn't find gap-free history for the block at horizon day {start}")
        values[start:start + covered] = block
        blocks.append(TemperatureBlock(start, length, year, int(source_days[0]), shift))
        start += covered
    return TemperaturePath(values[:, 0], values[:, 1], blocks)


def bootstrap_temperatures(
        history: pd.DataFrame, horizon: pd.DatetimeIndex, config: BootstrapConfig) -> List[TemperaturePath]:
    """
    `config.paths` bootstrapped temperature paths over `horizon`, resampled from the `config.source_years` of the
    daily `history`. Path i uses its own random stream derived from (seed, i).
    """
    if not config.source_years:
        raise ForecastError("No bootstrap source years configured")
    sources = _source_history(history, config.source_years)
    horizon_doy = day_of_year(pd.DatetimeIndex(horizon))
    return [
        bootstrap_path(sources, horizon_doy, config, substream(config.seed, BOOTSTRAP, index))
        for index in range(config.paths)
    ]


def mixture_quantiles(mu: np.ndarray, sigma: np.ndarray, level: float) -> np.ndarray:
    """
    The `level` quantile of each row's equally weighted Gaussian mixture, for (T, P) component arrays. Bisection
    inside the bracket formed by the components' own quantiles, which always contains the mixture quantile. A row is
    done once its mixture CDF is within `CDF_TOLERANCE` of `level`, or once the bracket is down to float resolution.
    """
    if not 0 < level < 1:
        raise ForecastError(f"Quantile level must be in (0, 1), got {level!r}")
    mu = np.atleast_2d(mu)
    sigma = np.atleast_2d(sigma)
    z = ndtri(level)
    if mu.shape[1] == 1:
        return mu[:, 0] + sigma[:, 0] * z

    component_quantiles = mu + sigma * z
    low, high = component_quantiles.min(axis=1), component_quantiles.max(axis=1)
    for _ in range(MAX_BISECTIONS):
        middle = 0.5 * (low + high)
        error = ndtr((middle[:, None] - mu) / sigma).mean(axis=1) - level
        resolved = np.abs(high - low) <= 4 * np.spacing(np.maximum(np.abs(low), np.abs(high)))
        done = (np.abs(error) < CDF_TOLERANCE) | resolved
        if done.all():
            break
        below = error < 0
        low = np.where(~done & below, middle, low)
        high = np.where(~done & ~below, middle, high)
    return 0.5 * (low + high)


def mixture_quantile(day: MixtureDay, level: float) -> float:
    """Quantile of one day's mixture in log space"""
    return float(mixture_quantiles(day.mu[None, :], day.sigma[None, :], level)[0])


def forecast_exante(
        model: TrainedNax, paths: Sequence[TemperaturePath],
        days: pd.DataFrame) -> Tuple[MixtureDensity, DensityForecast]:
    """
    Run the network once per temperature path over the calendar of `days` and combine the per-path Gaussians into
    equally weighted mixtures. The summary forecast carries the mixture mean and total standard deviation in log
    space and the mixture median as its point forecast.
    """
    if not paths:
        raise ForecastError("Ex-ante forecasting needs at least one temperature path")
    if CONSUMPTION in days.columns:
        raise ForecastError("Out-of-sample inputs must not include consumption")
    if any(len(p) != len(days) for p in paths):
        raise ForecastError(f"Every temperature path must cover the {len(days)} days of the horizon")

    t = horizon_index(model, days.index)
    weather = np.stack([np.column_stack([p.dry_bulb, p.wet_bulb]) for p in paths], axis=1)
    mu, sigma = _network_density(model, days, t, weather)
    dates = pd.DatetimeIndex(days.index, name="date")
    mixture = MixtureDensity(dates, mu, sigma)

    if mixture.paths == 1:
        return mixture, DensityForecast(dates, mu[:, 0], sigma[:, 0], np.exp(mu[:, 0]), mixture)

    variance = mixture.variance()
    if np.any(variance < np.mean(sigma ** 2, axis=1) * (1 - 1e-12)):
        raise ForecastError("Mixture variance fell below the mean component variance")
    median = mixture_quantiles(mu, sigma, 0.5)
    return mixture, DensityForecast(dates, mu.mean(axis=1), np.sqrt(variance), np.exp(median), mixture)


def quantile_table(forecast: DensityForecast, levels: Sequence[float]) -> np.ndarray:
    """(T, len(levels)) consumption-space quantiles (GWh)"""
    if forecast.mixture is None or forecast.mixture.paths == 1:
        return forecast.gaussian_quantiles(levels)
    return np.exp(np.column_stack([
        mixture_quantiles(forecast.mixture.mu, forecast.mixture.sigma, level) for level in levels]))


def forecast_frame(forecast: DensityForecast) -> pd.DataFrame:
    """`date,point_gwh,sigma_log,q01,q05,q25,q50,q75,q95,q99`"""
    quantiles = quantile_table(forecast, [q / 100 for q in REPORTED_QUANTILES])
    frame = pd.DataFrame({
        "date": forecast.dates.strftime("%Y-%m-%d"),
        "point_gwh": forecast.point_gwh,
        "sigma_log": forecast.sigma_log,
    })
    for column, q in enumerate(REPORTED_QUANTILES):
        frame[f"q{q:02d}"] = quantiles[:, column]
    return frame


def density_slices(forecast: DensityForecast, year: Optional[int] = None, points: int = 201) -> pd.DataFrame:
    """
    CDF and PDF of consumption (GWh) on a grid for Jan 15, Apr 15, Jul 15 and Oct 15 of the forecast year:
    `date,consumption_gwh,cdf,pdf`.
    """
    year = forecast.dates[0].year if year is None else year
    rows = []
    for month, day in SLICE_DAYS:
        matches = np.flatnonzero(forecast.dates == pd.Timestamp(year, month, day))
        if not matches.size:
            continue
        index = matches[0]
        if forecast.mixture is not None:
            mixture_day = forecast.mixture.day(index)
        else:
            mixture_day = MixtureDay(forecast.mean_log[index:index + 1], forecast.sigma_log[index:index + 1])
        low = np.min(mixture_day.mu - 4 * mixture_day.sigma)
        high = np.max(mixture_day.mu + 4 * mixture_day.sigma)
        log_grid = np.linspace(low, high, points)
        consumption = np.exp(log_grid)
        rows.append(pd.DataFrame({
            "date": forecast.dates[index].strftime("%Y-%m-%d"),
            "consumption_gwh": consumption,
            "cdf": mixture_day.cdf(log_grid),
            "pdf": mixture_day.pdf(log_grid) / consumption,
        }))
    if not rows:
        return pd.DataFrame(columns=["date", "consumption_gwh", "cdf", "pdf"])
    return pd.concat(rows, ignore_index=True)


def paths_frame(paths: Sequence[TemperaturePath], dates: pd.DatetimeIndex) -> pd.DataFrame:
    """Provenance of every bootstrapped block: `path_id,block,start_date,length,days,source_year,source_day,shift`"""
    rows = []
    for path_id, path in enumerate(paths):
        for number, block in enumerate(path.blocks):
            covered = min(block.length, len(path) - block.start)
            rows.append((path_id, number, dates[block.start].strftime("%Y-%m-%d"), block.length, covered,
                         block.source_year, block.source_day, block.shift))
    return pd.DataFrame(
        rows, columns=["path_id", "block", "start_date", "length", "days", "source_year", "source_day", "shift"])


def read_forecast(forecast_csv: Path, mixture_csv: Optional[Path] = None) -> DensityForecast:
    """
    Rebuild a density forecast from written outputs: the per-path mixture file when given, otherwise the Gaussian
    described by `point_gwh` (the median, exp of the log mean) and `sigma_log` of the forecast file.
    """
    try:
        frame = pd.read_csv(forecast_csv, encoding="utf-8")
        dates = pd.DatetimeIndex(pd.to_datetime(frame["date"], format="ISO8601"), name="date")
        if mixture_csv is None:
            mean = np.log(frame["point_gwh"].to_numpy(dtype=float))
            return DensityForecast(dates, mean, frame["sigma_log"].to_numpy(dtype=float), np.exp(mean))
        mixture = MixtureDensity.from_frame(pd.read_csv(mixture_csv, encoding="utf-8"))
    except (OSError, KeyError, ValueError, pd.errors.ParserError) as err:
        raise ForecastError(f"Unable to read the forecast from {forecast_csv}: {err}")
    if not mixture.dates.equals(dates):
        raise ForecastError(f"{mixture_csv} and {forecast_csv} cover different dates")
    median = mixture_quantiles(mixture.mu, mixture.sigma, 0.5)
    return DensityForecast(dates, mixture.mu.mean(axis=1), np.sqrt(mixture.variance()), np.exp(median), mixture)
