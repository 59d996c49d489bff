"""
The validation, test and robustness protocol.

Every model is fitted on a trailing window of whole years that ends the day before its forecast horizon starts, and
only ever sees consumption from that window: the out-of-sample inputs handed to the forecasters carry the calendar
and the temperatures of the horizon but no consumption.
"""
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from nax_forecast.benchmarks import fit_arx, forecast_arx, forecast_glm_density
from nax_forecast.core.exceptions import InsufficientHistoryError, NonFiniteError
from nax_forecast.core.models import ForecastMode
from nax_forecast.core.models.density import BootstrapConfig, DensityForecast, MixtureDensity, TemperaturePath
from nax_forecast.core.models.evaluation import EvalReport
from nax_forecast.core.models.features import MinMaxScaler
from nax_forecast.core.models.glm import ArxFit, GlmFit
from nax_forecast.core.models.grid import GridEntry, GridResult, GridSpec, SkippedCombination
from nax_forecast.core.models.nax import NaxConfig, TrainedNax
from nax_forecast.core.models.records import CONSUMPTION, DRY_BULB, WET_BULB, LogSeries
from nax_forecast.core.models.segmentation import DateRange, Segmentation
from nax_forecast.evaluation import evaluate_forecast, rmse
from nax_forecast.features import calendar_matrix, fit_scaler, input_matrix, leap_free_dates, transform
from nax_forecast.forecast import bootstrap_temperatures, calendar_frame, forecast_exante, forecast_expost
from nax_forecast.glm import ResidualDiagnostics, build_design_matrix, fit_ols, glm_predict, residual_diagnostics
from nax_forecast.ingest import Holidays, OutlierReport, daily_frame, log_transform, remove_leap_days, treat_outliers
from nax_forecast.nax import forward, train
from nax_forecast.seeding import GRID, TRAINING, derived_seed, substream

APP_LOGGER = logging.getLogger(__name__)

TARGET_COLUMNS = ("residual",)
COMPARISON_COLUMNS = ["model", "rmse_gwh", "mape_pct", "apl_gwh", "uc_stat", "uc_reject", "cc_stat", "cc_reject"]
ROBUSTNESS_COLUMNS = ["year", "model", "mape_pct", "rmse_gwh", "apl_gwh"]
POINT_COMPARISON_COLUMNS = ["mode", "rmse_gwh", "mape_pct", "apl_gwh", "violations_95"]


@dataclass(frozen=True, eq=False)
class PreparedData:
    """The daily frame with Feb 29 removed, and its log series with the day index t counted from the first date"""

    daily: pd.DataFrame
    log_series: LogSeries

    @property
    def date_range(self) -> DateRange:
        return DateRange(self.daily.index[0].date(), self.daily.index[-1].date())


@dataclass(frozen=True, eq=False)
class Deseasonalised:
    """The trend and seasonality layer fitted on one training window, after the outlier pass"""

    window: DateRange
    days: pd.DataFrame
    series: LogSeries
    calendar: np.ndarray
    glm: GlmFit
    outliers: OutlierReport


@dataclass(frozen=True, eq=False)
class Horizon:
    """Out-of-sample inputs (no consumption column), their day indices and the realised consumption (GWh)"""

    window: DateRange
    days: pd.DataFrame
    t: np.ndarray
    realized: np.ndarray


@dataclass(frozen=True, eq=False)
class Benchmarks:
    glm: GlmFit
    arx: ArxFit
    last_y: float


@dataclass(frozen=True, eq=False)
class TestRun:
    model: TrainedNax
    forecast: DensityForecast
    report: EvalReport
    comparison: pd.DataFrame
    reports: Dict[str, EvalReport]
    diagnostics: ResidualDiagnostics


@dataclass(frozen=True, eq=False)
class ForecastRun:
    mode: ForecastMode
    model: TrainedNax
    forecast: DensityForecast
    mixture: Optional[MixtureDensity] = None
    paths: Optional[List[TemperaturePath]] = None
    report: Optional[EvalReport] = None
    point_comparison: Optional[pd.DataFrame] = None


def prepare(daily: pd.DataFrame) -> PreparedData:
    days = remove_leap_days(daily)
    return PreparedData(days, log_transform(days))


def _covered_days(prepared: PreparedData, window: DateRange, purpose: str) -> pd.DataFrame:
    expected = leap_free_dates(window.start, window.end)
    missing = expected.difference(prepared.daily.index)
    if len(missing):
        raise InsufficientHistoryError(
            f"The {purpose} {window} needs data from {missing[0].date()} to {missing[-1].date()} "
            f"({len(missing)} day(s) missing); the data covers {prepared.date_range}")
    return prepared.daily.loc[expected]


def training_window(horizon_start, years: int) -> DateRange:
    return DateRange.trailing(horizon_start, years)


def oos_days(prepared: PreparedData, window: DateRange) -> Horizon:
    """The horizon's calendar flags and temperatures, kept apart from its realised consumption"""
    days = _covered_days(prepared, window, "forecast horizon")
    t = prepared.log_series.window(window.start, window.end).t
    return Horizon(window, days.drop(columns=[CONSUMPTION]), t, days[CONSUMPTION].to_numpy(dtype=float))


def future_calendar(window: DateRange, holidays: Holidays) -> pd.DataFrame:
    """Calendar flags for a horizon with no data at all"""
    dates = leap_free_dates(window.start, window.end)
    nan = np.full(len(dates), np.nan)
    return calendar_frame(daily_frame(dates, nan, nan, nan, holidays))


def deseasonalise(prepared: PreparedData, window: DateRange) -> Deseasonalised:
    """
    Fit the GLM on the window, winsorise outlying residuals, and refit on the treated series when any day was
    changed.
    """
    days = _covered_days(prepared, window, "training window")
    series = prepared.log_series.window(window.start, window.end)
    calendar = calendar_matrix(days, series.t)
    design = build_design_matrix(calendar)
    first = fit_ols(design, series.values)
    treated, outliers = treat_outliers(series, first.residuals)
    glm = fit_ols(design, treated.values) if len(outliers) else first
    return Deseasonalised(window, days, treated, calendar, glm, outliers)


def _validation_targets(
        base: Deseasonalised, input_scaler: MinMaxScaler, target_scaler: MinMaxScaler,
        validation: Horizon) -> Tuple[np.ndarray, np.ndarray]:
    """Scaled inputs and GLM residuals of the validation horizon, with the training window's GLM and scalers"""
    inputs = input_matrix(validation.days, validation.t)
    calendar = calendar_matrix(validation.days, validation.t)
    residuals = np.log(validation.realized) - glm_predict(base.glm.coefficients, calendar)
    return transform(input_scaler, inputs), transform(target_scaler, residuals[:, None])[:, 0]


def fit_model(
        prepared: PreparedData, window: DateRange, config: NaxConfig,
        base: Optional[Deseasonalised] = None, rng: Optional[np.random.Generator] = None,
        validation: Optional[Horizon] = None) -> TrainedNax:
    """
    Train the network on the GLM residuals of `window`. Both scalers are fitted on this window alone. The state at
    the end of the window comes from running the trained recurrence over the whole window.

    With a `validation` horizon following the window, its residuals against the window's GLM decide early stopping.
    """
    base = deseasonalise(prepared, window) if base is None else base
    inputs = input_matrix(base.days, base.series.t)
    residuals = base.glm.residuals
    input_scaler = fit_scaler(inputs)
    target_scaler = fit_scaler(residuals, TARGET_COLUMNS)
    scaled_inputs = transform(input_scaler, inputs)
    scaled_targets = transform(target_scaler, residuals[:, None])[:, 0]

    rng = substream(config.seed, TRAINING) if rng is None else rng
    monitored = None if validation is None else _validation_targets(base, input_scaler, target_scaler, validation)
    result = train(config, scaled_inputs, scaled_targets, rng, monitored)
    cache = forward(result.params, scaled_inputs, activation=config.activation)
    APP_LOGGER.info(
        f"Trained {config.neurons}-neuron {config.activation.value} network on {window}: loss "
        f"{result.loss_history[0]:.4f} -> {result.loss_history[-1]:.4f} in {len(result.loss_history) - 1} epoch(s)")
    return TrainedNax(
        config=config,
        params=result.params,
        glm=base.glm.coefficients,
        residual_variance=base.glm.residual_variance,
        input_scaler=input_scaler,
        target_scaler=target_scaler,
        train_range=window,
        last_feedback=cache.last_feedback,
        last_t=int(base.series.t[-1]),
        last_date=base.series.dates[-1].date(),
        loss_history=result.loss_history,
        best_epoch=result.best_epoch,
    )


def fit_benchmarks(base: Deseasonalised) -> Benchmarks:
    arx = fit_arx(base.series, base.calendar, base.days[[DRY_BULB, WET_BULB]].to_numpy(dtype=float))
    return Benchmarks(base.glm, arx, float(base.series.values[-1]))


def benchmark_forecasts(benchmarks: Benchmarks, horizon: Horizon) -> Dict[str, DensityForecast]:
    return {
        "GLM": forecast_glm_density(benchmarks.glm, horizon.days, horizon.t),
        "ARX": forecast_arx(benchmarks.arx, horizon.days, horizon.t, benchmarks.last_y),
    }


def compare_models(
        forecasts: Mapping[str, DensityForecast], realized) -> Tuple[pd.DataFrame, Dict[str, EvalReport]]:
    """Score each model's forecast with the same harness, one row per model"""
    reports = {name: evaluate_forecast(forecast, realized) for name, forecast in forecasts.items()}
    rows = [
        (name, r.rmse, r.mape, r.apl, r.uc.statistic, r.uc.reject, r.cc.statistic, r.cc.reject)
        for name, r in reports.items()
    ]
    return pd.DataFrame(rows, columns=COMPARISON_COLUMNS), reports


# Worker state for the grid search: the prepared data and the validation horizon, bound once per process
_WORKER_STATE: Dict[str, object] = {}


def _init_worker(prepared: PreparedData, horizon: Horizon):
    _WORKER_STATE["prepared"] = prepared
    _WORKER_STATE["horizon"] = horizon


def _evaluate_combination(
        prepared: PreparedData, horizon: Horizon, index: int, config: NaxConfig,
        seeds: Sequence[int]) -> Union[GridEntry, SkippedCombination]:
    window = training_window(horizon.window.start, config.window_years)
    try:
        base = deseasonalise(prepared, window)
        scores, epochs = [], []
        for seed in seeds:
            model = fit_model(prepared, window, config.with_seed(seed), base, validation=horizon)
            scores.append(rmse(forecast_expost(model, horizon.days).point_gwh, horizon.realized))
            epochs.append(config.epochs if model.best_epoch is None else model.best_epoch)
    except (InsufficientHistoryError, NonFiniteError) as err:
        return SkippedCombination(index, config, str(err))
    return GridEntry(index, config, float(np.mean(scores)), tuple(scores), tuple(epochs))


def _evaluate_in_worker(index: int, config: NaxConfig, seeds: Sequence[int]) -> Union[GridEntry, SkippedCombination]:
    return _evaluate_combination(_WORKER_STATE["prepared"], _WORKER_STATE["horizon"], index, config, seeds)


def run_validation(
        prepared: PreparedData, segmentation: Segmentation, grid: GridSpec, seed: int,
        workers: int = 1) -> GridResult:
    """
    Train every grid combination on the trailing window (of its own length) ending at the start of the validation
    period, forecast the validation period ex post and rank by RMSE in GWh. Combinations without enough history, or
    whose training diverges, are skipped with a warning. Replicate r of combination i trains with the seed derived
    from (seed, i, r), so the leaderboard doesn't depend on `workers`.
    """
    horizon = oos_days(prepared, segmentation.validation)
    tasks = [
        (index, config, [derived_seed(seed, GRID, index, replicate) for replicate in range(grid.replicates)])
        for index, config in enumerate(grid.combinations())
    ]
    APP_LOGGER.info(f"Validating {len(tasks)} combination(s) on {segmentation.validation} with {workers} worker(s)")

    outcomes = []
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(
                max_workers=workers, initializer=_init_worker, initargs=(prepared, horizon)) as executor:
            futures = [executor.submit(_evaluate_in_worker, *task) for task in tasks]
            for future in as_completed(futures):
                outcomes.append(future.result())
    else:
        outcomes = [_evaluate_combination(prepared, horizon, *task) for task in tasks]

    entries = [o for o in outcomes if isinstance(o, GridEntry)]
    skipped = sorted((o for o in outcomes if isinstance(o, SkippedCombination)), key=lambda s: s.index)
    for skip in skipped:
        APP_LOGGER.warning(f"Skipped combination {skip.index}: {skip.reason}")
    result = GridResult(entries, skipped)
    if result.selected is None:
        raise InsufficientHistoryError(
            f"No grid combination could be evaluated on {segmentation.validation} ({len(skipped)} skipped)")
    APP_LOGGER.info(f"Selected combination {result.selected.index} with validation RMSE {result.selected.rmse:.4f} GWh")
    return result


def run_test(prepared: PreparedData, segmentation: Segmentation, config: NaxConfig, seed: int) -> TestRun:
    """
    Retrain `config` on the window just before the test period, forecast the test period ex post, and score it
    together with the GLM and ARX benchmarks fitted on the same window.
    """
    horizon = oos_days(prepared, segmentation.test)
    window = training_window(segmentation.test.start, config.window_years)
    base = deseasonalise(prepared, window)
    model = fit_model(prepared, window, config.with_seed(seed), base)
    forecasts = {"NAX": forecast_expost(model, horizon.days)}
    forecasts.update(benchmark_forecasts(fit_benchmarks(base), horizon))
    comparison, reports = compare_models(forecasts, horizon.realized)
    return TestRun(model, forecasts["NAX"], reports["NAX"], comparison, reports, residual_diagnostics(base.glm))


def run_robustness(
        prepared: PreparedData, years: Sequence[DateRange], config: NaxConfig, seed: int) -> pd.DataFrame:
    """`year,model,mape_pct,rmse_gwh,apl_gwh` for NAX and both benchmarks, each retrained before each year"""
    rows = []
    for period in years:
        horizon = oos_days(prepared, period)
        window = training_window(period.start, config.window_years)
        base = deseasonalise(prepared, window)
        model = fit_model(prepared, window, config.with_seed(seed), base)
        forecasts = {"NAX": forecast_expost(model, horizon.days)}
        forecasts.update(benchmark_forecasts(fit_benchmarks(base), horizon))
        _, reports = compare_models(forecasts, horizon.realized)
        rows.extend((period.start.year, name, r.mape, r.rmse, r.apl) for name, r in reports.items())
        APP_LOGGER.info(f"Robustness {period}: NAX MAPE {reports['NAX'].mape:.3f}%")
    return pd.DataFrame(rows, columns=ROBUSTNESS_COLUMNS)


def _point_row(mode: ForecastMode, report: EvalReport) -> tuple:
    return mode.value, report.rmse, report.mape, report.apl, report.violations_95


def run_forecast(
        prepared: PreparedData, window: DateRange, mode: ForecastMode, holidays: Holidays = frozenset(),
        config: Optional[NaxConfig] = None, model: Optional[TrainedNax] = None,
        bootstrap: Optional[BootstrapConfig] = None) -> ForecastRun:
    """
    Forecast `window` from a trained `model`, or from a model trained on the trailing window with `config`.

    Ex post needs the realised temperatures of the horizon. Ex ante only needs its calendar: temperatures are
    bootstrapped from the history before the horizon (source years default to the years of the training window).
    When the horizon's data is available the forecast is scored, and an ex-ante run is also compared with the
    ex-post forecast of the same model.
    """
    if model is None:
        if config is None:
            raise ValueError("Need either a trained model or a config to train one")
        model = fit_model(prepared, training_window(window.start, config.window_years), config)

    try:
        horizon = oos_days(prepared, window)
    except InsufficientHistoryError:
        if mode is ForecastMode.EX_POST:
            raise
        horizon = None

    if mode is ForecastMode.EX_POST:
        forecast = forecast_expost(model, horizon.days)
        return ForecastRun(mode, model, forecast, report=evaluate_forecast(forecast, horizon.realized))

    bootstrap = bootstrap or BootstrapConfig()
    if not bootstrap.source_years:
        bootstrap = replace(bootstrap, source_years=tuple(model.train_range.years))
    history = prepared.daily.loc[prepared.daily.index < pd.Timestamp(window.start), [DRY_BULB, WET_BULB]]
    days = calendar_frame(horizon.days) if horizon else future_calendar(window, holidays)
    paths = bootstrap_temperatures(history, days.index, bootstrap)
    mixture, forecast = forecast_exante(model, paths, days)
    APP_LOGGER.info(f"Ex-ante forecast of {window} over {len(paths)} bootstrapped temperature path(s)")
    if horizon is None:
        return ForecastRun(mode, model, forecast, mixture, paths)

    report = evaluate_forecast(forecast, horizon.realized)
    expost_report = evaluate_forecast(forecast_expost(model, horizon.days), horizon.realized)
    comparison = pd.DataFrame(
        [_point_row(ForecastMode.EX_ANTE, report), _point_row(ForecastMode.EX_POST, expost_report)],
        columns=POINT_COMPARISON_COLUMNS)
    return ForecastRun(mode, model, forecast, mixture, paths, report, comparison)
