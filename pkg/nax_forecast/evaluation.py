"""
Forecast evaluation: point accuracy (RMSE, MAPE), sharpness (pinball loss over percentiles 1..99 and its average,
APL) and reliability (central CI backtesting with the unconditional and conditional coverage LR tests).
All consumption-space quantities are in GWh.
"""
import logging
from typing import Dict, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import xlogy

from nax_forecast.core.exceptions import EvaluationError
from nax_forecast.core.models import PERCENTILES
from nax_forecast.core.models.density import DensityForecast
from nax_forecast.core.models.evaluation import CoverageTest, EvalReport, ViolationSeries
from nax_forecast.forecast import quantile_table

APP_LOGGER = logging.getLogger(__name__)

UC_THRESHOLD = 3.84  # χ²(1), 95%
CC_THRESHOLD = 5.99  # χ²(2), 95%
ALPHA_GRID = tuple(round(a / 100, 2) for a in range(1, 100))
REPORT_ALPHA = 0.95


def _aligned(forecast: np.ndarray, realized: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    forecast = np.asarray(forecast, dtype=float)
    realized = np.asarray(realized, dtype=float)
    if forecast.shape[0] != realized.shape[0]:
        raise EvaluationError(f"Forecast covers {forecast.shape[0]} days but there are {realized.shape[0]} realised")
    if realized.size == 0:
        raise EvaluationError("Nothing to evaluate: no days")
    return forecast, realized


def rmse(points, realized) -> float:
    points, realized = _aligned(points, realized)
    return float(np.sqrt(np.mean((realized - points) ** 2)))


def mape(points, realized) -> float:
    """100 * mean(|y - ŷ| / y)"""
    points, realized = _aligned(points, realized)
    if not (realized > 0).all():
        raise EvaluationError("MAPE needs strictly positive realised values")
    return float(100.0 * np.mean(np.abs(realized - points) / realized))


def pinball(quantiles: np.ndarray, realized, percentiles: Sequence[int] = PERCENTILES) -> Tuple[np.ndarray, float]:
    """
    Mean pinball loss per percentile over the days, for (T, len(percentiles)) quantile forecasts, and their average
    (APL). Quantile curves that decrease in the percentile on any day are reported, not repaired.
    """
    quantiles, realized = _aligned(quantiles, realized)
    if quantiles.shape[1] != len(percentiles):
        raise EvaluationError(f"Expected {len(percentiles)} quantile columns, got {quantiles.shape[1]}")
    if (bad := np.flatnonzero((np.diff(quantiles, axis=1) < 0).any(axis=1))).size:
        raise EvaluationError(f"Quantile forecasts decrease in the percentile on {bad.size} day(s), first at row {bad[0]}")

    levels = np.asarray(percentiles, dtype=float) / 100.0
    diff = realized[:, None] - quantiles
    losses = np.where(diff >= 0, levels * diff, (levels - 1.0) * diff)
    per_percentile = losses.mean(axis=0)
    return per_percentile, float(per_percentile.mean())


def central_interval(forecast: DensityForecast, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    """[q_(1-α)/2, q_(1+α)/2] in consumption space"""
    bounds = quantile_table(forecast, [(1 - alpha) / 2, (1 + alpha) / 2])
    return bounds[:, 0], bounds[:, 1]


def backtest_ci(
        forecast: DensityForecast, realized,
        alphas: Sequence[float] = ALPHA_GRID) -> Tuple[Dict[float, float], Dict[float, ViolationSeries]]:
    """Fraction of days inside each central α CI (bounds inclusive) and the per-day violations"""
    _, realized = _aligned(forecast.point_gwh, realized)
    coverage, violations = {}, {}
    for alpha in alphas:
        low, high = central_interval(forecast, alpha)
        outside = (realized < low) | (realized > high)
        violations[alpha] = ViolationSeries(alpha, outside.astype(int))
        coverage[alpha] = float(1.0 - outside.mean())
    return coverage, violations


def _bernoulli_loglik(successes: float, failures: float, rate: float) -> float:
    # xlogy gives the 0·ln 0 = 0 convention
    return float(xlogy(successes, rate) + xlogy(failures, 1.0 - rate))


def uc_test(violations: ViolationSeries, rate: float) -> CoverageTest:
    """
    Kupiec unconditional coverage: LR = -2 ln[p^n1 (1-p)^n0 / (π^n1 (1-π)^n0)] with π = n1 / n,
    against χ²(1) at 95%.
    """
    n = len(violations)
    if n < 1:
        raise EvaluationError("uc_test needs at least one day")
    n1 = violations.count
    n0 = n - n1
    statistic = -2.0 * (_bernoulli_loglik(n1, n0, rate) - _bernoulli_loglik(n1, n0, n1 / n))
    return CoverageTest(max(statistic, 0.0), UC_THRESHOLD)


def transition_counts(violations: ViolationSeries) -> Tuple[int, int, int, int]:
    """(n00, n01, n10, n11), where nij counts days in state i followed by a day in state j"""
    previous, current = violations.violations[:-1], violations.violations[1:]
    return (int(np.sum((previous == 0) & (current == 0))), int(np.sum((previous == 0) & (current == 1))),
            int(np.sum((previous == 1) & (current == 0))), int(np.sum((previous == 1) & (current == 1))))


def independence_statistic(violations: ViolationSeries) -> float:
    n00, n01, n10, n11 = transition_counts(violations)
    pi = (n01 + n11) / max(n00 + n01 + n10 + n11, 1)
    pi01 = n01 / (n00 + n01) if n00 + n01 else 0.0
    pi11 = n11 / (n10 + n11) if n10 + n11 else 0.0
    restricted = _bernoulli_loglik(n01 + n11, n00 + n10, pi)
    unrestricted = _bernoulli_loglik(n01, n00, pi01) + _bernoulli_loglik(n11, n10, pi11)
    return max(-2.0 * (restricted - unrestricted), 0.0)


def cc_test(violations: ViolationSeries, rate: float) -> CoverageTest:
    """Christoffersen conditional coverage: LR_UC + LR_independence, against χ²(2) at 95%"""
    if len(violations) < 2:
        raise EvaluationError("cc_test needs at least two days")
    return CoverageTest(uc_test(violations, rate).statistic + independence_statistic(violations), CC_THRESHOLD)


def evaluate_forecast(forecast: DensityForecast, realized) -> EvalReport:
    """The full report for a density forecast against realised consumption (GWh)"""
    realized = np.asarray(realized, dtype=float)
    quantiles = quantile_table(forecast, [p / 100 for p in PERCENTILES])
    losses, _ = pinball(quantiles, realized)
    alphas = ALPHA_GRID if REPORT_ALPHA in ALPHA_GRID else ALPHA_GRID + (REPORT_ALPHA,)
    coverage, violations = backtest_ci(forecast, realized, alphas)
    violations_95 = violations[REPORT_ALPHA]
    rate = 1.0 - REPORT_ALPHA
    report = EvalReport(
        rmse=rmse(forecast.point_gwh, realized),
        mape=mape(forecast.point_gwh, realized),
        pinball=losses,
        coverage=coverage,
        uc=uc_test(violations_95, rate),
        cc=cc_test(violations_95, rate),
        violations_95=violations_95.count,
        days=len(realized),
    )
    APP_LOGGER.info(
        f"RMSE {report.rmse:.3f} GWh, MAPE {report.mape:.3f}%, APL {report.apl:.3f} GWh, "
        f"{report.violations_95}/{report.days} days outside the 95% CI")
    return report


def violations_95(forecast: DensityForecast, realized) -> ViolationSeries:
    return backtest_ci(forecast, realized, (REPORT_ALPHA,))[1][REPORT_ALPHA]


def violations_by_month(violations: ViolationSeries, dates: pd.DatetimeIndex) -> pd.DataFrame:
    """`month,days,violations` counts of CI violations per calendar month"""
    if len(dates) != len(violations):
        raise EvaluationError(f"Got {len(dates)} dates for {len(violations)} violation indicators")
    frame = pd.DataFrame({"month": pd.DatetimeIndex(dates).month, "violations": violations.violations})
    counts = frame.groupby("month").agg(days=("violations", "size"), violations=("violations", "sum"))
    return counts.reset_index()


def pinball_frame(report: EvalReport) -> pd.DataFrame:
    return pd.DataFrame({"percentile": PERCENTILES, "loss": report.pinball})


def coverage_frame(report: EvalReport) -> pd.DataFrame:
    return pd.DataFrame({"alpha": list(report.coverage), "empirical": list(report.coverage.values())})
