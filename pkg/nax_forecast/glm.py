"""
The trend and seasonality layer: Y_t = T_t + S_t + R_t with T_t = β0 + β1 t and
S_t = β2 sin ωt + β3 cos ωt + β4 sin 2ωt + β5 cos 2ωt + β6 D_sat + β7 D_sun + β8 D_hol, fitted by OLS.
"""
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
import pandas as pd
import statsmodels.api as sm
from statsmodels.tsa.stattools import acf, adfuller, pacf

from nax_forecast.core.exceptions import DegenerateFitError, RankDeficientError
from nax_forecast.core.models import GLM_COLUMNS
from nax_forecast.core.models.features import CalendarFeatures
from nax_forecast.core.models.glm import GlmCoefficients, GlmFit

APP_LOGGER = logging.getLogger(__name__)

SIGNIFICANCE_THRESHOLD_1PCT = 2.576  # two-sided standard normal


def build_design_matrix(features: Union[Sequence[CalendarFeatures], np.ndarray]) -> np.ndarray:
    """
    Columns [1, t, sin ωt, cos ωt, sin 2ωt, cos 2ωt, d_sat, d_sun, d_hol], from CalendarFeatures or from a (T, 8)
    calendar matrix.
    """
    if isinstance(features, np.ndarray):
        calendar = np.asarray(features, dtype=float)
    else:
        calendar = np.array([f.as_tuple() for f in features], dtype=float)
    if calendar.ndim != 2 or calendar.shape[0] == 0 or calendar.shape[1] != len(GLM_COLUMNS) - 1:
        raise ValueError(f"Expected a nonempty (T, {len(GLM_COLUMNS) - 1}) calendar block, got {calendar.shape}")
    return np.column_stack([np.ones(len(calendar)), calendar])


def ols(design: np.ndarray, targets: np.ndarray, names: Tuple[str, ...]) -> Tuple[GlmCoefficients, np.ndarray, float]:
    """OLS via QR; returns the coefficients, the fitted values and the residual variance SSR / (n - p)"""
    design = np.asarray(design, dtype=float)
    targets = np.asarray(targets, dtype=float)
    n, p = design.shape
    if n < p:
        raise RankDeficientError(f"Need at least as many rows as columns, got {n} rows and {p} columns")
    if (rank := np.linalg.matrix_rank(design)) < p:
        raise RankDeficientError(f"Design matrix has rank {rank} but {p} columns ({', '.join(names)})")

    results = sm.OLS(targets, design).fit(method="qr")
    fitted = design @ results.params
    dof = n - p
    variance = float(np.sum((targets - fitted) ** 2) / dof) if dof > 0 else 0.0
    std_errors = np.sqrt(np.clip(np.diag(results.normalized_cov_params), 0, None) * variance)
    return GlmCoefficients(results.params, std_errors, names), fitted, variance


def fit_ols(design: np.ndarray, targets: np.ndarray) -> GlmFit:
    targets = np.asarray(targets, dtype=float)
    coefficients, fitted, variance = ols(design, targets, GLM_COLUMNS)
    APP_LOGGER.debug(f"GLM fitted on {len(targets)} days, residual variance {variance:.4g}")
    return GlmFit(coefficients, fitted, targets - fitted, variance)


def glm_predict(coefficients: GlmCoefficients, features: Union[Sequence[CalendarFeatures], np.ndarray]) -> np.ndarray:
    """T_t + S_t. `features` may also be a ready-made design matrix."""
    if isinstance(features, np.ndarray) and features.ndim == 2 and features.shape[1] == len(GLM_COLUMNS):
        design = features
    else:
        design = build_design_matrix(features)
    return design @ coefficients.values


def coefficient_significance(fit: GlmFit) -> pd.DataFrame:
    """`name,estimate,std_error,t_stat,significant_1pct` with t = β / SE against the two-sided 1% threshold"""
    if fit.dof <= 0:
        raise DegenerateFitError(f"Need positive residual degrees of freedom, got {fit.dof}")

    values, std_errors = fit.coefficients.values, fit.coefficients.std_errors
    if degenerate := [n for n, v, se in zip(fit.coefficients.names, values, std_errors) if se == 0 and v != 0]:
        raise DegenerateFitError(f"Zero standard error for nonzero coefficient(s) {degenerate}")
    with np.errstate(divide="ignore", invalid="ignore"):
        t_stats = np.where(std_errors > 0, values / np.where(std_errors > 0, std_errors, 1.0), 0.0)
    return pd.DataFrame({
        "name": fit.coefficients.names,
        "estimate": values,
        "std_error": std_errors,
        "t_stat": t_stats,
        "significant_1pct": np.abs(t_stats) > SIGNIFICANCE_THRESHOLD_1PCT,
    })


@dataclass(frozen=True)
class ResidualDiagnostics:
    """Autocorrelation structure of the GLM residuals and an ADF unit-root test on them"""

    correlogram: pd.DataFrame  # lag, acf, pacf
    adf_statistic: float
    adf_pvalue: float

    def to_json(self):
        return {"adf_statistic": self.adf_statistic, "adf_pvalue": self.adf_pvalue}


def residual_diagnostics(fit: GlmFit, lags: int = 30) -> ResidualDiagnostics:
    residuals = fit.residuals
    lags = max(1, min(lags, len(residuals) // 2 - 1))
    auto = acf(residuals, nlags=lags, fft=True)
    partial = pacf(residuals, nlags=lags, method="ywadjusted")
    adf_statistic, adf_pvalue, *_ = adfuller(residuals, autolag="AIC")
    return ResidualDiagnostics(
        correlogram=pd.DataFrame({"lag": np.arange(lags + 1), "acf": auto, "pacf": partial}),
        adf_statistic=float(adf_statistic),
        adf_pvalue=float(adf_pvalue),
    )
