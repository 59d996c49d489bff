"""Calendar and weather features, and min-max scaling anchored on the training window"""
from datetime import date
from typing import AbstractSet, Optional, Sequence

import numpy as np
import pandas as pd

from nax_forecast.core.exceptions import FeatureError
from nax_forecast.core.models import CALENDAR_COLUMNS, OMEGA, WEATHER_COLUMNS
from nax_forecast.core.models.features import CalendarFeatures, MinMaxScaler
from nax_forecast.core.models.records import DRY_BULB, IS_HOLIDAY, IS_SATURDAY, IS_SUNDAY, WET_BULB

INPUT_COLUMNS = WEATHER_COLUMNS + CALENDAR_COLUMNS


def calendar_features(day: date, t: int, holidays: AbstractSet[date] = frozenset()) -> CalendarFeatures:
    weekday = day.weekday()
    return CalendarFeatures(
        t=t,
        sin_1=float(np.sin(OMEGA * t)),
        cos_1=float(np.cos(OMEGA * t)),
        sin_2=float(np.sin(2 * OMEGA * t)),
        cos_2=float(np.cos(2 * OMEGA * t)),
        d_sat=int(weekday == 5),
        d_sun=int(weekday == 6),
        d_hol=int(day in holidays),
    )


def calendar_matrix(days: pd.DataFrame, t: Sequence[int]) -> np.ndarray:
    """
    (T, 8) calendar block in `CALENDAR_COLUMNS` order for a daily frame. The harmonics use the raw day index t; the
    dummies come from the frame's flags.
    """
    t = np.asarray(t, dtype=float)
    if len(t) != len(days):
        raise FeatureError(f"Got {len(t)} day indices for {len(days)} days")
    return np.column_stack([
        t,
        np.sin(OMEGA * t), np.cos(OMEGA * t),
        np.sin(2 * OMEGA * t), np.cos(2 * OMEGA * t),
        days[IS_SATURDAY].to_numpy(dtype=float),
        days[IS_SUNDAY].to_numpy(dtype=float),
        days[IS_HOLIDAY].to_numpy(dtype=float),
    ])


def weather_matrix(days: pd.DataFrame) -> np.ndarray:
    weather = days[[DRY_BULB, WET_BULB]].to_numpy(dtype=float)
    if not np.isfinite(weather).all():
        first = days.index[np.flatnonzero(~np.isfinite(weather).all(axis=1))[0]]
        raise FeatureError(f"Weather values must be finite; missing or invalid on {first.date()}")
    return weather


def input_matrix(days: pd.DataFrame, t: Sequence[int], weather: Optional[np.ndarray] = None) -> np.ndarray:
    """
    The (T, 10) unscaled network inputs, `INPUT_COLUMNS` order: dry bulb, wet bulb, then the eight calendar inputs.
    `weather` replaces the frame's temperatures, e.g. with a bootstrapped path.
    """
    weather = weather_matrix(days) if weather is None else np.asarray(weather, dtype=float)
    return np.column_stack([weather, calendar_matrix(days, t)])


def fit_scaler(training: np.ndarray, columns: Sequence[str] = INPUT_COLUMNS) -> MinMaxScaler:
    training = np.asarray(training, dtype=float)
    if training.ndim == 1:
        training = training[:, None]
    if training.shape[1] != len(columns):
        raise FeatureError(f"Got {training.shape[1]} columns for {len(columns)} column names")
    if len(training) == 0:
        raise FeatureError("Can't fit a scaler on an empty training matrix")

    mins, maxs = training.min(axis=0), training.max(axis=0)
    if constant := [c for c, lo, hi in zip(columns, mins, maxs) if not hi > lo]:
        raise FeatureError(f"Can't scale constant column(s) {constant}; need at least two distinct values")
    return MinMaxScaler(tuple(columns), mins, maxs)


def _check_columns(scaler: MinMaxScaler, matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[-1] != len(scaler.columns):
        raise FeatureError(f"Scaler has {len(scaler.columns)} columns but the matrix has {matrix.shape[-1]}")
    return matrix


def transform(scaler: MinMaxScaler, matrix: np.ndarray) -> np.ndarray:
    """x' = (x - min) / (max - min), column-wise over the last axis"""
    return (_check_columns(scaler, matrix) - scaler.mins) / scaler.ranges


def inverse_transform(scaler: MinMaxScaler, matrix: np.ndarray) -> np.ndarray:
    return _check_columns(scaler, matrix) * scaler.ranges + scaler.mins


def leap_free_dates(start: date, end: date) -> pd.DatetimeIndex:
    """Every date from `start` to `end` inclusive, except February 29"""
    dates = pd.date_range(start, end, freq="D", name="date")
    return dates[~((dates.month == 2) & (dates.day == 29))]


def day_of_year(dates: pd.DatetimeIndex) -> np.ndarray:
    """0-based day-of-year on the 365-day calendar left after removing February 29"""
    doy = dates.dayofyear.to_numpy() - 1
    return doy - (dates.is_leap_year & (dates.month > 2)).astype(int)
