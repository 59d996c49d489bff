"""
Reading and preparing the daily consumption series: hourly to daily aggregation, leap-day removal, outlier treatment
and the log transform.

Daily data is passed around as a pandas DataFrame indexed by date (`date`), with the columns named in
`nax_forecast.core.models.records.DAILY_COLUMNS`. Consumption is in GWh, temperatures in °F.
"""
import logging
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import AbstractSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from nax_forecast.core.exceptions import IngestError
from nax_forecast.core.models import MWH_PER_GWH
from nax_forecast.core.models.records import (
    CONSUMPTION, DRY_BULB, IS_HOLIDAY, IS_SATURDAY, IS_SUNDAY, WET_BULB, DailyRecord, HourlyRecord,
    LogSeries,
)

APP_LOGGER = logging.getLogger(__name__)

HOURLY_HEADER = ("date", "hour", "demand_mwh", "dry_bulb_f", "wet_bulb_f")
DAILY_HEADER = ("date", "consumption_gwh", "dry_bulb_f", "wet_bulb_f")
OUTLIER_THRESHOLD = 3.0  # in residual standard deviations

Holidays = AbstractSet[date]


@dataclass(frozen=True)
class OutlierReport:
    """The days whose GLM residual fell outside ±threshold and was winsorised to it"""

    bound: float
    dates: List[date] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)

    def __len__(self):
        return len(self.dates)


def daily_frame(
        dates: Iterable, consumption: Iterable[float], dry_bulb: Iterable[float], wet_bulb: Iterable[float],
        holidays: Holidays = frozenset(), is_holiday: Optional[Iterable[bool]] = None) -> pd.DataFrame:
    """Assemble a daily frame, deriving the weekend flags from the dates and the holiday flag from `holidays`"""
    index = pd.DatetimeIndex(pd.to_datetime(list(dates)), name="date")
    weekday = index.weekday
    if is_holiday is None:
        is_holiday = [d.date() in holidays for d in index]
    return pd.DataFrame({
        CONSUMPTION: np.asarray(list(consumption), dtype=float),
        DRY_BULB: np.asarray(list(dry_bulb), dtype=float),
        WET_BULB: np.asarray(list(wet_bulb), dtype=float),
        IS_SATURDAY: weekday == 5,
        IS_SUNDAY: weekday == 6,
        IS_HOLIDAY: np.asarray(list(is_holiday), dtype=bool),
    }, index=index)


def records_to_frame(days: Sequence[DailyRecord]) -> pd.DataFrame:
    return daily_frame(
        [d.date for d in days], [d.consumption for d in days], [d.dry_bulb for d in days],
        [d.wet_bulb for d in days], is_holiday=[d.is_holiday for d in days])


def frame_to_records(days: pd.DataFrame) -> List[DailyRecord]:
    return [
        DailyRecord(ts.date(), row[CONSUMPTION], row[DRY_BULB], row[WET_BULB], bool(row[IS_HOLIDAY]))
        for ts, row in days.iterrows()
    ]


def _hourly_frame(hourly: Union[pd.DataFrame, Sequence[HourlyRecord]]) -> pd.DataFrame:
    if isinstance(hourly, pd.DataFrame):
        return hourly
    return pd.DataFrame({
        "date": pd.to_datetime([r.date for r in hourly]),
        "hour": [r.hour for r in hourly],
        "demand": [r.demand for r in hourly],
        DRY_BULB: [r.dry_bulb for r in hourly],
        WET_BULB: [r.wet_bulb for r in hourly],
    })


def aggregate_daily(
        hourly: Union[pd.DataFrame, Sequence[HourlyRecord]], holidays: Holidays = frozenset()) -> pd.DataFrame:
    """
    Sum the hourly demand (MWh) into daily consumption (GWh) and average the hourly temperatures.

    `hourly` is a sequence of HourlyRecords or a frame with columns `date, hour, demand, dry_bulb, wet_bulb`, in
    strictly increasing (date, hour) order. Days with fewer than 24 hours are aggregated from the hours available; they
    are logged as a warning and listed in the result's `attrs["incomplete_days"]`.
    """
    frame = _hourly_frame(hourly)
    if frame.empty:
        raise IngestError("No hourly records to aggregate")

    dates = pd.to_datetime(frame["date"]).dt.normalize()
    stamps = dates + pd.to_timedelta(frame["hour"].astype(int), unit="h")
    if (steps := np.diff(stamps.to_numpy())).size and not (steps > np.timedelta64(0)).all():
        position = int(np.argmin(steps > np.timedelta64(0))) + 1
        raise IngestError(
            f"Hourly timestamps must be strictly increasing; record {position} ({stamps.iloc[position]}) is not "
            f"after {stamps.iloc[position - 1]}")

    grouped = frame.assign(date=dates).groupby("date", sort=True)
    totals = grouped.agg(
        demand=("demand", "sum"), dry_bulb=(DRY_BULB, "mean"), wet_bulb=(WET_BULB, "mean"), hours=("hour", "size"))

    incomplete = [ts.date() for ts in totals.index[totals["hours"] < 24]]
    if incomplete:
        APP_LOGGER.warning(
            f"{len(incomplete)} day(s) have fewer than 24 hourly records and were aggregated from the hours "
            f"available: {', '.join(d.isoformat() for d in incomplete[:10])}{' ...' if len(incomplete) > 10 else ''}")

    daily = daily_frame(
        totals.index, totals["demand"] / MWH_PER_GWH, totals[DRY_BULB], totals[WET_BULB], holidays)
    daily.attrs["incomplete_days"] = incomplete
    return daily


def remove_leap_days(days: Union[pd.DataFrame, Sequence[DailyRecord]]):
    """Drop every February 29; everything else is kept as is, in order"""
    if isinstance(days, pd.DataFrame):
        index = days.index
        return days.loc[~((index.month == 2) & (index.day == 29))]
    return [d for d in days if not (d.date.month == 2 and d.date.day == 29)]


def log_transform(days: Union[pd.DataFrame, Sequence[DailyRecord]]) -> LogSeries:
    """
    Y_t = ln(consumption_t), with t = 0 on the first date and incremented by one per day. The days must be free of
    February 29 and otherwise contiguous.
    """
    if not isinstance(days, pd.DataFrame):
        days = records_to_frame(days)
    if days.empty:
        raise IngestError("No daily records to transform")

    consumption = days[CONSUMPTION].to_numpy(dtype=float)
    if (bad := np.flatnonzero(~(consumption > 0))).size:
        raise IngestError(
            f"Consumption must be positive; got {consumption[bad[0]]!r} on {days.index[bad[0]].date()}")

    check_contiguous(days.index)
    return LogSeries(days.index, np.log(consumption), np.arange(len(days)))


def check_contiguous(index: pd.DatetimeIndex):
    """Raise if `index` has a Feb 29, or a gap other than a skipped Feb 29"""
    if ((index.month == 2) & (index.day == 29)).any():
        raise IngestError("Daily records still contain February 29; remove leap days first")
    gaps = np.diff(index.to_numpy()).astype("timedelta64[D]").astype(int)
    for position in np.flatnonzero(gaps != 1):
        before, after = index[position], index[position + 1]
        if gaps[position] == 2 and after.month == 3 and after.day == 1 and before.is_leap_year:
            continue
        raise IngestError(f"Daily records must be contiguous; {before.date()} is followed by {after.date()}")


def treat_outliers(log_series: LogSeries, glm_residuals: np.ndarray) -> Tuple[LogSeries, OutlierReport]:
    """
    Winsorise the deseasonalised series: residuals beyond ±3 sample standard deviations are moved to that bound,
    i.e. Y'_t = Y_t - R_t + clip(R_t). One pass only.
    """
    residuals = np.asarray(glm_residuals, dtype=float)
    if residuals.size == 0:
        raise IngestError("Can't treat outliers on an empty residual series")
    if residuals.shape != log_series.values.shape:
        raise IngestError(
            f"Residuals ({residuals.shape}) are not aligned with the log series ({log_series.values.shape})")

    bound = OUTLIER_THRESHOLD * float(np.std(residuals, ddof=1)) if residuals.size > 1 else np.inf
    affected = np.flatnonzero(np.abs(residuals) > bound)
    report = OutlierReport(
        bound=bound,
        dates=[log_series.dates[i].date() for i in affected],
        residuals=[float(residuals[i]) for i in affected])
    if not affected.size:
        return log_series, report

    APP_LOGGER.warning(
        f"Winsorised {len(affected)} outlier(s) at ±{bound:.4g}: {', '.join(d.isoformat() for d in report.dates)}")
    clipped = np.clip(residuals, -bound, bound)
    return log_series.replace_values(log_series.values - residuals + clipped), report


def _parse_rows(raw: pd.DataFrame, path: Path) -> pd.DataFrame:
    """Coerce the string columns of a CSV, reporting the (1-based, header = line 1) line of the first bad value"""
    parsed = pd.DataFrame(index=raw.index)
    parsed["date"] = pd.to_datetime(raw["date"], format="ISO8601", errors="coerce")
    for column in raw.columns.drop("date"):
        parsed[column] = pd.to_numeric(raw[column], errors="coerce")
    bad_rows = parsed.isna().any(axis=1)
    if bad_rows.any():
        row = int(np.argmax(bad_rows.to_numpy()))
        bad_columns = list(parsed.columns[parsed.iloc[row].isna()])
        raise IngestError(f"Malformed value(s) in column(s) {bad_columns} of {path}", line_number=row + 2)
    return parsed


def read_csv(path: Union[Path, str], holidays: Holidays = frozenset()) -> pd.DataFrame:
    """
    Read an hourly (`date,hour,demand_mwh,dry_bulb_f,wet_bulb_f`) or daily (`date,consumption_gwh,dry_bulb_f,
    wet_bulb_f`, optionally `is_holiday`) CSV file and return the daily frame. The format is detected from the header.
    """
    path = Path(path)
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8", skipinitialspace=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as err:
        raise IngestError(f"Unable to read {path}: {err}")
    raw.columns = [c.strip() for c in raw.columns]

    if tuple(raw.columns[:len(HOURLY_HEADER)]) == HOURLY_HEADER:
        parsed = _parse_rows(raw[list(HOURLY_HEADER)], path)
        if (bad := np.flatnonzero(~parsed["hour"].isin(range(24)) | (parsed["demand_mwh"] < 0))).size:
            raise IngestError(f"hour must be in 0-23 and demand_mwh nonnegative in {path}", line_number=bad[0] + 2)
        hourly = parsed.rename(columns={"demand_mwh": "demand", "dry_bulb_f": DRY_BULB, "wet_bulb_f": WET_BULB})
        return aggregate_daily(hourly, holidays)

    if tuple(raw.columns[:len(DAILY_HEADER)]) == DAILY_HEADER:
        columns = list(DAILY_HEADER) + ([IS_HOLIDAY] if IS_HOLIDAY in raw.columns else [])
        parsed = _parse_rows(raw[columns].replace({"True": "1", "False": "0"}), path)
        if not parsed["date"].is_monotonic_increasing or parsed["date"].duplicated().any():
            raise IngestError(f"Dates in {path} must be strictly increasing")
        return daily_frame(
            parsed["date"], parsed["consumption_gwh"], parsed["dry_bulb_f"], parsed["wet_bulb_f"], holidays,
            is_holiday=parsed[IS_HOLIDAY].astype(bool) if IS_HOLIDAY in parsed.columns else None)

    raise IngestError(f"Unrecognised header in {path}: expected {','.join(HOURLY_HEADER)} or {','.join(DAILY_HEADER)}")


def to_csv_frame(days: pd.DataFrame) -> pd.DataFrame:
    """The daily frame in the daily CSV layout"""
    out = pd.DataFrame({
        "date": days.index.strftime("%Y-%m-%d"),
        "consumption_gwh": days[CONSUMPTION].to_numpy(),
        "dry_bulb_f": days[DRY_BULB].to_numpy(),
        "wet_bulb_f": days[WET_BULB].to_numpy(),
    })
    for column in (IS_SATURDAY, IS_SUNDAY, IS_HOLIDAY):
        out[column] = days[column].to_numpy().astype(int)
    return out


def summary_stats(days: pd.DataFrame) -> pd.DataFrame:
    """Min, max, mean, median and standard deviation of consumption and the temperatures"""
    stats = days[[CONSUMPTION, DRY_BULB, WET_BULB]].agg(["min", "max", "mean", "median", "std"]).T
    stats.index.name = "variable"
    return stats.reset_index()

