import math
from dataclasses import dataclass
from datetime import date
from typing import Any, Dict, Set

import numpy as np
import pandas as pd

from . import NaxModel, JsonDict
from .segmentation import _as_date

# Column names used by the daily data frames passed between modules. The frame is indexed by date.
CONSUMPTION = "consumption"
DRY_BULB = "dry_bulb"
WET_BULB = "wet_bulb"
IS_SATURDAY = "is_saturday"
IS_SUNDAY = "is_sunday"
IS_HOLIDAY = "is_holiday"
DAILY_COLUMNS = (CONSUMPTION, DRY_BULB, WET_BULB, IS_SATURDAY, IS_SUNDAY, IS_HOLIDAY)
EXOGENOUS_COLUMNS = (DRY_BULB, WET_BULB, IS_SATURDAY, IS_SUNDAY, IS_HOLIDAY)


@dataclass(frozen=True)
class HourlyRecord:
    """One hour of total demand (MWh) with the dry and wet bulb temperatures (°F) for that hour"""

    date: date
    hour: int
    demand: float
    dry_bulb: float
    wet_bulb: float

    def __post_init__(self):
        object.__setattr__(self, "date", _as_date(self.date))
        if self.hour not in range(24):
            raise ValueError(f"hour must be in 0-23, got {self.hour!r}")
        if not self.demand >= 0:
            raise ValueError(f"demand must be nonnegative, got {self.demand!r}")


@dataclass(frozen=True)
class DailyRecord(NaxModel["DailyRecord"]):
    """
    One calendar day of total consumption (GWh) and the daily mean dry and wet bulb temperatures (°F).
    The weekend flags are derived from the date; the holiday flag comes from the holiday calendar in use.
    """

    date: date
    consumption: float
    dry_bulb: float
    wet_bulb: float
    is_holiday: bool = False

    def __post_init__(self):
        object.__setattr__(self, "date", _as_date(self.date))
        if not self.consumption > 0:
            raise ValueError(f"consumption must be positive, got {self.consumption!r} on {self.date}")
        if self.date.month == 2 and self.date.day == 29:
            raise ValueError("DailyRecords can't be dated February 29")
        if not (math.isfinite(self.dry_bulb) and math.isfinite(self.wet_bulb)):
            raise ValueError(f"temperatures must be finite on {self.date}")

    @property
    def is_saturday(self) -> bool:
        return self.date.weekday() == 5

    @property
    def is_sunday(self) -> bool:
        return self.date.weekday() == 6

    @classmethod
    def _prepare_json_for_init(cls, json_dict: JsonDict) -> JsonDict:
        json_dict["date"] = _as_date(json_dict["date"])
        return json_dict

    @classmethod
    def _get_allowed_json_keys(cls) -> Set[str]:
        return {"date", "consumption", "dry_bulb", "wet_bulb", "is_holiday"}

    def to_json(self) -> Dict[str, Any]:
        return {
            "date": self.date.isoformat(),
            "consumption": self.consumption,
            "dry_bulb": self.dry_bulb,
            "wet_bulb": self.wet_bulb,
            "is_holiday": self.is_holiday,
        }


@dataclass(frozen=True)
class LogSeries:
    """
    Natural log of daily consumption, Y_t, with the integer day index t.
    t starts at 0 on the first date of the data set and increases by one per retained day, so it keeps counting
    across a removed Feb 29.
    """

    dates: pd.DatetimeIndex
    values: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        if not (len(self.dates) == len(self.values) == len(self.t)):
            raise ValueError(
                f"dates, values and t must have the same length, got {len(self.dates)}, {len(self.values)}, "
                f"{len(self.t)}")

    def __len__(self):
        return len(self.values)

    def window(self, start: date, end: date) -> "LogSeries":
        """The part of the series dated within [start, end]"""
        mask = (self.dates >= pd.Timestamp(start)) & (self.dates <= pd.Timestamp(end))
        return LogSeries(self.dates[mask], self.values[mask], self.t[mask])

    def replace_values(self, values: np.ndarray) -> "LogSeries":
        return LogSeries(self.dates, np.asarray(values, dtype=float), self.t)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.t, "log_consumption": self.values}, index=self.dates)
