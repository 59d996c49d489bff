from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Any, Dict, List, Set

import dateutil.parser
from dateutil.relativedelta import relativedelta

from . import NaxModel, JsonDict


def _as_date(value: Any) -> date:
    if isinstance(value, date):
        # datetime is a subclass of date, so normalise those too
        return date(value.year, value.month, value.day)
    return dateutil.parser.isoparse(str(value)).date()


@dataclass(frozen=True)
class DateRange(NaxModel["DateRange"]):
    """
    A contiguous, inclusive interval of calendar dates, e.g. a calibration window or a test year.
    """

    start: date
    end: date

    def __post_init__(self):
        object.__setattr__(self, "start", _as_date(self.start))
        object.__setattr__(self, "end", _as_date(self.end))
        if self.start > self.end:
            raise ValueError(f"start date cannot be after end date: {self.start} > {self.end}")

    @staticmethod
    def parse_str(str_range: str) -> "DateRange":
        """
        Parse a date range from one of:
        * <start>/<end>, e.g. "2007-01-01/2010-12-31"
        * <year>/<year>, e.g. "2013/2016", which covers whole calendar years
        * <year>, e.g. "2011"

        Individual dates are parsed by `dateutil.parser.isoparse`.
        """
        try:
            parts = [p.strip() for p in str(str_range).strip().split("/")]
        except AttributeError as e:
            raise ValueError(f"{str_range!r} doesn't appear to be a string: {e}")

        if len(parts) == 1:
            parts = parts * 2
        if len(parts) != 2:
            raise ValueError(f"Unable to parse {str_range!r}; expected <start>/<end>")

        start_str, end_str = parts
        if start_str.isdigit() and end_str.isdigit():
            return DateRange.for_years(int(start_str), int(end_str))
        return DateRange(dateutil.parser.isoparse(start_str).date(), dateutil.parser.isoparse(end_str).date())

    @staticmethod
    def for_years(first_year: int, last_year: int = None) -> "DateRange":
        last_year = first_year if last_year is None else last_year
        return DateRange(date(first_year, 1, 1), date(last_year, 12, 31))

    @staticmethod
    def trailing(before: date, years: int) -> "DateRange":
        """The `years` long window of dates that ends the day before `before`"""
        if years < 1:
            raise ValueError(f"years must be at least 1, got {years}")
        before = _as_date(before)
        return DateRange(before - relativedelta(years=years), before - timedelta(days=1))

    @property
    def years(self) -> List[int]:
        return list(range(self.start.year, self.end.year + 1))

    def split_years(self) -> List["DateRange"]:
        """Split into one range per calendar year, clipped to this range"""
        return [
            DateRange(max(self.start, date(y, 1, 1)), min(self.end, date(y, 12, 31)))
            for y in self.years
        ]

    def contains(self, day: date) -> bool:
        return self.start <= _as_date(day) <= self.end

    def overlaps(self, other: "DateRange") -> bool:
        return self.start <= other.end and other.start <= self.end

    def __str__(self):
        return f"{self.start.isoformat()}/{self.end.isoformat()}"

    @classmethod
    def _get_allowed_json_keys(cls) -> Set[str]:
        return {"start", "end"}

    def to_json(self) -> Dict[str, Any]:
        return {"start": self.start.isoformat(), "end": self.end.isoformat()}


@dataclass(frozen=True)
class Segmentation(NaxModel["Segmentation"]):
    """
    The split of the timeline into the calibration, validation, test and robustness windows.
    The windows must be disjoint and ordered calibration < validation < test < robustness.
    """

    calibration: DateRange
    validation: DateRange
    test: DateRange
    robustness: List[DateRange] = field(default_factory=list)

    def __post_init__(self):
        ordered = [self.calibration, self.validation, self.test] + list(self.robustness)
        if not all(isinstance((invalid := r), DateRange) for r in ordered):
            raise TypeError(f"Expected DateRange values, received {invalid!r} of type {type(invalid)}")
        for earlier, later in zip(ordered, ordered[1:]):
            if earlier.end >= later.start:
                raise ValueError(f"Segmentation windows must be disjoint and ordered; {earlier} is not before {later}")

    @classmethod
    def _prepare_json_for_init(cls, json_dict: JsonDict) -> JsonDict:
        for key in ("calibration", "validation", "test"):
            json_dict[key] = DateRange.from_json(json_dict[key])
        json_dict["robustness"] = [DateRange.from_json(r) for r in json_dict.get("robustness", [])]
        return json_dict

    @classmethod
    def _get_allowed_json_keys(cls) -> Set[str]:
        return {"calibration", "validation", "test", "robustness"}

    def to_json(self) -> Dict[str, Any]:
        return {
            "calibration": self.calibration.to_json(),
            "validation": self.validation.to_json(),
            "test": self.test.to_json(),
            "robustness": [r.to_json() for r in self.robustness],
        }
