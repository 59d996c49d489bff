from dataclasses import dataclass
from typing import Any, Dict, Sequence, Set, Tuple

import numpy as np

from . import NaxModel, JsonDict
from ..exceptions import InvalidNaxJsonError


@dataclass(frozen=True)
class CalendarFeatures:
    """The calendar inputs for one day: trend index, two annual harmonics and the day-type dummies"""

    t: int
    sin_1: float
    cos_1: float
    sin_2: float
    cos_2: float
    d_sat: int
    d_sun: int
    d_hol: int

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"t must be nonnegative, got {self.t}")
        if self.d_sat and self.d_sun:
            raise ValueError("A day can't be both a Saturday and a Sunday")

    def as_tuple(self) -> Tuple[float, ...]:
        return (self.t, self.sin_1, self.cos_1, self.sin_2, self.cos_2, self.d_sat, self.d_sun, self.d_hol)


@dataclass(frozen=True, eq=False)
class MinMaxScaler(NaxModel["MinMaxScaler"]):
    """
    Per-column min and max learned from training rows. Serialised as {column_name: {"min": .., "max": ..}}.
    """

    columns: Tuple[str, ...]
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "mins", np.asarray(self.mins, dtype=float).reshape(-1))
        object.__setattr__(self, "maxs", np.asarray(self.maxs, dtype=float).reshape(-1))
        if not (len(self.columns) == len(self.mins) == len(self.maxs)):
            raise ValueError(
                f"columns, mins and maxs must have the same length, got {len(self.columns)}, {len(self.mins)}, "
                f"{len(self.maxs)}")
        if bad := [c for c, lo, hi in zip(self.columns, self.mins, self.maxs) if not hi > lo]:
            raise ValueError(f"max must be greater than min for every column; not the case for {bad}")

    @property
    def ranges(self) -> np.ndarray:
        return self.maxs - self.mins

    def __eq__(self, other):
        if not isinstance(other, MinMaxScaler):
            return NotImplemented
        return (self.columns == other.columns and np.array_equal(self.mins, other.mins)
                and np.array_equal(self.maxs, other.maxs))

    @classmethod
    def _get_allowed_json_keys(cls) -> Set[str]:
        # Keys are column names, so there's no fixed set; `from_json` is overridden instead
        raise NotImplementedError

    @classmethod
    def from_json(cls, json_dict: JsonDict) -> "MinMaxScaler":
        try:
            columns: Sequence[str] = list(json_dict.keys())
            return cls(
                columns=tuple(columns),
                mins=[json_dict[c]["min"] for c in columns],
                maxs=[json_dict[c]["max"] for c in columns],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidNaxJsonError(f"Error during conversion from JSON: {str(exc)}") from exc

    def to_json(self) -> Dict[str, Any]:
        return {c: {"min": float(lo), "max": float(hi)} for c, lo, hi in zip(self.columns, self.mins, self.maxs)}
