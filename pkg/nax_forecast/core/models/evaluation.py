from dataclasses import dataclass, field, fields
from typing import Any, Dict, Optional, Set

import numpy as np

from . import NaxModel, JsonDict
from ._types_and_defaults import PERCENTILES


@dataclass(frozen=True, eq=False)
class ViolationSeries:
    """Per-day 1/0 indicator of the realised value falling outside the central `alpha` confidence interval"""

    alpha: float
    violations: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "violations", np.asarray(self.violations, dtype=int).reshape(-1))
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha!r}")
        if not np.isin(self.violations, (0, 1)).all():
            raise ValueError("violations must be 0/1 indicators")

    def __len__(self):
        return len(self.violations)

    @property
    def count(self) -> int:
        return int(self.violations.sum())


@dataclass(frozen=True)
class CoverageTest(NaxModel["CoverageTest"]):
    """A likelihood ratio coverage test result; the null is rejected when `statistic` > `threshold`"""

    statistic: float
    threshold: float

    @property
    def reject(self) -> bool:
        return self.statistic > self.threshold

    @classmethod
    def _prepare_json_for_init(cls, json_dict: JsonDict) -> JsonDict:
        json_dict.pop("reject", None)
        return json_dict

    @classmethod
    def _get_allowed_json_keys(cls) -> Set[str]:
        return {"statistic", "threshold", "reject"}

    def to_json(self) -> Dict[str, Any]:
        return {"statistic": self.statistic, "threshold": self.threshold, "reject": self.reject}


@dataclass(frozen=True, eq=False)
class EvalReport(NaxModel["EvalReport"]):
    """
    Point accuracy, sharpness and reliability of a density forecast over one horizon.
    `pinball` holds the mean loss (GWh) at percentiles 1..99 and `coverage` maps each central CI level to the
    fraction of days the realised value fell inside it.
    """

    rmse: float
    mape: float
    pinball: np.ndarray
    coverage: Dict[float, float]
    uc: CoverageTest
    cc: CoverageTest
    violations_95: int
    days: int
    apl: Optional[float] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "pinball", np.asarray(self.pinball, dtype=float).reshape(-1))
        if len(self.pinball) != len(PERCENTILES):
            raise ValueError(f"Expected {len(PERCENTILES)} pinball values, got {len(self.pinball)}")
        apl = float(np.mean(self.pinball))
        if self.apl is not None and not np.isclose(self.apl, apl, rtol=0, atol=1e-12):
            raise ValueError(f"apl {self.apl} is not the mean of the pinball values ({apl})")
        object.__setattr__(self, "apl", apl)
        object.__setattr__(self, "coverage", {float(a): float(c) for a, c in sorted(self.coverage.items())})

    @property
    def coverage_95(self) -> float:
        return 1.0 - self.violations_95 / self.days

    @classmethod
    def _prepare_json_for_init(cls, json_dict: JsonDict) -> JsonDict:
        json_dict["uc"] = CoverageTest.from_json(json_dict["uc"])
        json_dict["cc"] = CoverageTest.from_json(json_dict["cc"])
        json_dict["pinball"] = [json_dict["pinball"][str(p)] for p in PERCENTILES]
        json_dict["coverage"] = {float(a): c for a, c in json_dict["coverage"].items()}
        return json_dict

    @classmethod
    def _get_allowed_json_keys(cls) -> Set[str]:
        return {f.name for f in fields(cls)}

    def to_json(self) -> Dict[str, Any]:
        return {
            "rmse": self.rmse,
            "mape": self.mape,
            "apl": self.apl,
            "pinball": {str(p): float(v) for p, v in zip(PERCENTILES, self.pinball)},
            "coverage": {f"{a:.2f}": c for a, c in self.coverage.items()},
            "uc": self.uc.to_json(),
            "cc": self.cc.to_json(),
            "violations_95": self.violations_95,
            "days": self.days,
        }
