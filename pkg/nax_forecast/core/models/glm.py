from dataclasses import dataclass
from typing import Any, Dict, Set, Tuple

import numpy as np

from . import NaxModel, JsonDict
from ._types_and_defaults import GLM_COLUMNS, WEATHER_COLUMNS

ARX_COLUMNS = GLM_COLUMNS + ("y_lag1",) + WEATHER_COLUMNS


@dataclass(frozen=True, eq=False)
class GlmCoefficients(NaxModel["GlmCoefficients"]):
    """
    Linear regression coefficients with their standard errors, in design column order.
    For the trend and seasonality layer the columns are `GLM_COLUMNS`: β0 (intercept), β1 (trend), β2..β5 (annual and
    semiannual harmonics), β6 Saturday, β7 Sunday, β8 holiday.
    """

    values: np.ndarray
    std_errors: np.ndarray
    names: Tuple[str, ...] = GLM_COLUMNS

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float).reshape(-1))
        object.__setattr__(self, "std_errors", np.asarray(self.std_errors, dtype=float).reshape(-1))
        if not (len(self.names) == len(self.values) == len(self.std_errors)):
            raise ValueError(
                f"Expected {len(self.names)} coefficients and standard errors, got {len(self.values)} and "
                f"{len(self.std_errors)}")
        if (self.std_errors < 0).any():
            raise ValueError("Standard errors can't be negative")

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    @classmethod
    def _prepare_json_for_init(cls, json_dict: JsonDict) -> JsonDict:
        coefficients = json_dict["coefficients"]
        return {
            "names": tuple(c["name"] for c in coefficients),
            "values": [c["estimate"] for c in coefficients],
            "std_errors": [c["std_error"] for c in coefficients],
        }

    @classmethod
    def _get_allowed_json_keys(cls) -> Set[str]:
        return {"coefficients"}

    def to_json(self) -> Dict[str, Any]:
        return {
            "coefficients": [
                {"name": n, "estimate": float(v), "std_error": float(se)}
                for n, v, se in zip(self.names, self.values, self.std_errors)
            ]
        }


@dataclass(frozen=True, eq=False)
class GlmFit:
    """
    An OLS fit of the trend and seasonality layer: Y = fitted + residuals, where fitted = T_t + S_t.
    `residual_variance` is SSR / (n - p).
    """

    coefficients: GlmCoefficients
    fitted: np.ndarray
    residuals: np.ndarray
    residual_variance: float

    @property
    def dof(self) -> int:
        return len(self.residuals) - len(self.coefficients.values)


@dataclass(frozen=True, eq=False)
class ArxFit:
    """
    The ARX benchmark: OLS of Y_t on the GLM design columns, Y_{t-1} and the two temperatures, with a constant
    Gaussian residual variance.
    """

    coefficients: GlmCoefficients
    fitted: np.ndarray
    residuals: np.ndarray
    residual_variance: float

    def __post_init__(self):
        if tuple(self.coefficients.names) != ARX_COLUMNS:
            raise ValueError(f"ARX coefficients must be named {ARX_COLUMNS}, got {self.coefficients.names}")
        if not self.residual_variance > 0:
            raise ValueError(f"residual_variance must be positive, got {self.residual_variance!r}")

    @property
    def phi(self) -> float:
        return self.coefficients["y_lag1"]

    @property
    def glm_part(self) -> np.ndarray:
        return self.coefficients.values[:len(GLM_COLUMNS)]

    @property
    def weather_part(self) -> np.ndarray:
        return self.coefficients.values[len(GLM_COLUMNS) + 1:]
