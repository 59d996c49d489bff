"""
This module exists to break some circular import issues, hence it's a private module, and its public interface
is via nax_forecast.core.models (e.g. `from nax_forecast.core.models import Activation`)

Modules within the `models` package should import it using `from ._types_and_defaults import ...`
"""
import math
from enum import Enum

__all__ = [
    "Activation", "ForecastMode", "OMEGA", "DAYS_IN_YEAR", "MWH_PER_GWH", "SIGMA_FLOOR", "PERCENTILES",
    "FULL_SERIES", "CALENDAR_COLUMNS", "WEATHER_COLUMNS", "GLM_COLUMNS",
]

DAYS_IN_YEAR = 365  # Feb 29 is removed upstream, so every year has 365 days
OMEGA = 2 * math.pi / DAYS_IN_YEAR
MWH_PER_GWH = 1000.0
SIGMA_FLOOR = 1e-6  # in normalised space
PERCENTILES = tuple(range(1, 100))

# Batch size meaning "train on the whole series as one subsequence"
FULL_SERIES = "full"

CALENDAR_COLUMNS = ("t", "sin_1", "cos_1", "sin_2", "cos_2", "d_sat", "d_sun", "d_hol")
WEATHER_COLUMNS = ("dry_bulb", "wet_bulb")
GLM_COLUMNS = ("intercept",) + CALENDAR_COLUMNS


class Activation(Enum):
    SIGMOID = "sigmoid"
    # Applied jointly across the hidden neurons
    SOFTMAX = "softmax"


class ForecastMode(Enum):
    EX_POST = "ex-post"
    EX_ANTE = "ex-ante"
