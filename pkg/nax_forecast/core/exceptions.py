from typing import Optional


class NaxException(Exception):
    """Base class for all Exceptions in the nax_forecast library"""


class NaxCoreException(NaxException):
    """Base exception for exceptions relating to the modelling and data code in `nax_forecast`"""


class InvalidNaxJsonError(NaxCoreException):
    """
    Used when deserialising JSON into NaxModels, and whilst the JSON is valid, it doesn't have the expected structure,
    or expected elements are missing.
    """


class IngestError(NaxCoreException):
    """Raised for unreadable or inconsistent input data: malformed rows, empty inputs, out of order timestamps"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class FeatureError(NaxCoreException):
    """Raised when a feature matrix can't be scaled, e.g. constant columns or a mismatched number of columns"""


class RankDeficientError(NaxCoreException):
    """Raised when a regression design matrix doesn't have full column rank"""


class DegenerateFitError(NaxCoreException):
    """Raised when a fitted model can't produce a well defined density, e.g. zero residual variance"""


class NonFiniteError(NaxCoreException):
    """
    Raised when the recurrence or the training loop produces a non-finite value.
    `step` is the index of the time step (forward pass) or optimiser step (training) where it happened.
    """

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


class CacheMismatchError(NaxCoreException):
    """Raised when a backward pass is given a forward cache computed from different parameters or inputs"""


class ForecastError(NaxCoreException):
    """Raised when a forecast can't be produced from the supplied model and inputs"""


class EvaluationError(NaxCoreException):
    """Raised for inconsistent forecasts/realisations handed to the evaluation functions"""


class InsufficientHistoryError(NaxCoreException):
    """Raised when the data doesn't cover the window a pipeline step needs. The message names the gap."""
