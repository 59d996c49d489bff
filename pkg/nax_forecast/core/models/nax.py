import hashlib
from dataclasses import dataclass, field, fields, replace
from datetime import date
from typing import Any, Dict, List, Optional, Set, Union

import numpy as np

from . import NaxModel, JsonDict
from ._types_and_defaults import Activation, FULL_SERIES
from .features import MinMaxScaler
from .glm import GlmCoefficients
from .segmentation import DateRange, _as_date

PARAM_NAMES = ("w", "w0", "f", "l", "l0")
FEEDBACK_SIZE = 2  # (mu, sigma)


def normalise_batch_size(value: Any) -> Union[int, str]:
    if value is None or value == FULL_SERIES:
        return FULL_SERIES
    if isinstance(value, bool) or int(value) != value:
        raise ValueError(f"batch_size must be an integer or {FULL_SERIES!r}, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class NaxConfig(NaxModel["NaxConfig"]):
    """
    Hyper-parameters of one network and its training run.

    `batch_size` is the length (days) of the contiguous subsequences the series is cut into for training, or "full"
    for a single subsequence covering the whole window.
    When a validation window is given, `patience` epochs without improvement of its NLL stop training early;
    otherwise `epochs` is the exact number of passes.
    """

    neurons: int = 3
    activation: Activation = Activation.SOFTMAX
    learning_rate: float = 0.003
    batch_size: Union[int, str] = 50
    l2: float = 1e-4
    window_years: int = 3
    epochs: int = 500
    patience: int = 50
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.activation, Activation):
            object.__setattr__(self, "activation", Activation(self.activation))
        object.__setattr__(self, "batch_size", normalise_batch_size(self.batch_size))

        if not isinstance(self.neurons, int) or self.neurons < 1:
            raise ValueError(f"neurons must be a positive integer, got {self.neurons!r}")
        if not self.learning_rate >= 0:
            raise ValueError(f"learning_rate must be nonnegative, got {self.learning_rate!r}")
        if not self.l2 >= 0:
            raise ValueError(f"l2 must be nonnegative, got {self.l2!r}")
        if self.batch_size != FULL_SERIES and self.batch_size < 2:
            raise ValueError(f"batch_size must be at least 2 or {FULL_SERIES!r}, got {self.batch_size!r}")
        if not isinstance(self.window_years, int) or self.window_years < 1:
            raise ValueError(f"window_years must be a positive integer, got {self.window_years!r}")
        if self.epochs < 0 or self.patience < 1:
            raise ValueError(f"epochs must be >= 0 and patience >= 1, got {self.epochs!r} and {self.patience!r}")

    def with_seed(self, seed: int) -> "NaxConfig":
        return replace(self, seed=int(seed))

    def with_epochs(self, epochs: int) -> "NaxConfig":
        return replace(self, epochs=int(epochs))

    @classmethod
    def _get_allowed_json_keys(cls) -> Set[str]:
        return {f.name for f in fields(cls)}

    def to_json(self) -> Dict[str, Any]:
        json_dict = {f.name: getattr(self, f.name) for f in fields(self)}
        json_dict["activation"] = self.activation.value
        return json_dict


@dataclass(frozen=True, eq=False)
class NaxParams(NaxModel["NaxParams"]):
    """
    The weights of the network:
      w  (N, I) input weights, w0 (N,) hidden bias, f (N, 2) feedback weights,
      l  (2, N) output weights, l0 (2,) output bias.
    The same container is used for gradients and for the Adam moment estimates.
    """

    w: np.ndarray
    w0: np.ndarray
    f: np.ndarray
    l: np.ndarray
    l0: np.ndarray

    def __post_init__(self):
        for name in PARAM_NAMES:
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

        n, i = self.w.shape if self.w.ndim == 2 else (None, None)
        expected = {"w": (n, i), "w0": (n,), "f": (n, FEEDBACK_SIZE), "l": (FEEDBACK_SIZE, n), "l0": (FEEDBACK_SIZE,)}
        if n is None:
            raise ValueError(f"w must be 2-dimensional, got shape {self.w.shape}")
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        if not all(np.isfinite(getattr(self, name)).all() for name in PARAM_NAMES):
            raise ValueError("NaxParams entries must all be finite")

    @property
    def neurons(self) -> int:
        return self.w.shape[0]

    @property
    def inputs(self) -> int:
        return self.w.shape[1]

    @staticmethod
    def zeros(neurons: int, inputs: int) -> "NaxParams":
        return NaxParams(
            w=np.zeros((neurons, inputs)), w0=np.zeros(neurons), f=np.zeros((neurons, FEEDBACK_SIZE)),
            l=np.zeros((FEEDBACK_SIZE, neurons)), l0=np.zeros(FEEDBACK_SIZE))

    @staticmethod
    def initialise(neurons: int, inputs: int, rng: np.random.Generator) -> "NaxParams":
        """Weights uniform in ±sqrt(6 / (fan_in + fan_out)), biases zero"""

        def glorot(fan_out: int, fan_in: int) -> np.ndarray:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-limit, limit, size=(fan_out, fan_in))

        return NaxParams(
            w=glorot(neurons, inputs), w0=np.zeros(neurons), f=glorot(neurons, FEEDBACK_SIZE),
            l=glorot(FEEDBACK_SIZE, neurons), l0=np.zeros(FEEDBACK_SIZE))

    def arrays(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def map(self, func, *others: "NaxParams") -> "NaxParams":
        """Apply `func` array-wise across this and `others`, returning a new NaxParams"""
        return NaxParams(**{
            name: func(getattr(self, name), *(getattr(o, name) for o in others)) for name in PARAM_NAMES})

    def weight_norm(self) -> float:
        """Sum of squared weights; biases are not regularised"""
        return float(np.sum(self.w ** 2) + np.sum(self.f ** 2) + np.sum(self.l ** 2))

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        for name in PARAM_NAMES:
            digest.update(np.ascontiguousarray(getattr(self, name)).tobytes())
        return digest.hexdigest()

    def __eq__(self, other):
        if not isinstance(other, NaxParams):
            return NotImplemented
        return all(np.array_equal(getattr(self, n), getattr(other, n)) for n in PARAM_NAMES)

    @classmethod
    def _prepare_json_for_init(cls, json_dict: JsonDict) -> JsonDict:
        return {
            name: np.asarray(value["values"], dtype=float).reshape(value["shape"])
            for name, value in json_dict.items()
        }

    @classmethod
    def _get_allowed_json_keys(cls) -> Set[str]:
        return set(PARAM_NAMES)

    def to_json(self) -> Dict[str, Any]:
        return {
            name: {"shape": list(arr.shape), "values": arr.ravel(order="C").tolist()}
            for name, arr in self.arrays().items()
        }


@dataclass(frozen=True, eq=False)
class TrainedNax(NaxModel["TrainedNax"]):
    """
    Everything needed to forecast from a trained network: the hyper-parameters and weights, the GLM layer fitted on
    the same training window, both scalers (inputs and residual target), and the state at the end of the window so
    the recurrence can carry on into the out-of-sample period.
    """

    config: NaxConfig
    params: NaxParams
    glm: GlmCoefficients
    residual_variance: float
    input_scaler: MinMaxScaler
    target_scaler: MinMaxScaler
    train_range: DateRange
    last_feedback: np.ndarray
    last_t: int
    last_date: date
    loss_history: List[float] = field(default_factory=list)
    best_epoch: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "last_feedback", np.asarray(self.last_feedback, dtype=float))
        object.__setattr__(self, "last_date", _as_date(self.last_date))
        if self.last_feedback.shape != (FEEDBACK_SIZE,):
            raise ValueError(f"last_feedback must have shape ({FEEDBACK_SIZE},), got {self.last_feedback.shape}")
        if self.params.inputs != len(self.input_scaler.columns):
            raise ValueError(
                f"Network expects {self.params.inputs} inputs but the input scaler has "
                f"{len(self.input_scaler.columns)} columns")

    @classmethod
    def _prepare_json_for_init(cls, json_dict: JsonDict) -> JsonDict:
        json_dict["config"] = NaxConfig.from_json(json_dict["config"])
        json_dict["params"] = NaxParams.from_json(json_dict["params"])
        json_dict["glm"] = GlmCoefficients.from_json(json_dict["glm"])
        json_dict["input_scaler"] = MinMaxScaler.from_json(json_dict["input_scaler"])
        json_dict["target_scaler"] = MinMaxScaler.from_json(json_dict["target_scaler"])
        json_dict["train_range"] = DateRange.from_json(json_dict["train_range"])
        return json_dict

    @classmethod
    def _get_allowed_json_keys(cls) -> Set[str]:
        return {f.name for f in fields(cls)}

    def to_json(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_json(),
            "params": self.params.to_json(),
            "glm": self.glm.to_json(),
            "residual_variance": self.residual_variance,
            "input_scaler": self.input_scaler.to_json(),
            "target_scaler": self.target_scaler.to_json(),
            "train_range": self.train_range.to_json(),
            "last_feedback": self.last_feedback.tolist(),
            "last_t": self.last_t,
            "last_date": self.last_date.isoformat(),
            "loss_history": list(self.loss_history),
            "best_epoch": self.best_epoch,
        }
