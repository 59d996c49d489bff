import itertools
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional, Set, Tuple, Union

import pandas as pd

from . import NaxModel
from ._types_and_defaults import Activation
from .nax import NaxConfig, normalise_batch_size

GRID_AXES = ("neurons", "activation", "learning_rate", "batch_size", "l2", "window_years")


def _as_tuple(value: Any) -> tuple:
    return tuple(value) if isinstance(value, (list, tuple)) else (value,)


@dataclass(frozen=True)
class GridSpec(NaxModel["GridSpec"]):
    """
    Candidate values for each searched hyper-parameter. The remaining `NaxConfig` fields (`epochs` as the budget,
    `patience`) are shared by every combination. `replicates` training seeds are averaged per combination.
    """

    neurons: Tuple[int, ...] = (3, 4, 5, 6, 8, 10)
    activation: Tuple[Activation, ...] = (Activation.SOFTMAX, Activation.SIGMOID)
    learning_rate: Tuple[float, ...] = (0.1, 0.01, 0.001, 0.0007, 0.0005, 0.0001)
    batch_size: Tuple[Union[int, str], ...] = (50, 100, 350, "full")
    l2: Tuple[float, ...] = (0.01, 0.001, 0.0001, 0.0)
    window_years: Tuple[int, ...] = (1, 2, 3, 4)
    epochs: int = 500
    patience: int = 50
    replicates: int = 1

    def __post_init__(self):
        for axis in GRID_AXES:
            object.__setattr__(self, axis, _as_tuple(getattr(self, axis)))
            if not getattr(self, axis):
                raise ValueError(f"Grid axis {axis!r} must have at least one value")
        object.__setattr__(self, "activation", tuple(Activation(a) for a in self.activation))
        object.__setattr__(self, "batch_size", tuple(normalise_batch_size(b) for b in self.batch_size))
        if self.replicates < 1:
            raise ValueError(f"replicates must be at least 1, got {self.replicates}")

    def __len__(self):
        size = 1
        for axis in GRID_AXES:
            size *= len(getattr(self, axis))
        return size

    @property
    def max_window_years(self) -> int:
        return max(self.window_years)

    def combinations(self) -> List[NaxConfig]:
        """Every combination, in a fixed order. Seeds are left at 0; the pipeline derives them per combination."""
        return [
            NaxConfig(
                neurons=n, activation=a, learning_rate=lr, batch_size=b, l2=l2, window_years=w,
                epochs=self.epochs, patience=self.patience)
            for n, a, lr, b, l2, w in itertools.product(*(getattr(self, axis) for axis in GRID_AXES))
        ]

    @classmethod
    def _get_allowed_json_keys(cls) -> Set[str]:
        return {f.name for f in fields(cls)}

    def to_json(self) -> Dict[str, Any]:
        json_dict = {f.name: getattr(self, f.name) for f in fields(self)}
        for axis in GRID_AXES:
            json_dict[axis] = list(json_dict[axis])
        json_dict["activation"] = [a.value for a in self.activation]
        return json_dict


@dataclass(frozen=True)
class GridEntry:
    """
    Validation outcome of one grid combination; `rmse` is the mean over `replicate_rmse`. `best_epochs` holds, per
    replicate, the epoch whose weights had the lowest validation NLL.
    """

    index: int
    config: NaxConfig
    rmse: float
    replicate_rmse: Tuple[float, ...]
    best_epochs: Tuple[int, ...] = ()

    @property
    def trained_epochs(self) -> int:
        """Epochs to retrain the combination for once the validation year is no longer held out"""
        if not self.best_epochs:
            return self.config.epochs
        return int(round(sum(self.best_epochs) / len(self.best_epochs)))

    @property
    def selected_config(self) -> NaxConfig:
        return self.config.with_epochs(self.trained_epochs)

    def sort_key(self) -> tuple:
        # Lowest RMSE, then fewer neurons, larger L2, shorter window, then enumeration order
        return self.rmse, self.config.neurons, -self.config.l2, self.config.window_years, self.index


@dataclass(frozen=True)
class SkippedCombination:
    index: int
    config: NaxConfig
    reason: str


@dataclass(frozen=True)
class GridResult:
    """The leaderboard (sorted best first) and the selected combination"""

    leaderboard: List[GridEntry]
    skipped: List[SkippedCombination] = field(default_factory=list)

    def __post_init__(self):
        object.__setattr__(self, "leaderboard", sorted(self.leaderboard, key=GridEntry.sort_key))

    @property
    def selected(self) -> Optional[GridEntry]:
        return self.leaderboard[0] if self.leaderboard else None

    def to_frame(self) -> pd.DataFrame:
        """One row per evaluated combination, best first"""
        rows = []
        for rank, entry in enumerate(self.leaderboard, start=1):
            row = {"rank": rank, "combination": entry.index}
            row.update({axis: getattr(entry.config, axis) for axis in GRID_AXES})
            row["activation"] = entry.config.activation.value
            row["epochs"] = entry.trained_epochs
            row["rmse_gwh"] = entry.rmse
            rows.append(row)
        return pd.DataFrame(rows, columns=["rank", "combination", *GRID_AXES, "epochs", "rmse_gwh"])

    def by_window(self) -> pd.DataFrame:
        """Best validation RMSE for each training window length"""
        best: Dict[int, float] = {}
        for entry in self.leaderboard:
            best.setdefault(entry.config.window_years, entry.rmse)
        return pd.DataFrame(
            {"window_years": sorted(best), "best_rmse_gwh": [best[w] for w in sorted(best)]})
