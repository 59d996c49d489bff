from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import ndtr, ndtri

from . import NaxModel

SQRT_2PI = np.sqrt(2 * np.pi)


def _parse_years(value: Union[str, int, Sequence[int]]) -> Tuple[int, ...]:
    """Accepts a list of years, a single year, or an inclusive "YYYY/YYYY" range"""
    if isinstance(value, int):
        return (value,)
    if isinstance(value, str):
        first, _, last = value.partition("/")
        return tuple(range(int(first), int(last or first) + 1))
    return tuple(int(y) for y in value)


@dataclass(frozen=True)
class BootstrapConfig(NaxModel["BootstrapConfig"]):
    """
    Settings of the seasonal block bootstrap of temperatures.
    Block lengths are uniform on [m - Δ, m + Δ] and day-of-year shifts uniform on [-Δ, Δ], where
    m = `mean_block_length` and Δ = `half_range`.
    """

    mean_block_length: int = 7
    half_range: int = 3
    paths: int = 2000
    source_years: Tuple[int, ...] = ()
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "source_years", _parse_years(self.source_years))
        if not self.mean_block_length > self.half_range >= 0:
            raise ValueError(
                f"Need mean_block_length > half_range >= 0, got {self.mean_block_length} and {self.half_range}")
        if self.paths < 1:
            raise ValueError(f"paths must be at least 1, got {self.paths}")

    @property
    def min_block_length(self) -> int:
        return self.mean_block_length - self.half_range

    @property
    def max_block_length(self) -> int:
        return self.mean_block_length + self.half_range

    @classmethod
    def _get_allowed_json_keys(cls) -> Set[str]:
        return {f.name for f in fields(cls)}

    def to_json(self) -> Dict[str, Any]:
        json_dict = {f.name: getattr(self, f.name) for f in fields(self)}
        json_dict["source_years"] = list(self.source_years)
        return json_dict


@dataclass(frozen=True)
class TemperatureBlock:
    """
    One resampled block: horizon days [start, start + length) take the temperatures of `source_year` at
    day-of-year (horizon day-of-year + shift) mod 365. `source_day` is that day-of-year for the first day of the block.
    """

    start: int
    length: int
    source_year: int
    source_day: int
    shift: int


@dataclass(frozen=True, eq=False)
class TemperaturePath:
    """A bootstrapped daily (dry bulb, wet bulb) sequence over the forecast horizon, with its provenance"""

    dry_bulb: np.ndarray
    wet_bulb: np.ndarray
    blocks: List[TemperatureBlock] = field(default_factory=list)

    def __post_init__(self):
        if self.dry_bulb.shape != self.wet_bulb.shape:
            raise ValueError(f"dry_bulb and wet_bulb shapes differ: {self.dry_bulb.shape} != {self.wet_bulb.shape}")

    def __len__(self):
        return len(self.dry_bulb)


@dataclass(frozen=True, eq=False)
class MixtureDay:
    """An equally weighted mixture of Gaussians in log space, one component per temperature path"""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        if not (self.sigma > 0).all():
            raise ValueError("Every mixture component needs sigma > 0")

    @property
    def weights(self) -> np.ndarray:
        return np.full(len(self.mu), 1.0 / len(self.mu))

    def cdf(self, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        return ndtr((x[..., None] - self.mu) / self.sigma).mean(axis=-1)

    def pdf(self, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        z = (x[..., None] - self.mu) / self.sigma
        return (np.exp(-0.5 * z ** 2) / (SQRT_2PI * self.sigma)).mean(axis=-1)

    @property
    def mean(self) -> float:
        return float(self.mu.mean())

    @property
    def mean_component_variance(self) -> float:
        return float(np.mean(self.sigma ** 2))

    @property
    def variance(self) -> float:
        """Total variance: mean of the component variances plus the variance of the component means"""
        return self.mean_component_variance + float(np.mean((self.mu - self.mu.mean()) ** 2))


@dataclass(frozen=True, eq=False)
class MixtureDensity:
    """Per-day mixtures over P paths. `mu` and `sigma` are (T, P) arrays of log-space totals."""

    dates: pd.DatetimeIndex
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        if self.mu.shape != self.sigma.shape or self.mu.ndim != 2 or self.mu.shape[0] != len(self.dates):
            raise ValueError(
                f"mu and sigma must both be (days, paths) arrays matching {len(self.dates)} dates, got "
                f"{self.mu.shape} and {self.sigma.shape}")
        if self.mu.shape[1] < 1:
            raise ValueError("A mixture needs at least one path")

    @property
    def paths(self) -> int:
        return self.mu.shape[1]

    def day(self, index: int) -> MixtureDay:
        return MixtureDay(self.mu[index], self.sigma[index])

    def variance(self) -> np.ndarray:
        return np.mean(self.sigma ** 2, axis=1) + np.var(self.mu, axis=1)

    def to_frame(self) -> pd.DataFrame:
        """Long format `date,path_id,mu_log,sigma_log`"""
        days, paths = self.mu.shape
        return pd.DataFrame({
            "date": np.repeat(self.dates.strftime("%Y-%m-%d").to_numpy(), paths),
            "path_id": np.tile(np.arange(paths), days),
            "mu_log": self.mu.reshape(-1),
            "sigma_log": self.sigma.reshape(-1),
        })

    @staticmethod
    def from_frame(frame: pd.DataFrame) -> "MixtureDensity":
        mu = frame.pivot(index="date", columns="path_id", values="mu_log").sort_index()
        sigma = frame.pivot(index="date", columns="path_id", values="sigma_log").sort_index()
        return MixtureDensity(pd.DatetimeIndex(pd.to_datetime(mu.index), name="date"), mu.to_numpy(),
                              sigma.to_numpy())


@dataclass(frozen=True, eq=False)
class DensityForecast:
    """
    Per-day density forecast of log consumption. For a Gaussian forecast `mean_log` is the total mean
    T_t + S_t + μ_t and `sigma_log` the standard deviation; for an ex-ante forecast `mixture` holds the components and
    `sigma_log` is the mixture's total standard deviation. `point_gwh` is the median in consumption space.
    """

    dates: pd.DatetimeIndex
    mean_log: np.ndarray
    sigma_log: np.ndarray
    point_gwh: np.ndarray
    mixture: Optional[MixtureDensity] = None

    def __post_init__(self):
        lengths = {len(self.dates), len(self.mean_log), len(self.sigma_log), len(self.point_gwh)}
        if len(lengths) != 1:
            raise ValueError(f"All per-day arrays must have the same length, got {sorted(lengths)}")
        if not (np.asarray(self.sigma_log) > 0).all():
            raise ValueError("sigma_log must be positive on every day")

    def __len__(self):
        return len(self.dates)

    @property
    def is_mixture(self) -> bool:
        return self.mixture is not None

    def gaussian_quantiles(self, levels: Sequence[float]) -> np.ndarray:
        """(T, len(levels)) consumption-space quantiles exp(m_t + σ_t z_p) for levels p in (0, 1)"""
        z = ndtri(np.asarray(levels, dtype=float))
        return np.exp(self.mean_log[:, None] + self.sigma_log[:, None] * z[None, :])
