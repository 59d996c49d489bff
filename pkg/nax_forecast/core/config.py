from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import yaml
from yaml.loader import SafeLoader

from nax_forecast.core.exceptions import NaxException
from nax_forecast.core.models.density import BootstrapConfig
from nax_forecast.core.models.grid import GridSpec
from nax_forecast.core.models.nax import NaxConfig
from nax_forecast.core.models.segmentation import DateRange, Segmentation

APP_ROOT = Path(__file__).parents[2]
DEFAULT_CONFIG_PATH = APP_ROOT / "etc" / "config.yml"


class ConfigException(NaxException):
    pass


def flatten(mapping: Mapping[str, Any], prefix: str = "") -> Dict[str, Any]:
    """Flatten nested mappings into one level with dotted key names, e.g. {"a": {"b": 1}} -> {"a.b": 1}"""
    flat = {}
    for key, value in mapping.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def parse_override(assignment: str) -> Dict[str, Any]:
    """
    Parse a `key=value` override from the command line. The value is read as YAML, so `3`, `0.5`, `[1, 2]` and
    `true` get their natural types.
    """
    key, sep, value = assignment.partition("=")
    if not sep or not key.strip():
        raise ConfigException(f"Expected an override of the form key=value, got {assignment!r}")
    return {key.strip(): yaml.load(value, Loader=SafeLoader)}


class RunConfig:
    """
    A run configuration.

    Settings are read from a YAML file (by default `../etc/config.yml`) holding `key: value` lines with dotted key
    names. Nested mappings are flattened into dotted names, so both styles are accepted. Overrides (from command line
    flags) take precedence over the file.
    """

    def __init__(self, config_path: Union[Path, str] = DEFAULT_CONFIG_PATH, overrides: Optional[Mapping] = None):
        if not isinstance(config_path, Path):
            config_path = Path(config_path)

        self.yaml_path = config_path.absolute()
        self.overrides = dict(overrides or {})
        self._yaml = None

    @property
    def yaml(self) -> Dict[str, Any]:
        if self._yaml is None:
            self.load_yaml()
        return self._yaml

    @yaml.setter
    def yaml(self, value):
        self._yaml = value

    def load_yaml(self):
        """Load the config YAML file, flatten it, and apply the overrides"""
        try:
            with open(self.yaml_path, "r", encoding="utf-8") as oyfh:
                loaded = yaml.load(oyfh, Loader=SafeLoader) or {}
        except OSError as err:
            raise ConfigException(f"Unable to read config file {self.yaml_path}: {err}")
        if not isinstance(loaded, Mapping):
            raise ConfigException(f"Expected a mapping of settings in {self.yaml_path}, got {type(loaded).__name__}")
        resolved = flatten(loaded)
        resolved.update(flatten(self.overrides))
        self.yaml = resolved

    def with_overrides(self, overrides: Mapping[str, Any]) -> "RunConfig":
        merged = dict(self.overrides)
        merged.update(overrides)
        return RunConfig(self.yaml_path, merged)

    def get(self, key: str, default: Any = None) -> Any:
        return self.yaml.get(key, default)

    def require(self, key: str) -> Any:
        try:
            return self.yaml[key]
        except KeyError:
            raise ConfigException(f"Looked for `{key}` in {self.yaml_path} but it was missing")

    def resolve_path(self, value: Union[str, Path]) -> Path:
        """Relative paths are resolved against the directory holding the config file"""
        path = Path(value)
        return path if path.is_absolute() else (self.yaml_path.parent / path)

    def seed(self) -> int:
        seed = self.require("seed")
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigException(f"`seed` must be a nonnegative integer, got {seed!r}")
        return seed

    def workers(self) -> int:
        workers = self.get("workers", 1)
        if not isinstance(workers, int) or workers < 1:
            raise ConfigException(f"`workers` must be a positive integer, got {workers!r}")
        return workers

    def output_dir(self) -> Path:
        return self.resolve_path(self.get("output_dir", "output"))

    def data_paths(self) -> Dict[str, Optional[Path]]:
        """
        The input files of the run. One of `data.hourly` or `data.daily` must be set; `data.holidays` is optional.
        Every referenced path must exist.
        """
        paths = {}
        for name in ("hourly", "daily", "holidays"):
            value = self.get(f"data.{name}")
            paths[name] = None if value in (None, "") else self.resolve_path(value)
        if paths["hourly"] is None and paths["daily"] is None:
            raise ConfigException(f"One of `data.hourly` or `data.daily` must be set in {self.yaml_path}")
        if missing := [f"data.{name}={path}" for name, path in paths.items() if path and not path.exists()]:
            raise ConfigException(f"Referenced data files don't exist: {', '.join(missing)}")
        return paths

    def include_floating_holidays(self) -> bool:
        return bool(self.get("holidays.include_floating", False))

    def segmentation(self) -> Segmentation:
        try:
            return Segmentation(
                calibration=DateRange.parse_str(self.require("segmentation.calibration")),
                validation=DateRange.parse_str(self.require("segmentation.validation")),
                test=DateRange.parse_str(self.require("segmentation.test")),
                robustness=DateRange.parse_str(self.require("segmentation.robustness")).split_years()
                if self.get("segmentation.robustness") else [],
            )
        except (ValueError, TypeError) as err:
            raise ConfigException(f"Invalid segmentation in {self.yaml_path}: {err}")

    def nax_defaults(self) -> NaxConfig:
        """The NaxConfig built from the `nax.*` settings, used where no grid search result is supplied"""
        fields = {k[len("nax."):]: v for k, v in self.yaml.items() if k.startswith("nax.")}
        fields.setdefault("seed", self.seed())
        try:
            return NaxConfig.from_json(fields)
        except Exception as err:
            raise ConfigException(f"Invalid `nax.*` settings in {self.yaml_path}: {err}")

    def grid_spec(self) -> GridSpec:
        fields = {k[len("grid."):]: v for k, v in self.yaml.items() if k.startswith("grid.")}
        try:
            return GridSpec.from_json(fields)
        except Exception as err:
            raise ConfigException(f"Invalid `grid.*` settings in {self.yaml_path}: {err}")

    def bootstrap_config(self) -> BootstrapConfig:
        fields = {k[len("bootstrap."):]: v for k, v in self.yaml.items() if k.startswith("bootstrap.")}
        fields.setdefault("seed", self.seed())
        try:
            return BootstrapConfig.from_json(fields)
        except Exception as err:
            raise ConfigException(f"Invalid `bootstrap.*` settings in {self.yaml_path}: {err}")

    def resolved(self) -> Dict[str, Any]:
        """The fully resolved flat settings, as recorded in run manifests"""
        return dict(sorted(self.yaml.items()))
