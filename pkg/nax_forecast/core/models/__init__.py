from abc import ABC, abstractmethod
from typing import Any, Dict, Generic, Set, TypeVar

from ._types_and_defaults import *
from ..exceptions import InvalidNaxJsonError

JsonDict = Dict[str, Any]

T = TypeVar("T", bound="NaxModel")


class NaxModel(ABC, Generic[T]):
    """
    Mixin for everything a run writes to disk and a later run reads back: fitted networks and scalers, selected
    configurations, forecasts and evaluation reports. Subclasses map themselves to plain JSON values with `to_json`
    and list the keys they accept so `from_json` can reject stale or foreign files.
    """

    def __init__(self, *args, **kwargs):
        # Dataclass subclasses replace this; it keeps `cls(**kwargs)` in `from_json` well typed
        pass

    @classmethod
    def _prepare_json_for_init(cls, json_dict: JsonDict) -> JsonDict:
        """
        Turn the decoded JSON into constructor arguments, e.g. nested models from their dicts or lists back into
        numpy arrays. Unchanged by default.
        """
        return json_dict

    @classmethod
    @abstractmethod
    def _get_allowed_json_keys(cls) -> Set[str]:
        """The keys `from_json` accepts; anything else in a file means it was written by something else"""
        raise NotImplementedError

    @classmethod
    def from_json(cls, json_dict: JsonDict) -> T:
        """
        Rebuild an instance from the dict `to_json` produced.

        Raises `InvalidNaxJsonError` on unknown keys, or when the prepared arguments fail the constructor's own
        validation.
        """
        if invalid_keys := json_dict.keys() - cls._get_allowed_json_keys():
            raise InvalidNaxJsonError(f"Unexpected keys in JSON dict for {cls.__name__}: {invalid_keys!r}")

        prepared_dict = cls._prepare_json_for_init(dict(json_dict))
        try:
            return cls(**prepared_dict)
        except Exception as exc:
            raise InvalidNaxJsonError(f"Error during conversion from JSON: {str(exc)}") from exc

    @abstractmethod
    def to_json(self) -> Dict[str, Any]:
        """A dict of plain numbers, strings and lists, ready for `json.dumps`"""
        raise NotImplementedError
