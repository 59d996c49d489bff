"""
Named random sub-streams derived from the single run seed. A stream is identified by its name and a tuple of
indices (e.g. grid combination and replicate, or bootstrap path), so results don't depend on execution order.
"""
import numpy as np

TRAINING = "training"
BOOTSTRAP = "bootstrap"
GRID = "grid"

_STREAM_IDS = {TRAINING: 0, BOOTSTRAP: 1, GRID: 2}


def substream(seed: int, name: str, *indices: int) -> np.random.Generator:
    try:
        stream_id = _STREAM_IDS[name]
    except KeyError:
        raise ValueError(f"Unknown random stream {name!r}; expected one of {sorted(_STREAM_IDS)}")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream_id, *map(int, indices))))


def derived_seed(seed: int, name: str, *indices: int) -> int:
    """A plain integer seed from a sub-stream, for components that take an int seed"""
    return int(substream(seed, name, *indices).integers(0, 2 ** 31 - 1))
