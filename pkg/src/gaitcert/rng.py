"""Counter-based RNG streams.

Every stochastic quantity in a run is drawn from a Philox generator keyed by
(master_seed, lane, index).  Streams are independent by key, so environments
and training stages can be sampled in any order, or in parallel, and still
reproduce bit-identically.
"""

from __future__ import annotations

import numpy as np

# Lane codes.  Environment lanes are indexed by env_index; run lanes use index 0.
LANE_HEADING = 0
LANE_TRAJECTORY = 1
LANE_FORCE = 2
LANE_ES_PERTURB = 3
LANE_ES_SHUFFLE = 4
LANE_POLICY_SET = 5
LANE_EVAL_DRAW = 6

_LANE_COUNT = 16
_MASK64 = (1 << 64) - 1


def stream_key(master_seed: int, lane: int, index: int = 0) -> tuple[int, int]:
    """Philox key for one logical stream."""
    if not 0 <= lane < _LANE_COUNT:
        raise ValueError(f"lane must be in [0, {_LANE_COUNT}), got {lane}")
    if index < 0:
        raise ValueError("stream index must be nonnegative")
    return (master_seed & _MASK64, (index * _LANE_COUNT + lane) & _MASK64)


def make_stream(master_seed: int, lane: int, index: int = 0) -> np.random.Generator:
    """Fresh generator for the (master_seed, lane, index) stream."""
    return stream_from_key(stream_key(master_seed, lane, index))


def stream_from_key(key: tuple[int, int]) -> np.random.Generator:
    k = np.asarray(key, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=k))
