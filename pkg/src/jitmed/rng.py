"""Counter-based random streams.

Two mechanisms, both stateless in the sense that a value depends only on its
key and position:

* ``jitter_uniforms`` / ``jitter_at`` hash ``(seed, index)`` with the
  SplitMix64 finalizer, so the i-th jitter of a sample can be regenerated
  without storing the others.
* ``stream`` returns a numpy ``Generator`` over a Philox bit generator whose
  128-bit key packs ``(master_seed, group, rep, purpose)``; distinct keys give
  distinct, non-overlapping counter sequences.
"""

from __future__ import annotations

import enum

import numpy as np

__all__ = ["Purpose", "stream", "derive_seed", "jitter_uniforms", "jitter_at", "splitmix64"]

_MASK64 = (1 << 64) - 1
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_M52 = 2.0**-52


class Purpose(enum.IntEnum):
    SAMPLE = 0
    JITTER = 1
    CONTAMINATION = 2


def _mix_inplace(z: np.ndarray) -> np.ndarray:
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def splitmix64(x) -> np.ndarray:
    """SplitMix64 finalizer applied elementwise to uint64 values."""
    z = np.array(x, dtype=np.uint64, copy=True, ndmin=1)
    return _mix_inplace(z)


def _seed_state(seed) -> np.uint64:
    return splitmix64(int(seed) & _MASK64)[0]


def _to_unit(z: np.ndarray) -> np.ndarray:
    # top 52 bits plus a half step: strictly inside (0, 1), exact in float64
    out = (z >> np.uint64(12)).astype(np.float64)
    out += 0.5
    out *= _TWO_M52
    return out


def jitter_at(seed, indices) -> np.ndarray:
    """Uniform(0, 1) jitters for the given sample indices under ``seed``."""
    idx = np.asarray(indices)
    if idx.size and idx.min() < 0:
        raise ValueError("indices must be nonnegative")
    z = idx.astype(np.uint64, copy=True)
    z += np.uint64(1)
    z *= _GAMMA
    z += _seed_state(seed)
    return _to_unit(_mix_inplace(z))


def jitter_uniforms(seed, n: int, start: int = 0) -> np.ndarray:
    """Jitters for indices ``start, ..., start + n - 1``."""
    return jitter_at(seed, np.arange(start, start + n, dtype=np.uint64))


def stream(master_seed: int, group: int = 0, rep: int = 0, purpose: Purpose = Purpose.SAMPLE) -> np.random.Generator:
    """Independent generator keyed by ``(master_seed, group, rep, purpose)``.

    ``group`` (e.g. the index of an intensity on a grid) must fit in 24 bits,
    ``rep`` in 32 bits and ``purpose`` in 8 bits.
    """
    if not 0 <= group < (1 << 24):
        raise ValueError("group index out of range")
    if not 0 <= rep < (1 << 32):
        raise ValueError("replication index out of range")
    purpose = int(purpose)
    if not 0 <= purpose < (1 << 8):
        raise ValueError("purpose out of range")
    packed = (group << 40) | (rep << 8) | purpose
    key = np.array([int(master_seed) & _MASK64, packed], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(master_seed: int, group: int = 0, rep: int = 0, purpose: Purpose = Purpose.JITTER) -> int:
    """A 64-bit seed drawn from the keyed stream, e.g. for ``jitter_at``."""
    g = stream(master_seed, group, rep, purpose)
    return int(g.integers(0, 1 << 64, dtype=np.uint64, endpoint=False))
