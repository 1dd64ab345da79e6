"""Keyed, splittable random streams.

Every stream is addressed by a ``(seed, domain, index)`` triple and is built
from a Philox counter-based generator whose key comes from
:class:`numpy.random.SeedSequence`. Nothing is shared between streams, so the
order in which replications or bootstrap draws are evaluated never changes the
numbers they see.

Normal deviates are produced by the inverse normal CDF applied to uniforms
``(k + 0.5) / 2**53`` where ``k`` is the top 53 bits of a raw Philox output.
This transform is fixed: changing it changes every downstream result for a
given seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

__all__ = [
    "DEFAULT_SEED",
    "StreamKey",
    "stream_generator",
    "raw_uint64",
    "uniform01_vector",
    "standard_normal_vector",
    "uniform_vector",
    "derive_seed",
]

DEFAULT_SEED = 42

_U64_MAX = 2**64 - 1
_INV_2_53 = 1.0 / 9007199254740992.0


@dataclass(frozen=True)
class StreamKey:
    """Address of an independent random stream."""

    seed: int
    domain: str
    index: int = 0

    def __post_init__(self) -> None:
        for name in ("seed", "index"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise TypeError(f"{name} must be an integer, got {value!r}")
            if not 0 <= int(value) <= _U64_MAX:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {value}")
        if not isinstance(self.domain, str) or not self.domain:
            raise ValueError("domain must be a non-empty string")

    def spawn_key(self) -> tuple[int, ...]:
        tag = int.from_bytes(self.domain.encode("utf-8"), "little")
        # SeedSequence wants 32-bit words; split the tag and the index.
        words = []
        while True:
            words.append(tag & 0xFFFFFFFF)
            tag >>= 32
            if not tag:
                break
        index = int(self.index)
        return (len(words), *words, index & 0xFFFFFFFF, index >> 32)


def stream_generator(key: StreamKey) -> np.random.Philox:
    """Return a fresh Philox bit generator positioned at the start of ``key``."""
    ss = np.random.SeedSequence(entropy=int(key.seed), spawn_key=key.spawn_key())
    return np.random.Philox(ss)


def raw_uint64(key: StreamKey, length: int) -> np.ndarray:
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    return stream_generator(key).random_raw(int(length)).astype(np.uint64)


def uniform01_vector(key: StreamKey, length: int) -> np.ndarray:
    """Uniforms on the open interval (0, 1) with 53-bit resolution."""
    raw = raw_uint64(key, length) >> np.uint64(11)
    return (raw.astype(np.float64) + 0.5) * _INV_2_53


def standard_normal_vector(key: StreamKey, length: int) -> np.ndarray:
    """``length`` i.i.d. N(0, 1) deviates fully determined by ``key``.

    Parameters
    ----------
    key : StreamKey
        Stream address.
    length : int
        Number of deviates, at least one.

    Returns
    -------
    ndarray of shape (length,)
    """
    return ndtri(uniform01_vector(key, length))


def uniform_vector(key: StreamKey, length: int, lo: float, hi: float) -> np.ndarray:
    """``length`` i.i.d. uniforms on ``[lo, hi]``, deterministic in ``key``."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got lo={lo}, hi={hi}")
    return lo + (hi - lo) * uniform01_vector(key, length)


def derive_seed(key: StreamKey) -> int:
    """A child 64-bit seed taken from the first word of ``key``'s stream."""
    return int(raw_uint64(key, 1)[0])
