"""Reproducible, splittable uniform streams and the variates derived from them.

Generator: Philox4x64-10 (counter based), version ``GENERATOR_VERSION``.

* The 128-bit Philox key is the first two 64-bit words of
  ``numpy.random.SeedSequence(seed).generate_state(2, uint64)``.
* ``stream_id`` is written into the third word of the 256-bit counter, so
  each stream owns a disjoint block of 2**128 counter values. Building
  stream ``k`` is O(1).
* One uniform consumes one raw 64-bit word ``w``:
  ``u = ((w >> 11) + 0.5) * 2**-53``, which lies strictly inside (0, 1).
* Exponentials are ``-log(u) / rate`` (inverse CDF); standard normals are
  ``ndtri(u)`` (inverse normal CDF). Both consume exactly one uniform.

Any object with a ``uniforms(size)`` method returning a float array in
(0, 1) can stand in for a stream; :class:`ScriptedStream` replays a fixed
list, which is how the unit tests pin exact values.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Protocol, Sequence

import numpy as np
from scipy.special import ndtri

from poisrec.errors import InvalidInputError, InvalidParameterError

GENERATOR_VERSION = "philox4x64-seedseq-v1"

_U64 = np.uint64
_SHIFT = _U64(11)
_SCALE = 2.0**-53


class UniformSource(Protocol):
    def uniforms(self, size: int) -> np.ndarray: ...


@lru_cache(maxsize=256)
def _philox_key(seed: int) -> tuple[int, int]:
    words = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)
    return int(words[0]), int(words[1])


class RandomStream:
    """Deterministic uniform stream identified by ``(seed, stream_id)``."""

    def __init__(self, seed: int, stream_id: int = 0):
        if not 0 <= seed < 2**64:
            raise InvalidParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
        if stream_id < 0 or stream_id >= 2**64:
            raise InvalidParameterError(f"stream_id must be non-negative, got {stream_id}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.position = 0
        key = np.array(_philox_key(self.seed), dtype=np.uint64)
        counter = np.array([0, 0, self.stream_id, 0], dtype=np.uint64)
        self._bitgen = np.random.Philox(key=key, counter=counter)

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id}, position={self.position})"

    def uniforms(self, size: int) -> np.ndarray:
        raw = self._bitgen.random_raw(size)
        self.position += size
        return ((raw >> _SHIFT).astype(np.float64) + 0.5) * _SCALE


class ScriptedStream:
    """Replays a finite list of uniforms; raises once exhausted."""

    def __init__(self, values: Sequence[float]):
        arr = np.asarray(values, dtype=np.float64)
        if np.any((arr <= 0.0) | (arr >= 1.0)):
            raise InvalidInputError("scripted uniforms must lie strictly inside (0, 1)")
        self._values = arr
        self.position = 0

    @classmethod
    def from_exponentials(cls, values: Sequence[float], rate: float = 1.0) -> "ScriptedStream":
        """Script the uniforms whose inverse-CDF images are ``values``."""
        return cls(np.exp(-rate * np.asarray(values, dtype=np.float64)))

    def uniforms(self, size: int) -> np.ndarray:
        end = self.position + size
        if end > self._values.size:
            raise IndexError(
                f"scripted stream exhausted: requested {size} at position {self.position}, "
                f"only {self._values.size} scripted"
            )
        out = self._values[self.position:end].copy()
        self.position = end
        return out

    @property
    def remaining(self) -> int:
        return self._values.size - self.position


def make_stream(seed: int, stream_id: int = 0) -> RandomStream:
    return RandomStream(seed, stream_id)


def sample_uniform(stream: UniformSource) -> float:
    return float(stream.uniforms(1)[0])


def _check_rate(rate: float) -> None:
    if not rate > 0 or not np.isfinite(rate):
        raise InvalidParameterError(f"rate must be positive and finite, got {rate}")


def exp_from_uniform(u, rate: float = 1.0):
    _check_rate(rate)
    return -np.log(u) / rate


def sample_exp(stream: UniformSource, rate: float = 1.0) -> float:
    _check_rate(rate)
    return float(-np.log(stream.uniforms(1)[0]) / rate)


def exponentials(stream: UniformSource, rate: float, size: int) -> np.ndarray:
    _check_rate(rate)
    return -np.log(stream.uniforms(size)) / rate


def normals(stream: UniformSource, size: int) -> np.ndarray:
    return ndtri(stream.uniforms(size))
