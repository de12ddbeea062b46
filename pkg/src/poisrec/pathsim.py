"""Exact Poisson sample paths, their record structure, and the observables
N_t (arrivals), C_t (completed record lifetimes), W_t (time spent in record
lifetimes), current age and running maximum.

Time-boundary convention: ``N_t`` counts arrivals with ``S_n <= t``, so all
observables are right-continuous and the age is 0 exactly at an arrival.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from poisrec.errors import InvalidInputError, InvalidParameterError, OutOfRangeError
from poisrec.randomness import UniformSource, exp_from_uniform


@dataclass(frozen=True, eq=False)
class PoissonPath:
    """Interarrivals X_1..X_m with ``S_{m-1} <= horizon < S_m``.

    The lifetime in progress at the horizon (``X_m``) is always kept, since
    whether it is a record decides how W grows up to the horizon.
    """

    rate: float
    horizon: float
    interarrivals: np.ndarray
    arrivals: np.ndarray

    @classmethod
    def from_interarrivals(cls, interarrivals, horizon: float, rate: float = 1.0) -> "PoissonPath":
        """Build a path from given lifetimes, dropping any past the overshoot."""
        x = np.asarray(interarrivals, dtype=np.float64)
        if x.ndim != 1 or x.size == 0:
            raise InvalidInputError("interarrivals must be a non-empty 1-d sequence")
        if np.any(x <= 0):
            raise InvalidInputError("interarrivals must be positive")
        _check_rate_horizon(rate, horizon)
        s = np.cumsum(x)
        m = int(np.searchsorted(s, horizon, side="right"))
        if m == s.size:
            raise InvalidInputError(
                f"interarrivals end at {s[-1]} <= horizon {horizon}; the overshoot lifetime is required"
            )
        x = x[: m + 1].copy()
        s = s[: m + 1].copy()
        x.flags.writeable = False
        s.flags.writeable = False
        return cls(float(rate), float(horizon), x, s)

    @property
    def n_completed(self) -> int:
        """N at the horizon."""
        return self.interarrivals.size - 1

    @cached_property
    def running_max(self) -> np.ndarray:
        return np.maximum.accumulate(self.interarrivals)

    def scaled(self, c: float) -> "PoissonPath":
        """The same path with every lifetime multiplied by ``c`` (rate divided by ``c``)."""
        if not c > 0:
            raise InvalidParameterError("scale factor must be positive")
        return PoissonPath.from_interarrivals(self.interarrivals * c, self.horizon * c, self.rate / c)


@dataclass(frozen=True, eq=False)
class RecordTrace:
    """Record structure of a lifetime sequence (all index arrays 1-based in meaning).

    ``counts[n-1]`` is A_n, ``record_times[j-1]`` is L_j, ``record_values[j-1]``
    is R_j and ``record_sums[j-1]`` is T_j.
    """

    indicators: np.ndarray
    counts: np.ndarray
    record_times: np.ndarray
    record_values: np.ndarray
    record_sums: np.ndarray

    @property
    def n_records(self) -> int:
        return self.record_times.size


class Observables(NamedTuple):
    n: int
    c: int
    w: float
    age: float
    current_max: float | None


def _check_rate_horizon(rate: float, horizon: float) -> None:
    if not (rate > 0 and math.isfinite(rate)):
        raise InvalidParameterError(f"rate must be positive and finite, got {rate}")
    if not (horizon >= 0 and math.isfinite(horizon)):
        raise InvalidParameterError(f"horizon must be non-negative and finite, got {horizon}")


def simulate_path(stream: UniformSource, rate: float, horizon: float) -> PoissonPath:
    """Draw Exp(rate) lifetimes until the first arrival beyond ``horizon``."""
    _check_rate_horizon(rate, horizon)
    mean = rate * horizon
    chunk = int(mean + 6.0 * math.sqrt(mean) + 16)
    remaining = getattr(stream, "remaining", None)
    xs, ss = [], []
    total = 0.0
    while True:
        size = chunk if remaining is None else min(chunk, stream.remaining)
        if size == 0:
            raise IndexError("uniform source exhausted before the horizon was crossed")
        x = exp_from_uniform(stream.uniforms(size), rate)
        s = total + np.cumsum(x)
        m = int(np.searchsorted(s, horizon, side="right"))
        if m < size:
            xs.append(x[: m + 1])
            ss.append(s[: m + 1])
            break
        xs.append(x)
        ss.append(s)
        total = float(s[-1])
        chunk = max(chunk // 4, 64)
    x = np.concatenate(xs)
    s = np.concatenate(ss)
    x.flags.writeable = False
    s.flags.writeable = False
    return PoissonPath(float(rate), float(horizon), x, s)


def record_indicators(interarrivals) -> np.ndarray:
    x = np.asarray(interarrivals, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise InvalidInputError("record_indicators needs a non-empty 1-d sequence")
    if np.any(x <= 0):
        raise InvalidInputError("lifetimes must be positive")
    ind = np.ones(x.size, dtype=np.int8)
    if x.size > 1:
        ind[1:] = x[1:] > np.maximum.accumulate(x)[:-1]
    return ind


def build_trace(path: PoissonPath) -> RecordTrace:
    x = path.interarrivals
    ind = record_indicators(x)
    counts = np.cumsum(ind, dtype=np.int64)
    times = np.flatnonzero(ind).astype(np.int64) + 1
    values = x[times - 1]
    sums = np.cumsum(values)
    for a in (ind, counts, times, values, sums):
        a.flags.writeable = False
    return RecordTrace(ind, counts, times, values, sums)


def _check_times(path: PoissonPath, t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0) or np.any(t > path.horizon) or np.any(np.isnan(t)):
        raise OutOfRangeError(f"query time outside [0, {path.horizon}]")
    return t


def counts_at(path: PoissonPath, t) -> np.ndarray:
    """N_t for an array of times."""
    return np.searchsorted(path.arrivals, _check_times(path, t), side="right")


def evaluate(path: PoissonPath, trace: RecordTrace, t) -> dict[str, np.ndarray]:
    """Vectorised N, C, W and age at the times ``t`` (closed form for W).

    W_t = T_{A_{N_t}} + (t - S_{N_t}) I_{N_t+1}, with A_0 = T_0 = S_0 = 0.
    """
    t = _check_times(path, t)
    n = np.searchsorted(path.arrivals, t, side="right")
    a = np.where(n > 0, trace.counts[np.maximum(n - 1, 0)], 0)
    t_sum = np.where(a > 0, trace.record_sums[np.maximum(a - 1, 0)], 0.0)
    s_n = np.where(n > 0, path.arrivals[np.maximum(n - 1, 0)], 0.0)
    age = t - s_n
    w = t_sum + age * trace.indicators[n]
    return {"n": n, "c": a, "w": w, "age": age, "i_next": trace.indicators[n]}


def observables_at(path: PoissonPath, trace: RecordTrace, t: float) -> Observables:
    ev = evaluate(path, trace, t)
    n = int(ev["n"])
    current_max = float(path.interarrivals[:n].max()) if n > 0 else None
    return Observables(n, int(ev["c"]), float(ev["w"]), float(ev["age"]), current_max)


def integrate_time_in_records(path: PoissonPath, trace: RecordTrace, t: float) -> float:
    """W_t as the Lebesgue measure of record lifetimes intersected with [0, t].

    Sums the clipped lifetime intervals directly; shares no code with
    :func:`evaluate` and is used to cross-check it.
    """
    t = float(_check_times(path, t))
    starts = np.concatenate(([0.0], path.arrivals[:-1]))
    overlap = np.clip(np.minimum(path.arrivals, t) - starts, 0.0, None)
    return math.fsum(overlap[trace.indicators.astype(bool)])
