"""Direct simulation of record values and record times, and the perpetuity
carried by the record-time representation.

Neither record-time sampler touches the non-record lifetimes, so record
indices far beyond anything a naive lifetime simulation could reach
(L_n grows like e^n) cost O(n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from poisrec.errors import InvalidInputError, InvalidParameterError
from poisrec.randomness import UniformSource, exp_from_uniform

# Integer record times are kept exact below this bound; beyond it the
# float64 sum is no longer exact and we refuse rather than round silently.
_MAX_EXACT = 2.0**62


@dataclass(frozen=True)
class RecordSequence:
    values: np.ndarray
    times: np.ndarray


@dataclass(frozen=True)
class PerpetuityState:
    value: float
    index: int = 1

    def __post_init__(self):
        if not self.value >= 0:
            raise InvalidParameterError(f"perpetuity value must be non-negative, got {self.value}")


def simulate_record_values(stream: UniformSource, rate: float, n: int) -> np.ndarray:
    """R_1..R_n as partial sums of i.i.d. Exp(rate) record increments."""
    if n < 1:
        raise InvalidParameterError(f"need at least one record, got n={n}")
    return np.cumsum(exp_from_uniform(stream.uniforms(n), rate))


def neg_log_one_minus_exp(r) -> np.ndarray:
    """-log(1 - exp(-r)) for r > 0 without cancellation.

    For r > log 2 this is ``-log1p(-exp(-r))`` (exp(-r) small, log1p exact);
    otherwise ``-log(-expm1(-r))`` (1 - exp(-r) small, expm1 exact).
    """
    r = np.asarray(r, dtype=np.float64)
    big = r > math.log(2.0)
    with np.errstate(divide="ignore"):
        return np.where(big, -np.log1p(-np.exp(-np.where(big, r, 1.0))),
                        -np.log(-np.expm1(-np.where(big, 1.0, r))))


def bracket(x) -> np.ndarray:
    """floor(x) + 1 (equals ceil(x) except at integers, where it is x + 1)."""
    return np.floor(x) + 1.0


def _as_record_times(steps: np.ndarray) -> np.ndarray:
    total = 1.0 + np.concatenate(([0.0], np.cumsum(steps)))
    if total[-1] >= _MAX_EXACT:
        raise OverflowError("record times exceed the exactly representable integer range")
    return total.astype(np.int64)


def record_times_ceil_rep(stream: UniformSource, record_values) -> np.ndarray:
    """L_1..L_n from record values via independent unit exponentials V_i:

    L_n = 1 + sum_{i<n} bracket(V_i / -log(1 - exp(-R_i))).

    ``stream`` must be independent of the one that produced ``record_values``.
    The record values are taken at unit rate (the representation is for
    standard exponential lifetimes); rescale before calling otherwise.
    """
    r = np.asarray(record_values, dtype=np.float64)
    if r.ndim != 1 or r.size == 0:
        raise InvalidInputError("record_values must be a non-empty 1-d sequence")
    if r[0] <= 0 or np.any(np.diff(r) <= 0):
        raise InvalidInputError("record values must be positive and strictly increasing")
    if r.size == 1:
        return np.ones(1, dtype=np.int64)
    v = exp_from_uniform(stream.uniforms(r.size - 1))
    return _as_record_times(bracket(v / neg_log_one_minus_exp(r[:-1])))


def next_record_time(k: int, u: float) -> int:
    """Inverse-transform draw from P(L_{j+1} > m | L_j = k) = k / m."""
    if not 0.0 < u < 1.0:
        raise InvalidParameterError(f"u must lie in (0, 1), got {u}")
    return max(math.ceil(k / u), k + 1)


def record_times_markov(stream: UniformSource, n: int) -> np.ndarray:
    """L_1..L_n from the Markov chain L_{j+1} = ceil(L_j / U_j)."""
    if n < 1:
        raise InvalidParameterError(f"need at least one record, got n={n}")
    u = stream.uniforms(n - 1)
    out = np.empty(n, dtype=np.int64)
    k = 1
    out[0] = 1
    for j in range(n - 1):
        # ceil(k/u) is exact in float64 as long as k/u < 2**53; beyond that,
        # fall back to exact integer arithmetic on the dyadic uniform.
        q = k / u[j]
        if q < 2.0**52:
            k = max(math.ceil(q), k + 1)
        else:
            num, den = float(u[j]).as_integer_ratio()
            k = max(-(-(k * den) // num), k + 1)
            if k >= _MAX_EXACT:
                raise OverflowError("record times exceed the int64 range")
        out[j + 1] = k
    return out


def perpetuity_step(state: PerpetuityState, v: float, u: float) -> PerpetuityState:
    """One step of Y_{n+1} = (Y_n + V_n) U_{n+1}."""
    if not v > 0:
        raise InvalidParameterError(f"v must be positive, got {v}")
    if not 0.0 < u < 1.0:
        raise InvalidParameterError(f"u must lie in (0, 1), got {u}")
    return PerpetuityState((state.value + v) * u, state.index + 1)


def perpetuity_direct(record_values, exponentials) -> float:
    """Y_n = exp(-R_n) + sum_{i<n} V_i exp(-(R_n - R_i))."""
    r = np.asarray(record_values, dtype=np.float64)
    v = np.asarray(exponentials, dtype=np.float64)
    if r.ndim != 1 or r.size == 0:
        raise InvalidInputError("record_values must be non-empty")
    if v.shape != (r.size - 1,):
        raise InvalidInputError(f"need {r.size - 1} exponentials for {r.size} record values, got {v.size}")
    if r[0] <= 0 or np.any(np.diff(r) <= 0):
        raise InvalidInputError("record values must be positive and strictly increasing")
    return math.fsum(np.concatenate(([math.exp(-r[-1])], v * np.exp(-(r[-1] - r[:-1])))))


def perpetuity_recursive(record_values, exponentials) -> float:
    """Same quantity as :func:`perpetuity_direct`, by iterating the step map
    from Y_1 = exp(-R_1) with U_{i+1} = exp(-(R_{i+1} - R_i))."""
    r = np.asarray(record_values, dtype=np.float64)
    v = np.asarray(exponentials, dtype=np.float64)
    if v.shape != (r.size - 1,):
        raise InvalidInputError(f"need {r.size - 1} exponentials for {r.size} record values, got {v.size}")
    state = PerpetuityState(math.exp(-r[0]))
    for i in range(r.size - 1):
        state = perpetuity_step(state, float(v[i]), math.exp(-(r[i + 1] - r[i])))
    return state.value


def stationary_perpetuity(stream: UniformSource, replicates: int, burn_in: int = 100) -> np.ndarray:
    """Independent draws of Y_{burn_in} started from Y = 0 (vectorised over replicates).

    Approaches the stationary law of sum_n V_n prod_{k<=n} U_k; after m steps
    the mean is 1 - 2**-m.
    """
    if replicates < 1 or burn_in < 1:
        raise InvalidParameterError("replicates and burn_in must be positive")
    y = np.zeros(replicates)
    for _ in range(burn_in):
        v = exp_from_uniform(stream.uniforms(replicates))
        u = stream.uniforms(replicates)
        y = (y + v) * u
    return y
