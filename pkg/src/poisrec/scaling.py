"""Rescaled record processes on [0, 1] and the strong-law diagnostics.

On the exponential clock s = e^{n t} - 1:

    C~_n(t) = (C(s) - n t) / sqrt(n)
    W~_n(t) = rate / n^{3/2} * (W(s) - (n t)^2 / (2 rate))
    Phi_n(t) = A_{N(s)} / n

``n`` may be any real >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import lambertw

from poisrec.errors import InvalidInputError, InvalidParameterError, OutOfRangeError
from poisrec.pathsim import PoissonPath, RecordTrace, evaluate

DEFAULT_GRID_POINTS = 2**9 + 1


@dataclass(frozen=True, eq=False)
class SampledPath:
    """Right-continuous step function on [0, 1] known at ``grid``."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        check_grid(self.grid)
        if self.values.shape != self.grid.shape:
            raise InvalidInputError("values and grid lengths differ")

    def __call__(self, t: float) -> float:
        i = int(np.searchsorted(self.grid, t, side="right")) - 1
        if i < 0 or t > 1.0:
            raise OutOfRangeError(f"t={t} outside [0, 1]")
        return float(self.values[i])


def uniform_grid(points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    if points < 2:
        raise InvalidParameterError("a grid needs at least 2 points")
    return np.linspace(0.0, 1.0, points)


def check_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 1 or g.size < 1:
        raise InvalidInputError("grid must be a non-empty 1-d array")
    if g[0] < 0.0 or g[-1] > 1.0 or np.any(np.diff(g) <= 0):
        raise InvalidInputError("grid must be strictly increasing inside [0, 1]")
    return g


def exp_clock(n: float, grid) -> np.ndarray:
    """Calendar times e^{n t} - 1 for the grid points."""
    return np.expm1(n * check_grid(grid))


def _clock_values(path: PoissonPath, trace: RecordTrace, times: np.ndarray, what: str) -> np.ndarray:
    if times[-1] > path.horizon:
        raise OutOfRangeError(
            f"path horizon {path.horizon} is shorter than the clock end {times[-1]}"
        )
    return evaluate(path, trace, times)[what]


def _check_scale(n: float) -> None:
    if not (n >= 1 and math.isfinite(n)):
        raise InvalidParameterError(f"scale parameter must be a finite real >= 1, got {n}")


def rescaled_C(path: PoissonPath, trace: RecordTrace, n: float, grid) -> SampledPath:
    _check_scale(n)
    g = check_grid(grid)
    c = _clock_values(path, trace, np.expm1(n * g), "c")
    return SampledPath(g, (c - n * g) / math.sqrt(n))


def rescaled_W(path: PoissonPath, trace: RecordTrace, n: float, rate: float, grid) -> SampledPath:
    _check_scale(n)
    g = check_grid(grid)
    w = _clock_values(path, trace, np.expm1(n * g), "w")
    return SampledPath(g, rate / n**1.5 * (w - (n * g) ** 2 / (2.0 * rate)))


def stochastic_clock(path: PoissonPath, trace: RecordTrace, n: float, grid) -> SampledPath:
    _check_scale(n)
    g = check_grid(grid)
    c = _clock_values(path, trace, np.expm1(n * g), "c")
    return SampledPath(g, c / n)


def cuberoot_rescaled_W(path: PoissonPath, trace: RecordTrace, n: int, rate: float, grid) -> SampledPath:
    """W on the clock (n+1)^{t^{1/3}} - 1, centred and scaled to a standard BM limit."""
    if n < 2:
        raise InvalidParameterError(f"cube-root clock needs n >= 2, got {n}")
    g = check_grid(grid)
    log_n = math.log(n)
    times = np.expm1(np.cbrt(g) * math.log1p(n))
    times[g == 1.0] = float(n)
    w = _clock_values(path, trace, times, "w")
    centre = g ** (2.0 / 3.0) * log_n**2 / (2.0 * rate)
    return SampledPath(g, rate * math.sqrt(3.0) / log_n**1.5 * (w - centre))


def _critical_times(rate: float) -> list[float]:
    """Calendar times s where d/ds (log(1+s))^2 / (2 rate) = 1.

    Solves log(x)/x = rate with x = 1 + s; roots exist only for rate <= 1/e.
    """
    if rate > math.exp(-1.0):
        return []
    roots = []
    for branch in (0, -1):
        w = lambertw(-rate, branch)
        x = math.exp(-w.real)
        if x >= 1.0:
            roots.append(x - 1.0)
    return roots


def sup_deviation(path: PoissonPath, trace: RecordTrace, t: float, rate: float) -> float:
    """Exact sup over s in [0, t] of |W_s - (log(1+s))^2 / (2 rate)|.

    W is continuous and piecewise affine with slopes 0 or 1 between arrivals,
    the centring curve is smooth, so the extremes of the difference sit at
    0, t, arrival epochs, or where the curve's slope equals 1.
    """
    if not 0.0 <= t <= path.horizon:
        raise OutOfRangeError(f"t={t} outside [0, {path.horizon}]")
    arr = path.arrivals[path.arrivals <= t]
    cand = np.concatenate(([0.0, t], arr, [s for s in _critical_times(rate) if s <= t]))
    w = evaluate(path, trace, cand)["w"]
    return float(np.max(np.abs(w - np.log1p(cand) ** 2 / (2.0 * rate))))


def slln_ratios(path: PoissonPath, trace: RecordTrace, t: float, rate: float) -> tuple[float, float]:
    """(C_t / log t, 2 rate W_t / (log t)^2); both tend to 1 almost surely."""
    if not t > 1.0:
        raise InvalidParameterError(f"t must exceed 1, got {t}")
    ev = evaluate(path, trace, t)
    log_t = math.log(t)
    return float(ev["c"]) / log_t, 2.0 * rate * float(ev["w"]) / log_t**2
