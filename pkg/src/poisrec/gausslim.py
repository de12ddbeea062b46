"""Brownian motion B, its running integral Y, and the limit pair
(Z^C, Z^W) = (-B, Y - t B) on a grid.

Exact-joint scheme: on a step of length h, with z1, z2 independent N(0, 1),

    dB = sqrt(h) z1
    dY = h B_t + h^{3/2} (z1 / 2 + z2 / (2 sqrt 3))

so (dB, dY - h B_t) has covariance [[h, h^2/2], [h^2/2, h^3/3]], the exact
law of (B_{t+h} - B_t, int_t^{t+h} (B_s - B_t) ds). Normal variates come
from the uniform stream through the inverse normal CDF, z1 before z2 per
step (stored as two consecutive blocks of size ``steps``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from poisrec.errors import InvalidInputError, InvalidParameterError
from poisrec.randomness import UniformSource, normals
from poisrec.scaling import SampledPath, check_grid

Scheme = Literal["exact-joint", "trapezoid"]


@dataclass(frozen=True, eq=False)
class GaussianPairPath:
    grid: np.ndarray
    b: np.ndarray
    y: np.ndarray
    scheme: str

    def __post_init__(self):
        if self.b.shape[-1] != self.grid.size or self.y.shape != self.b.shape:
            raise InvalidInputError("B, Y and grid sizes differ")


def _grid_with_origin(grid) -> np.ndarray:
    g = check_grid(grid)
    if g[0] != 0.0:
        raise InvalidInputError("Brownian grids must start at 0")
    if g.size < 2:
        raise InvalidInputError("Brownian grids need at least two points")
    return g


def trapezoid_integral(grid, b) -> np.ndarray:
    """Running trapezoid integral of ``b`` (last axis) over ``grid``."""
    h = np.diff(grid)
    b = np.asarray(b, dtype=np.float64)
    steps = 0.5 * h * (b[..., 1:] + b[..., :-1])
    out = np.zeros_like(b)
    np.cumsum(steps, axis=-1, out=out[..., 1:])
    return out


def pair_from_b(grid, b) -> GaussianPairPath:
    """Trapezoid pair built from given B values (test seam and cross-check)."""
    g = _grid_with_origin(grid)
    b = np.asarray(b, dtype=np.float64)
    return GaussianPairPath(g, b, trapezoid_integral(g, b), "trapezoid")


def simulate_bm_pairs(stream: UniformSource, grid, replicates: int,
                      scheme: Scheme = "exact-joint") -> GaussianPairPath:
    """``replicates`` independent (B, Y) paths as rows of 2-d arrays."""
    g = _grid_with_origin(grid)
    if replicates < 1:
        raise InvalidParameterError("replicates must be positive")
    h = np.diff(g)
    steps = h.size
    if scheme == "exact-joint":
        z = normals(stream, 2 * steps * replicates).reshape(replicates, 2, steps)
        z1, z2 = z[:, 0, :], z[:, 1, :]
        db = np.sqrt(h) * z1
        b = np.zeros((replicates, g.size))
        np.cumsum(db, axis=1, out=b[:, 1:])
        local = h**1.5 * (0.5 * z1 + z2 / (2.0 * math.sqrt(3.0)))
        y = np.zeros_like(b)
        np.cumsum(h * b[:, :-1] + local, axis=1, out=y[:, 1:])
        return GaussianPairPath(g, b, y, scheme)
    if scheme == "trapezoid":
        z = normals(stream, steps * replicates).reshape(replicates, steps)
        b = np.zeros((replicates, g.size))
        np.cumsum(np.sqrt(h) * z, axis=1, out=b[:, 1:])
        return GaussianPairPath(g, b, trapezoid_integral(g, b), scheme)
    raise InvalidParameterError(f"unknown scheme {scheme!r}")


def simulate_bm_pair(stream: UniformSource, grid, scheme: Scheme = "exact-joint") -> GaussianPairPath:
    pairs = simulate_bm_pairs(stream, grid, 1, scheme)
    return GaussianPairPath(pairs.grid, pairs.b[0], pairs.y[0], scheme)


def limit_pair(pair: GaussianPairPath):
    """(Z^C, Z^W) = (-B, Y - t B). Returns SampledPaths for a single path,
    plain arrays (rows = replicates) for a batch."""
    zc = -pair.b
    zw = pair.y - pair.grid * pair.b
    if pair.b.ndim == 1:
        return SampledPath(pair.grid, zc), SampledPath(pair.grid, zw)
    return zc, zw


def limit_cov(s: float, t: float) -> float:
    """cov(Z^W_s, Z^W_t) = min(s, t)^3 / 3."""
    for x in (s, t):
        if not 0.0 <= x <= 1.0:
            raise InvalidParameterError(f"time {x} outside [0, 1]")
    return min(s, t) ** 3 / 3.0


def clocked_bms(stream: UniformSource, grid, replicates: int) -> np.ndarray:
    """Rows of B~(t^3) / sqrt(3) on ``grid``; B~ a standard Brownian motion."""
    g = _grid_with_origin(grid)
    if replicates < 1:
        raise InvalidParameterError("replicates must be positive")
    var = np.diff(g**3) / 3.0
    z = normals(stream, var.size * replicates).reshape(replicates, var.size)
    out = np.zeros((replicates, g.size))
    np.cumsum(np.sqrt(var) * z, axis=1, out=out[:, 1:])
    return out


def clocked_bm(stream: UniformSource, grid) -> SampledPath:
    g = _grid_with_origin(grid)
    return SampledPath(g, clocked_bms(stream, g, 1)[0])


def zw_cov_matrix(grid) -> np.ndarray:
    """Exact covariance matrix of Z^W on ``grid``."""
    g = np.asarray(grid, dtype=np.float64)
    return np.minimum.outer(g, g) ** 3 / 3.0


def trapezoid_zw_cov(grid) -> np.ndarray:
    """Covariance matrix of Z^W when Y is the trapezoid integral of grid-sampled B.

    Z^W = (T - diag(t)) L dB with L the partial-sum map and T the trapezoid
    weights, so the covariance is a closed-form matrix product.
    """
    g = _grid_with_origin(grid)
    h = np.diff(g)
    size = g.size
    partial = np.tril(np.ones((size, size - 1)), k=-1)
    trap = np.zeros((size, size))
    for k in range(1, size):
        trap[k] = trap[k - 1]
        trap[k, k - 1] += 0.5 * h[k - 1]
        trap[k, k] += 0.5 * h[k - 1]
    m = (trap - np.diag(g)) @ partial
    return (m * h) @ m.T
