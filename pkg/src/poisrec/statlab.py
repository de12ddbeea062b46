"""Goodness-of-fit statistics, exact record-count laws and reference CDFs."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.special import digamma, ndtr
from scipy.stats import poisson

from poisrec.errors import InvalidInputError, InvalidParameterError

EULER_GAMMA = 0.5772156649015329

# 1% asymptotic Kolmogorov quantile: P(sqrt(N) D > 1.63) ~ 0.01.
KS_COEFF_1PCT = 1.63


def ks_threshold_one_sample(n: int) -> float:
    return KS_COEFF_1PCT / math.sqrt(n)


def ks_threshold_two_sample(n: int, m: int | None = None) -> float:
    m = n if m is None else m
    return KS_COEFF_1PCT * math.sqrt((n + m) / (n * m))


@dataclass(frozen=True)
class Pmf:
    support: tuple[int, ...]
    probabilities: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.support) != len(self.probabilities):
            raise InvalidInputError("support and probabilities differ in length")
        if abs(float(sum(self.probabilities)) - 1.0) > 1e-12:
            raise InvalidInputError("probabilities do not sum to 1")

    def as_dict(self) -> dict[int, Fraction]:
        return dict(zip(self.support, self.probabilities))

    def __getitem__(self, k: int) -> Fraction:
        return self.as_dict().get(k, Fraction(0))


@dataclass(frozen=True)
class TestReport:
    """One checked statistic. ``threshold`` is an upper bound, or a
    ``(low, high)`` interval that the value must fall in."""

    __test__ = False  # not a pytest class

    suite: str
    statistic: str
    value: float
    threshold: float | tuple[float, float]
    passed: bool
    n_samples: int
    seed: int

    def as_row(self) -> dict:
        threshold = list(self.threshold) if isinstance(self.threshold, tuple) else self.threshold
        return {"suite": self.suite, "statistic": self.statistic, "value": self.value,
                "threshold": threshold, "pass": self.passed, "n_samples": self.n_samples,
                "seed": self.seed}


def report_upper(suite, statistic, value, threshold, n_samples, seed, strict=False) -> TestReport:
    ok = value < threshold if strict else value <= threshold
    return TestReport(suite, statistic, float(value), float(threshold), bool(ok), int(n_samples), int(seed))


def report_interval(suite, statistic, value, low, high, n_samples, seed) -> TestReport:
    ok = low <= value <= high
    return TestReport(suite, statistic, float(value), (float(low), float(high)), bool(ok),
                      int(n_samples), int(seed))


def _sorted_sample(sample) -> np.ndarray:
    x = np.asarray(sample, dtype=np.float64).ravel()
    if x.size == 0:
        raise InvalidInputError("sample must be non-empty")
    if np.any(np.isnan(x)):
        raise InvalidInputError("sample contains NaN")
    return np.sort(x)


def ks_one_sample(sample, cdf: Callable, cdf_left: Callable | None = None) -> float:
    """sup_x |ECDF(x) - F(x)|, exact for samples with ties and for F with jumps
    (pass the left limits F(x-) as ``cdf_left`` when F is not continuous)."""
    x = _sorted_sample(sample)
    vals, counts = np.unique(x, return_counts=True)
    ecdf = np.cumsum(counts) / x.size
    ecdf_before = np.concatenate(([0.0], ecdf[:-1]))
    f = np.asarray(cdf(vals), dtype=np.float64)
    f_left = f if cdf_left is None else np.asarray(cdf_left(vals), dtype=np.float64)
    return float(max(np.max(np.abs(ecdf - f)), np.max(np.abs(f_left - ecdf_before))))


def ks_two_sample(a, b) -> float:
    xa, xb = _sorted_sample(a), _sorted_sample(b)
    merged = np.union1d(xa, xb)
    fa = np.searchsorted(xa, merged, side="right") / xa.size
    fb = np.searchsorted(xb, merged, side="right") / xb.size
    return float(np.max(np.abs(fa - fb)))


def _columns(table, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(table, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise InvalidInputError("need a 2-d table with at least 2 replicate rows")
    return arr[:, i], arr[:, j]


def empirical_cov(table, i: int, j: int) -> float:
    """Unbiased sample covariance of columns i and j (rows are replicates)."""
    x, y = _columns(table, i, j)
    return float(np.sum((x - x.mean()) * (y - y.mean())) / (x.size - 1))


def cov_standard_error(table, i: int, j: int) -> float:
    """Monte Carlo standard error of :func:`empirical_cov`."""
    x, y = _columns(table, i, j)
    prod = (x - x.mean()) * (y - y.mean())
    return float(prod.std(ddof=1) / math.sqrt(x.size))


def record_count_pmf(n: int) -> Pmf:
    """Exact law of A_n = I_1 + ... + I_n, I_k independent Bernoulli(1/k)."""
    if n < 1:
        raise InvalidParameterError(f"n must be positive, got {n}")
    probs = [Fraction(1)]  # law of A_0, indexed by count
    for k in range(1, n + 1):
        p = Fraction(1, k)
        nxt = [Fraction(0)] * (len(probs) + 1)
        for c, q in enumerate(probs):
            nxt[c] += q * (1 - p)
            nxt[c + 1] += q * p
        probs = nxt
    support = tuple(range(1, n + 1))
    return Pmf(support, tuple(probs[1:]))


def enumerate_record_count_pmf(n: int) -> Pmf:
    """Law of the number of left-to-right maxima over all n! orderings."""
    if n < 1:
        raise InvalidParameterError(f"n must be positive, got {n}")
    tally = [0] * (n + 1)
    for perm in itertools.permutations(range(n)):
        best, records = -1, 0
        for v in perm:
            if v > best:
                best, records = v, records + 1
        tally[records] += 1
    total = math.factorial(n)
    return Pmf(tuple(range(1, n + 1)), tuple(Fraction(c, total) for c in tally[1:]))


def total_variation(pmf: Pmf, sample) -> float:
    """TV distance between the empirical law of an integer sample and ``pmf``."""
    s = np.asarray(sample).ravel()
    if s.size == 0:
        raise InvalidInputError("sample must be non-empty")
    vals, counts = np.unique(s, return_counts=True)
    emp = dict(zip(vals.tolist(), (counts / s.size).tolist()))
    keys = set(emp) | set(pmf.support)
    exact = pmf.as_dict()
    return 0.5 * sum(abs(emp.get(k, 0.0) - float(exact.get(k, 0))) for k in keys)


def harmonic(n):
    """H_n for integer n >= 0 (array-valued)."""
    n = np.asarray(n, dtype=np.float64)
    return digamma(n + 1.0) + EULER_GAMMA


def expected_record_count(t: float, rate: float = 1.0) -> float:
    """E C_t = E H_{N_t}, summed over the Poisson(rate t) law of N_t."""
    mu = rate * t
    lo = max(0, int(mu - 40 * math.sqrt(mu) - 40))
    hi = int(mu + 40 * math.sqrt(mu) + 40)
    k = np.arange(lo, hi + 1)
    w = poisson.pmf(k, mu)
    return float(np.sum(w * harmonic(k)) / np.sum(w))


# --- reference distributions -------------------------------------------------

def _sup_abs_bm_theta(x: np.ndarray, tol: float) -> np.ndarray:
    # (4/pi) sum_k (-1)^k / (2k+1) exp(-(2k+1)^2 pi^2 / (8 x^2)); fast for small x.
    out = np.zeros_like(x)
    for k in itertools.count():
        m = 2 * k + 1
        term = (4.0 / math.pi) * (-1) ** k / m * np.exp(-(m * m) * math.pi**2 / (8.0 * x * x))
        out += term
        if np.max(np.abs(term)) < tol:
            return out


def _sup_abs_bm_reflection(x: np.ndarray, tol: float) -> np.ndarray:
    # sum_{k in Z} (-1)^k [Phi((2k+1)x) - Phi((2k-1)x)]; fast for large x.
    out = ndtr(x) - ndtr(-x)
    for k in itertools.count(1):
        term = (-1) ** k * (ndtr((2 * k + 1) * x) - ndtr((2 * k - 1) * x)
                            + ndtr((-2 * k + 1) * x) - ndtr((-2 * k - 1) * x))
        out += term
        if np.max(np.abs(term)) < tol:
            return out


def sup_abs_bm_cdf(x, method: str = "auto", tol: float = 1e-12) -> np.ndarray:
    """P(sup_{0<=s<=1} |B_s| <= x)."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.zeros_like(x)
    pos = x > 0
    if not np.any(pos):
        return out
    xp = x[pos]
    if method == "theta":
        out[pos] = _sup_abs_bm_theta(xp, tol)
    elif method == "reflection":
        out[pos] = _sup_abs_bm_reflection(xp, tol)
    elif method == "auto":
        small = xp < 1.0
        res = np.empty_like(xp)
        if np.any(small):
            res[small] = _sup_abs_bm_theta(xp[small], tol)
        if np.any(~small):
            res[~small] = _sup_abs_bm_reflection(xp[~small], tol)
        out[pos] = res
    else:
        raise InvalidParameterError(f"unknown method {method!r}")
    return np.clip(out, 0.0, 1.0)


def _normal(x, mean=0.0, var=1.0):
    if not var > 0:
        raise InvalidParameterError("normal variance must be positive")
    return ndtr((x - mean) / math.sqrt(var))


def _gumbel(x):
    return np.exp(-np.exp(-x))


def _rank_limit(x):
    xc = np.clip(x, 1e-300, 1.0)
    return np.where(x <= 0, 0.0, np.where(x >= 1, 1.0, xc - xc * np.log(xc)))


def _uniform(x):
    return np.clip(x, 0.0, 1.0)


def _age_truncated_exp(x, rate, t, left=False):
    if not rate > 0 or not t >= 0:
        raise InvalidParameterError("age law needs rate > 0 and t >= 0")
    body = -np.expm1(-rate * np.clip(x, 0.0, t))
    at_or_past = (x > t) if left else (x >= t)
    return np.where(x < 0, 0.0, np.where(at_or_past, 1.0, body))


LAWS = ("normal", "gumbel", "sup_abs_bm", "rank_limit", "uniform", "age_truncated_exp")


def reference_cdf(law: str, params: Sequence[float] = (), x=0.0, left: bool = False):
    """CDF of a named reference law at ``x`` (array or scalar).

    normal(mean, var); gumbel (standard, exp(-e^{-x})); sup_abs_bm; rank_limit
    (density -log x on (0,1)); uniform on (0,1); age_truncated_exp(rate, t).
    ``left=True`` gives left limits, which differ only at the age atom.
    """
    x = np.asarray(x, dtype=np.float64)
    if law == "normal":
        out = _normal(x, *params)
    elif law == "gumbel":
        out = _gumbel(x)
    elif law == "sup_abs_bm":
        out = sup_abs_bm_cdf(x).reshape(x.shape)
    elif law == "rank_limit":
        out = _rank_limit(x)
    elif law == "uniform":
        out = _uniform(x)
    elif law == "age_truncated_exp":
        out = _age_truncated_exp(x, *params, left=left)
    else:
        raise InvalidParameterError(f"unknown law {law!r}; expected one of {LAWS}")
    return float(out) if out.ndim == 0 else out


def rank_of_last(sample) -> int:
    """#{i : x_i >= x_n}: 1 when the last entry is the largest."""
    x = np.asarray(sample, dtype=np.float64).ravel()
    if x.size == 0:
        raise InvalidInputError("sample must be non-empty")
    return int(np.count_nonzero(x >= x[-1]))
