"""Verification suites: seeded Monte Carlo experiments returning TestReports.

Streams: replicate ``i`` of sub-experiment ``tag`` draws from
``make_stream(seed, (tag << 32) | i)``, so results depend only on
(config, seed), never on how replicates are spread across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from poisrec import gausslim, pathsim, recordsim, scaling, statlab
from poisrec.errors import InvalidParameterError
from poisrec.randomness import exp_from_uniform, make_stream
from poisrec.statlab import TestReport, report_interval, report_upper

# Naive record-time extraction stops after this many lifetimes; all three
# record-time samplers are censored at the same cap before comparison.
NAIVE_RECORD_CAP = 2**20


@dataclass
class ExperimentConfig:
    suite: str
    rate: float | None = None
    scales: list[float] | None = None
    times: list[float] | None = None
    reps: int | None = None
    grid: int | None = None
    seed: int = 1
    horizon: float | None = None
    out: str | None = None
    fmt: str = "json"
    workers: int = 1
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.reps is not None and self.reps < 1:
            raise InvalidParameterError("replicate count must be >= 1")
        if self.grid is not None and self.grid < 2:
            raise InvalidParameterError("grid size must be >= 2")
        if self.rate is not None and not self.rate > 0:
            raise InvalidParameterError("rate must be positive")
        if self.workers < 1:
            raise InvalidParameterError("workers must be >= 1")


def stream_for(seed: int, tag: int, index: int):
    return make_stream(seed, (tag << 32) | index)


def _run_chunk(args):
    fn, seed, tag, lo, hi, kwargs = args
    return [fn(stream_for(seed, tag, i), i, **kwargs) for i in range(lo, hi)]


def replicate_map(fn: Callable, seed: int, tag: int, reps: int, workers: int = 1, **kwargs) -> list:
    """[fn(stream_i, i, **kwargs) for i in range(reps)], optionally in worker processes.

    ``fn`` must be a module-level function. Output order is replicate order.
    """
    if workers <= 1 or reps < 2 * workers:
        return _run_chunk((fn, seed, tag, 0, reps, kwargs))
    bounds = np.linspace(0, reps, min(reps, 8 * workers) + 1).astype(int)
    jobs = [(fn, seed, tag, int(lo), int(hi), kwargs) for lo, hi in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, jobs))
    return [r for part in parts for r in part]


# --- replicate kernels (module level so worker processes can pickle them) ----

def _pathwise_rep(stream, i, rates, horizon, queries, n_scale, grid_points):
    rate = rates[i % len(rates)]
    path = pathsim.simulate_path(stream, rate, horizon)
    trace = pathsim.build_trace(path)
    ts = np.sort(stream.uniforms(queries) * horizon)
    ev = pathsim.evaluate(path, trace, ts)
    w_gap = c_bad = sandwich_bad = max_bad = 0.0
    for k, t in enumerate(ts):
        w_int = pathsim.integrate_time_in_records(path, trace, float(t))
        w_gap = max(w_gap, abs(ev["w"][k] - w_int) / (1.0 + t))
        n = int(ev["n"][k])
        # C_t recomputed from the definition: records among the completed lifetimes.
        c_def = int(np.count_nonzero(trace.indicators[:n]))
        c_bad += c_def != ev["c"][k]
        a_n = int(trace.counts[n - 1]) if n > 0 else 0
        a_n1 = int(trace.counts[n])
        z_n = float(trace.record_sums[a_n - 1]) if a_n > 0 else 0.0
        z_n1 = float(trace.record_sums[a_n1 - 1])
        sandwich_bad += not (z_n <= ev["w"][k] <= z_n1)
        if n >= 1:
            obs = pathsim.observables_at(path, trace, float(t))
            max_bad += obs.current_max != float(trace.record_values[a_n - 1])
    g = scaling.uniform_grid(grid_points)
    c_tilde = scaling.rescaled_C(path, trace, n_scale, g).values
    phi = scaling.stochastic_clock(path, trace, n_scale, g).values
    clock_gap = float(np.max(np.abs(c_tilde - math.sqrt(n_scale) * (phi - g))))
    return w_gap, c_bad, sandwich_bad, max_bad, clock_gap


def _indicator_rep(stream, i, length):
    return pathsim.record_indicators(exp_from_uniform(stream.uniforms(length)))


def _naive_record_times(stream, i, k, cap):
    """Record times L_1..L_k from raw lifetimes, censored at ``cap``."""
    times = []
    best = -1.0
    offset = 0
    size = 256
    while offset < cap:
        size = min(size, cap - offset)
        x = exp_from_uniform(stream.uniforms(size))
        run = np.maximum.accumulate(np.concatenate(([best], x)))[:-1]
        idx = np.flatnonzero(x > run)
        for j in idx[: k - len(times)]:
            times.append(offset + int(j) + 1)
        if len(times) == k:
            return np.array(times, dtype=np.int64)
        best = max(best, float(x.max()))
        offset += size
        size *= 2
    times += [cap + 1] * (k - len(times))
    return np.array(times, dtype=np.int64)


def _ceil_rep(stream_r, i, k, v_seed, tag_v):
    r = recordsim.simulate_record_values(stream_r, 1.0, k)
    return recordsim.record_times_ceil_rep(stream_for(v_seed, tag_v, i), r)


def _markov_rep(stream, i, k):
    return recordsim.record_times_markov(stream, k)


def _count_rep(stream, i, n):
    return int(np.sum(pathsim.record_indicators(exp_from_uniform(stream.uniforms(n)))))


def _pair_rep(stream, i, points, scheme):
    pair = gausslim.simulate_bm_pair(stream, scaling.uniform_grid(points), scheme)
    return pair.b, pair.y


def _clocked_rep(stream, i, grid):
    return gausslim.clocked_bm(stream, grid).values


def _w_at_times_rep(stream, i, rate, times):
    path = pathsim.simulate_path(stream, rate, max(times))
    trace = pathsim.build_trace(path)
    ev = pathsim.evaluate(path, trace, np.asarray(times))
    return ev["w"], ev["c"]


def _renewal_rank_rep(stream, i, rate, t):
    path = pathsim.simulate_path(stream, rate, t)
    return statlab.rank_of_last(path.interarrivals) / path.interarrivals.size


def _iid_rank_rep(stream, i, n):
    return statlab.rank_of_last(exp_from_uniform(stream.uniforms(n))) / n


def _max_rep(stream, i, rate, t):
    path = pathsim.simulate_path(stream, rate, t)
    trace = pathsim.build_trace(path)
    obs = pathsim.observables_at(path, trace, t)
    if obs.n == 0:
        return math.nan, True
    same = obs.current_max == float(trace.record_values[obs.c - 1])
    return obs.current_max - math.log(obs.n), same


def _record_value_rep(stream, i, n):
    return float(recordsim.simulate_record_values(stream, 1.0, n)[-1])


# --- suites -------------------------------------------------------------------

def _get(cfg, name, default):
    v = getattr(cfg, name)
    return default if v is None else v


def suite_pathwise(cfg: ExperimentConfig) -> list[TestReport]:
    reps = _get(cfg, "reps", 1000)
    horizon = _get(cfg, "horizon", math.exp(8.0))
    rates = [cfg.rate] if cfg.rate is not None else [0.5, 1.0, 2.0]
    n_scale = _get(cfg, "scales", [math.log(horizon)])[0]
    grid = _get(cfg, "grid", scaling.DEFAULT_GRID_POINTS)
    queries = int(cfg.extra.get("queries", 20))
    res = replicate_map(_pathwise_rep, cfg.seed, 1, reps, cfg.workers, rates=rates,
                        horizon=horizon, queries=queries, n_scale=n_scale, grid_points=grid)
    arr = np.array(res, dtype=np.float64)
    total = reps * queries
    s, seed = "pathwise", cfg.seed
    return [
        report_upper(s, "max |W_closed - W_integral| / (1 + t)", arr[:, 0].max(), 1e-9, total, seed),
        report_upper(s, "count C_t != A_{N_t}", arr[:, 1].sum(), 0, total, seed),
        report_upper(s, "count sandwich Z_{N_t} <= W_t <= Z_{N_t+1} violated", arr[:, 2].sum(), 0, total, seed),
        report_upper(s, "count M_{N_t} != R_{A_{N_t}}", arr[:, 3].sum(), 0, total, seed),
        report_upper(s, "max |C~_n - sqrt(n)(Phi_n - t)|", arr[:, 4].max(), 1e-12, reps * grid, seed),
    ]


def suite_indicators(cfg: ExperimentConfig) -> list[TestReport]:
    reps = _get(cfg, "reps", 100_000)
    length = int(_get(cfg, "scales", [10])[0])
    ind = np.array(replicate_map(_indicator_rep, cfg.seed, 2, reps, cfg.workers, length=length))
    freq = ind.mean(axis=0)
    out = []
    for n in range(1, length + 1):
        p = 1.0 / n
        band = 4.0 * math.sqrt(p * (1.0 - p) / reps)
        out.append(report_interval("indicators", f"freq(I_{n} = 1)", freq[n - 1], p - band, p + band,
                                   reps, cfg.seed))
    return out


def suite_stirling(cfg: ExperimentConfig) -> list[TestReport]:
    n = int(_get(cfg, "scales", [6])[0])
    reps = _get(cfg, "reps", 200_000)
    out = []
    pmf = statlab.record_count_pmf(n)
    if n <= 7:
        enum = statlab.enumerate_record_count_pmf(n)
        for k, p in zip(pmf.support, pmf.probabilities):
            q = float(enum[k])
            out.append(report_interval("stirling", f"P(A_{n} = {k}) = {p}", float(p), q, q, 1, cfg.seed))
    for m in range(1, 8):
        bad = statlab.record_count_pmf(m) != statlab.enumerate_record_count_pmf(m)
        out.append(report_upper("stirling", f"pmf(A_{m}) != permutation enumeration", int(bad), 0, 1, cfg.seed))
    counts = replicate_map(_count_rep, cfg.seed, 3, reps, cfg.workers, n=n)
    tv = statlab.total_variation(pmf, counts)
    out.append(report_upper("stirling", f"TV(empirical A_{n}, exact)", tv, 0.01, reps, cfg.seed))
    return out


def suite_record_times(cfg: ExperimentConfig) -> list[TestReport]:
    reps = _get(cfg, "reps", 10_000)
    indices = [int(k) for k in _get(cfg, "scales", [3, 6])]
    k = max(indices)
    cap = int(cfg.extra.get("cap", NAIVE_RECORD_CAP))
    samples = {
        "naive": np.array(replicate_map(_naive_record_times, cfg.seed, 4, reps, cfg.workers, k=k, cap=cap)),
        "ceil_rep": np.array(replicate_map(_ceil_rep, cfg.seed, 5, reps, cfg.workers, k=k,
                                           v_seed=cfg.seed, tag_v=6)),
        "markov": np.array(replicate_map(_markov_rep, cfg.seed, 7, reps, cfg.workers, k=k)),
    }
    threshold = statlab.ks_threshold_two_sample(reps)
    out = []
    names = list(samples)
    for idx in indices:
        logs = {m: np.log(np.minimum(samples[m][:, idx - 1], cap + 1)) for m in names}
        for a in range(3):
            for b in range(a + 1, 3):
                d = statlab.ks_two_sample(logs[names[a]], logs[names[b]])
                out.append(report_upper("record_times", f"KS(log L_{idx}: {names[a]} vs {names[b]})",
                                        d, threshold, reps, cfg.seed))
    return out


def suite_limit_cov(cfg: ExperimentConfig) -> list[TestReport]:
    reps = _get(cfg, "reps", 10_000)
    points = _get(cfg, "grid", scaling.DEFAULT_GRID_POINTS)
    g = scaling.uniform_grid(points)
    s, seed = "limit_cov", cfg.seed
    res = replicate_map(_pair_rep, seed, 8, reps, cfg.workers, points=points, scheme="exact-joint")
    b = np.array([r[0] for r in res])
    y = np.array([r[1] for r in res])
    zc, zw = -b, y - g * b
    half = int(np.searchsorted(g, 0.5))
    last = points - 1
    out = []
    var1 = statlab.empirical_cov(zw, last, last)
    out.append(report_interval(s, "Var Z^W_1", var1, 0.31, 0.36, reps, seed))
    c = statlab.empirical_cov(zw, half, last)
    se = statlab.cov_standard_error(zw, half, last)
    out.append(report_interval(s, "cov(Z^W_0.5, Z^W_1) vs 1/24 +- 3 SE", c,
                               1 / 24 - 3 * se, 1 / 24 + 3 * se, reps, seed))
    # Independent confirmation of the derived cross-covariance s^2/2: trapezoid
    # scheme, separate streams.
    res_t = replicate_map(_pair_rep, seed, 9, reps, cfg.workers, points=points, scheme="trapezoid")
    bt = np.array([r[0] for r in res_t])
    yt = np.array([r[1] for r in res_t])
    cross_t = np.column_stack([-bt[:, half], yt[:, last] - bt[:, last]])
    ct = statlab.empirical_cov(cross_t, 0, 1)
    set_ = statlab.cov_standard_error(cross_t, 0, 1)
    out.append(report_interval(s, "confirm cov(Z^C_0.5, Z^W_1) = 0.125 (trapezoid MC) +- 3 SE", ct,
                               0.125 - 3 * set_, 0.125 + 3 * set_, reps, seed))
    cross = np.column_stack([zc[:, half], zw[:, last]])
    cc = statlab.empirical_cov(cross, 0, 1)
    sec = statlab.cov_standard_error(cross, 0, 1)
    out.append(report_interval(s, "cov(Z^C_0.5, Z^W_1) vs 0.125 +- 3 SE", cc,
                               0.125 - 3 * sec, 0.125 + 3 * sec, reps, seed))
    cg = np.array([0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
    tab = np.array(replicate_map(_clocked_rep, seed, 10, reps, cfg.workers, grid=cg))[:, 1:]
    worst = 0.0
    for i in range(5):
        for j in range(i, 5):
            est = statlab.empirical_cov(tab, i, j)
            se_ij = statlab.cov_standard_error(tab, i, j)
            worst = max(worst, abs(est - gausslim.limit_cov(cg[i + 1], cg[j + 1])) / se_ij)
    out.append(report_upper(s, "max |cov(clocked BM) - min(s,t)^3/3| / SE", worst, 3.0, reps, seed))
    gap = float(np.max(np.abs(gausslim.trapezoid_zw_cov(g) - gausslim.zw_cov_matrix(g))))
    out.append(report_upper(s, "max |trapezoid Z^W cov - exact| (bound 5h)", gap, 5.0 / (points - 1), 0, seed))
    return out


def suite_w_clt(cfg: ExperimentConfig) -> list[TestReport]:
    reps = _get(cfg, "reps", 5000)
    rate = _get(cfg, "rate", 1.0)
    times = _get(cfg, "times", [math.exp(6.0), math.exp(9.0), math.exp(12.0)])
    res = replicate_map(_w_at_times_rep, cfg.seed, 11, reps, cfg.workers, rate=rate, times=times)
    w = np.array([r[0] for r in res])
    out = []
    prev = None
    for k, t in enumerate(times):
        lt = math.log(t)
        z = (w[:, k] - lt**2 / (2 * rate)) / lt**1.5
        d = statlab.ks_one_sample(z, lambda x: statlab.reference_cdf("normal", (0.0, 1 / (3 * rate**2)), x))
        if prev is None:
            out.append(report_upper("w_clt", f"KS to N(0, 1/3) at log t = {lt:g}", d, 1.0, reps, cfg.seed))
        else:
            out.append(report_upper("w_clt", f"KS to N(0, 1/3) at log t = {lt:g} (< previous)", d,
                                    prev, reps, cfg.seed, strict=True))
        prev = d
    var_last = float(np.var(z, ddof=1))
    out.append(report_interval("w_clt", f"Var at log t = {math.log(times[-1]):g}", var_last,
                               0.25, 0.45, reps, cfg.seed))
    return out


def suite_slln(cfg: ExperimentConfig) -> list[TestReport]:
    rate = _get(cfg, "rate", 1.0)
    t_long, t_mean = _get(cfg, "times", [math.exp(14.0), math.exp(12.0)])
    reps = _get(cfg, "reps", 1000)
    s, seed = "slln", cfg.seed
    path = pathsim.simulate_path(stream_for(seed, 12, 0), rate, t_long)
    c_ratio, w_ratio = scaling.slln_ratios(path, pathsim.build_trace(path), t_long, rate)
    oracle = statlab.expected_record_count(t_mean, rate) - math.log(t_mean)
    res = replicate_map(_w_at_times_rep, seed, 13, reps, cfg.workers, rate=rate, times=[t_mean])
    dev = np.array([float(r[1][0]) for r in res]) - math.log(t_mean)
    return [
        report_interval(s, "C_t / log t (single path)", c_ratio, 0.6, 1.4, 1, seed),
        report_interval(s, "2 rate W_t / (log t)^2 (single path)", w_ratio, 0.4, 1.8, 1, seed),
        report_interval(s, "oracle E H_{N_t} - log t vs Euler gamma", oracle,
                        statlab.EULER_GAMMA - 0.01, statlab.EULER_GAMMA + 0.01, 0, seed),
        report_interval(s, "mean(C_t - log t)", dev.mean(), oracle - 0.3, oracle + 0.3, reps, seed),
    ]


def suite_perpetuity(cfg: ExperimentConfig) -> list[TestReport]:
    reps = _get(cfg, "reps", 1000)
    length = int(_get(cfg, "scales", [50])[0])
    samples = int(cfg.extra.get("samples", 100_000))
    burn_in = int(cfg.extra.get("burn_in", 100))
    s, seed = "perpetuity", cfg.seed
    worst = 0.0
    for i in range(reps):
        r = recordsim.simulate_record_values(stream_for(seed, 14, i), 1.0, length)
        v = exp_from_uniform(stream_for(seed, 15, i).uniforms(length - 1))
        a = recordsim.perpetuity_direct(r, v)
        b = recordsim.perpetuity_recursive(r, v)
        worst = max(worst, abs(a - b) / abs(a))
    y = recordsim.stationary_perpetuity(stream_for(seed, 16, 0), samples, burn_in)
    se = y.std(ddof=1) / math.sqrt(samples)
    # Independent estimate: time average along one long chain, batch-means SE.
    chain_len, batches = 1_000_000, 100
    st = stream_for(seed, 17, 0)
    v = exp_from_uniform(st.uniforms(chain_len))
    u = st.uniforms(chain_len)
    chain = np.empty(chain_len)
    acc = 0.0
    for k in range(chain_len):
        acc = (acc + v[k]) * u[k]
        chain[k] = acc
    chain = chain[burn_in:]
    bm = chain[: (chain.size // batches) * batches].reshape(batches, -1).mean(axis=1)
    se_chain = bm.std(ddof=1) / math.sqrt(batches)
    return [
        report_upper(s, f"max rel |direct - recursion| (length {length})", worst, 1e-9, reps, seed),
        report_interval(s, "chain time-average of Y vs 1 +- 3 SE", chain.mean(),
                        1 - 3 * se_chain, 1 + 3 * se_chain, chain.size, seed),
        report_interval(s, "mean of stationary Y vs 1 +- 3 SE", y.mean(), 1 - 3 * se, 1 + 3 * se, samples, seed),
    ]


def suite_ranks(cfg: ExperimentConfig) -> list[TestReport]:
    reps = _get(cfg, "reps", 10_000)
    rate = _get(cfg, "rate", 1.0)
    t_rank, t_max = _get(cfg, "times", [200.0, math.exp(8.0)])
    n_iid, n_rec = (int(v) for v in _get(cfg, "scales", [200, 400]))
    s, seed = "ranks", cfg.seed
    ren = replicate_map(_renewal_rank_rep, seed, 18, reps, cfg.workers, rate=rate, t=t_rank)
    iid = replicate_map(_iid_rank_rep, seed, 19, reps, cfg.workers, n=n_iid)
    mx = replicate_map(_max_rep, seed, 20, reps, cfg.workers, rate=rate, t=t_max)
    rv = np.array(replicate_map(_record_value_rep, seed, 21, reps, cfg.workers, n=n_rec))
    gum = np.array([m[0] for m in mx])
    gum = gum[~np.isnan(gum)]
    return [
        report_upper(s, f"KS renewal rank at t={t_rank:g} vs x - x log x",
                     statlab.ks_one_sample(ren, lambda x: statlab.reference_cdf("rank_limit", (), x)),
                     0.03, reps, seed),
        report_upper(s, f"KS iid rank at n={n_iid} vs Unif(0,1)",
                     statlab.ks_one_sample(iid, lambda x: statlab.reference_cdf("uniform", (), x)),
                     0.02, reps, seed),
        report_upper(s, "count M_{N_t} != R_{A_{N_t}}", sum(not m[1] for m in mx), 0, reps, seed),
        report_upper(s, f"KS M_N - log N at log t={math.log(t_max):g} vs Gumbel",
                     statlab.ks_one_sample(gum, lambda x: statlab.reference_cdf("gumbel", (), x)),
                     0.05, gum.size, seed),
        report_upper(s, f"KS (R_n - n)/sqrt(n) at n={n_rec} vs N(0,1)",
                     statlab.ks_one_sample((rv - n_rec) / math.sqrt(n_rec),
                                           lambda x: statlab.reference_cdf("normal", (0.0, 1.0), x)),
                     0.03, reps, seed),
    ]


SUITES: dict[str, Callable[[ExperimentConfig], list[TestReport]]] = {
    "pathwise": suite_pathwise,
    "indicators": suite_indicators,
    "stirling": suite_stirling,
    "record_times": suite_record_times,
    "limit_cov": suite_limit_cov,
    "w_clt": suite_w_clt,
    "slln": suite_slln,
    "perpetuity": suite_perpetuity,
    "ranks": suite_ranks,
}


def run_suite(cfg: ExperimentConfig) -> list[TestReport]:
    try:
        fn = SUITES[cfg.suite]
    except KeyError:
        raise InvalidParameterError(f"unknown suite {cfg.suite!r}; choose from {sorted(SUITES)}") from None
    return fn(cfg)


def with_suite(cfg: ExperimentConfig, suite: str) -> ExperimentConfig:
    return replace(cfg, suite=suite)
