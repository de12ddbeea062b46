"""Acceptance criteria, each run at its stated size and tolerance.

Every test appends one PASS/FAIL line to the "acceptance criteria" section
of the terminal summary.
"""

import math
import time

import pytest

from conftest import ACCEPTANCE_LINES
from poisrec.cli import render_reports
from poisrec.suites import SUITES, ExperimentConfig, run_suite

SEED = 1


def run(suite, **kw):
    return run_suite(ExperimentConfig(suite=suite, seed=SEED, **kw))


def check(label, reports, extra=""):
    failed = [r for r in reports if not r.passed]
    summary = "; ".join(f"{r.statistic} = {r.value:.6g}" for r in reports[:6])
    status = "PASS" if not failed else "FAIL"
    ACCEPTANCE_LINES.append(f"{status} {label}: {summary}{extra}")
    assert not failed, "\n".join(f"{r.statistic}: {r.value!r} vs {r.threshold}" for r in failed)


def test_criterion_1_pathwise_identities():
    t0 = time.perf_counter()
    reports = run("pathwise")
    elapsed = time.perf_counter() - t0
    assert reports[0].n_samples == 1000 * 20
    check("1 pathwise identities", reports, f"; runtime {elapsed:.1f} s")
    assert elapsed < 60.0


def test_criterion_2_record_indicators():
    reports = run("indicators")
    assert len(reports) == 10 and reports[0].n_samples == 100_000
    check("2 record-indicator law", reports)


def test_criterion_3_exact_record_count_law():
    reports = run("stirling")
    tv = [r for r in reports if r.statistic.startswith("TV")]
    assert len(tv) == 1 and tv[0].n_samples == 200_000 and tv[0].threshold == 0.01
    enum = [r for r in reports if "enumeration" in r.statistic]
    assert len(enum) == 7
    check("3 exact A_n law", tv + enum)


def test_criterion_4_record_time_samplers():
    reports = run("record_times")
    assert len(reports) == 6
    assert all(r.threshold == pytest.approx(1.63 * math.sqrt(2 / 1e4)) for r in reports)
    check("4 record-time sampler equivalence", reports)


def test_criterion_5_limit_covariance():
    reports = run("limit_cov")
    assert reports[0].n_samples == 10_000
    check("5 limit-process covariance", reports)


def test_criterion_6_functional_clt_trend():
    reports = run("w_clt")
    ks = [r.value for r in reports[:3]]
    assert reports[0].n_samples == 5000
    check("6 CLT trend for W", reports, f"; KS sequence {[round(v, 4) for v in ks]}")
    assert ks[0] > ks[1] > ks[2]


def test_criterion_7a_single_path_strong_law():
    reports = run("slln")[:2]
    check("7a strong law, single path to e^14", reports)


def test_criterion_7b_mean_centering():
    reports = run("slln")[2:]
    assert reports[0].value == pytest.approx(0.5772156649, abs=0.01)
    check("7b mean(C_t - log t) vs exact oracle", reports)


def test_criterion_8_perpetuity():
    reports = run("perpetuity")
    assert reports[0].n_samples == 1000 and reports[2].n_samples == 100_000
    check("8 perpetuity", reports)


def test_criterion_9_rank_and_extreme_laws():
    reports = run("ranks")
    assert [r.threshold for r in reports] == [0.03, 0.02, 0, 0.05, 0.03]
    check("9 ranks, Gumbel and record-value CLT", reports)


# Small but non-trivial sizes; the property under test is determinism.
_SMALL = {
    "pathwise": dict(reps=60),
    "indicators": dict(reps=2000),
    "stirling": dict(reps=2000),
    "record_times": dict(reps=200),
    "limit_cov": dict(reps=300, grid=65),
    "w_clt": dict(reps=100, times=[math.exp(3), math.exp(4), math.exp(5)]),
    "slln": dict(reps=100, times=[math.exp(8), math.exp(6)]),
    "perpetuity": dict(reps=50, extra={"samples": 2000}),
    "ranks": dict(reps=300, times=[50.0, math.exp(5)]),
}


def test_criterion_10_reproducible_across_workers():
    assert set(_SMALL) == set(SUITES)
    mismatched = []
    for suite, kw in _SMALL.items():
        texts = set()
        for workers in (1, 2, 3, 1):
            reports = run_suite(ExperimentConfig(suite=suite, seed=SEED, workers=workers, **kw))
            texts.add(render_reports(reports, "json") + render_reports(reports, "csv"))
        if len(texts) != 1:
            mismatched.append(suite)
    status = "PASS" if not mismatched else "FAIL"
    ACCEPTANCE_LINES.append(f"{status} 10 byte-identical reports for workers 1, 2, 3 "
                            f"across {len(_SMALL)} suites; mismatched: {mismatched or 'none'}")
    assert not mismatched
