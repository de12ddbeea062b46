import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from poisrec.errors import InvalidInputError, InvalidParameterError
from poisrec.randomness import make_stream, normals
from poisrec.statlab import (
    EULER_GAMMA,
    LAWS,
    Pmf,
    TestReport,
    cov_standard_error,
    empirical_cov,
    enumerate_record_count_pmf,
    expected_record_count,
    harmonic,
    ks_one_sample,
    ks_threshold_one_sample,
    ks_threshold_two_sample,
    ks_two_sample,
    rank_of_last,
    record_count_pmf,
    reference_cdf,
    report_interval,
    report_upper,
    sup_abs_bm_cdf,
    total_variation,
)


def uniform_cdf(x):
    return reference_cdf("uniform", (), x)


@pytest.mark.parametrize("sample,expected", [([0.5], 0.5), ([0.25, 0.75], 0.25), ([0.1, 0.1], 0.9)])
def test_ks_one_sample_hand(sample, expected):
    assert ks_one_sample(sample, uniform_cdf) == pytest.approx(expected)


def test_ks_one_sample_with_atom():
    # Sample equal to the atom of a point mass at 1: distance 0 with left limits.
    cdf = lambda x: np.where(np.asarray(x) >= 1.0, 1.0, 0.0)  # noqa: E731
    left = lambda x: np.where(np.asarray(x) > 1.0, 1.0, 0.0)  # noqa: E731
    assert ks_one_sample([1.0, 1.0], cdf, left) == 0.0
    assert ks_one_sample([1.0, 1.0], cdf) == 1.0  # without left limits the jump is missed


def test_ks_two_sample_hand():
    assert ks_two_sample([1, 2, 3], [3, 2, 1]) == 0.0
    assert ks_two_sample([1, 2], [3, 4]) == 1.0
    assert ks_two_sample([1, 2], [2, 3]) == 0.5


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=40))
def test_ks_invariant_under_monotone_map(xs):
    x = np.array(xs)
    a = ks_one_sample(x, lambda v: reference_cdf("normal", (0.0, 4.0), v))
    b = ks_one_sample(np.exp(x / 10), lambda v: reference_cdf("normal", (0.0, 4.0), 10 * np.log(v)))
    assert a == pytest.approx(b, abs=1e-12)
    assert 0.0 <= a <= 1.0


def test_ks_rejects_bad_samples():
    with pytest.raises(InvalidInputError):
        ks_one_sample([], uniform_cdf)
    with pytest.raises(InvalidInputError):
        ks_two_sample([math.nan], [1.0])


def test_ks_thresholds():
    assert ks_threshold_one_sample(10_000) == pytest.approx(0.0163)
    assert ks_threshold_two_sample(5000) == pytest.approx(1.63 * math.sqrt(2 / 5000))


def test_empirical_cov_cases():
    assert empirical_cov([[1.0, 5.0], [1.0, 5.0], [1.0, 5.0]], 0, 1) == 0.0
    assert empirical_cov([[0.0, 0.0], [2.0, 2.0]], 0, 1) == 2.0
    table = np.stack([normals(make_stream(60, 0), 50_000), normals(make_stream(60, 1), 50_000)], axis=1)
    assert abs(empirical_cov(table, 0, 1)) < 4 * cov_standard_error(table, 0, 1)
    assert cov_standard_error(table, 0, 0) == pytest.approx(math.sqrt(2 / 50_000), rel=0.05)
    with pytest.raises(InvalidInputError):
        empirical_cov([[1.0, 2.0]], 0, 1)


@pytest.mark.parametrize("n,expected", [
    (1, {1: Fraction(1)}),
    (2, {1: Fraction(1, 2), 2: Fraction(1, 2)}),
    (3, {1: Fraction(1, 3), 2: Fraction(1, 2), 3: Fraction(1, 6)}),
])
def test_record_count_pmf_small(n, expected):
    assert record_count_pmf(n).as_dict() == expected


@pytest.mark.parametrize("n", range(1, 8))
def test_record_count_pmf_matches_enumeration(n):
    assert record_count_pmf(n) == enumerate_record_count_pmf(n)


def test_record_count_pmf_mean_is_harmonic():
    pmf = record_count_pmf(30)
    mean = sum(k * p for k, p in pmf.as_dict().items())
    assert mean == sum(Fraction(1, k) for k in range(1, 31))
    assert pmf[0] == 0 and pmf[31] == 0


def test_pmf_and_bad_n():
    with pytest.raises(InvalidParameterError):
        record_count_pmf(0)
    with pytest.raises(InvalidInputError):
        Pmf((1, 2), (Fraction(1, 2),))


def test_total_variation():
    pmf = record_count_pmf(2)
    assert total_variation(pmf, [1, 2]) == 0.0
    assert total_variation(pmf, [1, 1]) == 0.5
    assert total_variation(pmf, [3, 3]) == 1.0


def test_harmonic_and_expected_count():
    assert harmonic([0, 1, 4]) == pytest.approx([0.0, 1.0, 25 / 12])
    assert expected_record_count(0.0) == 0.0
    # Independent check: direct Poisson-weighted sum of H_k.
    mu = 7.5
    direct = sum(math.exp(-mu + k * math.log(mu) - math.lgamma(k + 1)) * sum(1 / j for j in range(1, k + 1))
                 for k in range(1, 200))
    assert expected_record_count(2.5, rate=3.0) == pytest.approx(direct, rel=1e-12)
    t = math.exp(12)
    assert expected_record_count(t) - math.log(t) == pytest.approx(EULER_GAMMA, abs=1e-4)


def test_rank_limit_anchor():
    assert reference_cdf("rank_limit", (), 0.5) == pytest.approx(0.5 + 0.5 * math.log(2), abs=1e-15)
    integral, _ = quad(lambda x: -math.log(x), 0, 0.5)
    assert reference_cdf("rank_limit", (), 0.5) == pytest.approx(integral, abs=1e-10)


def test_age_atom():
    t = 2.0
    at = reference_cdf("age_truncated_exp", (1.0, t), t)
    before = reference_cdf("age_truncated_exp", (1.0, t), t, left=True)
    assert at == 1.0
    assert at - before == pytest.approx(math.exp(-2.0))
    assert reference_cdf("age_truncated_exp", (1.0, t), 1.0) == pytest.approx(1 - math.exp(-1))


@pytest.mark.parametrize("law,params", [("normal", (1.0, 2.0)), ("gumbel", ()), ("sup_abs_bm", ()),
                                        ("rank_limit", ()), ("uniform", ()),
                                        ("age_truncated_exp", (0.5, 3.0))])
def test_reference_cdfs_are_cdfs(law, params):
    x = np.linspace(-40, 40, 8001)
    f = reference_cdf(law, params, x)
    assert np.all(np.diff(f) >= -1e-15)
    assert f[0] == pytest.approx(0.0, abs=1e-12)
    assert f[-1] == pytest.approx(1.0, abs=1e-12)


def test_reference_cdf_scalar_and_unknown():
    assert isinstance(reference_cdf("gumbel", (), 0.0), float)
    assert reference_cdf("gumbel", (), 0.0) == pytest.approx(math.exp(-1))
    assert set(LAWS) >= {"normal", "gumbel"}
    with pytest.raises(InvalidParameterError):
        reference_cdf("cauchy", (), 0.0)
    with pytest.raises(InvalidParameterError):
        reference_cdf("normal", (0.0, 0.0), 0.0)


def test_sup_abs_bm_series_agree():
    x = np.linspace(0.2, 4.0, 200)
    theta = sup_abs_bm_cdf(x, "theta")
    refl = sup_abs_bm_cdf(x, "reflection")
    assert np.max(np.abs(theta - refl)) < 1e-11
    assert sup_abs_bm_cdf([0.0, -1.0]).tolist() == [0.0, 0.0]
    with pytest.raises(InvalidParameterError):
        sup_abs_bm_cdf(1.0, "bogus")


def test_sup_abs_bm_monte_carlo():
    # Fine random walk; the discrete maximum is slightly low, so allow a small bias.
    reps, steps = 4000, 4000
    z = normals(make_stream(61, 0), reps * steps).reshape(reps, steps) / math.sqrt(steps)
    m = np.max(np.abs(np.cumsum(z, axis=1)), axis=1)
    d = ks_one_sample(m, lambda v: reference_cdf("sup_abs_bm", (), v))
    assert d < 1.63 / math.sqrt(reps) + 0.03


def test_gumbel_for_max_of_exponentials():
    n, reps = 500, 4000
    s = make_stream(62, 0)
    m = np.array([np.max(-np.log(s.uniforms(n))) for _ in range(reps)]) - math.log(n)
    assert ks_one_sample(m, lambda v: reference_cdf("gumbel", (), v)) < 1.63 / math.sqrt(reps) + 0.005


def test_rank_of_last():
    assert rank_of_last([1.0, 2.0, 3.0]) == 1
    assert rank_of_last([3.0, 2.0, 1.0]) == 3
    assert rank_of_last([2.0, 2.0]) == 2
    with pytest.raises(InvalidInputError):
        rank_of_last([])


def test_reports():
    r = report_upper("s", "d", 0.1, 0.1, 10, 1)
    assert r.passed and not report_upper("s", "d", 0.1, 0.1, 10, 1, strict=True).passed
    row = report_interval("s", "v", 0.3, 0.25, 0.45, 5, 2).as_row()
    assert list(row) == ["suite", "statistic", "value", "threshold", "pass", "n_samples", "seed"]
    assert row["threshold"] == [0.25, 0.45] and row["pass"] is True
    assert isinstance(r, TestReport)
