import numpy as np
import pytest
from scipy import stats as sps

from decaywatch.stats import (
    InsufficientDataError,
    ks_critical,
    ks_exponential,
    pearson_chi_square,
    pooling_groups,
    survival_band,
    two_sample_chi_square,
)


def test_ks_matches_scipy():
    rng = np.random.default_rng(0)
    for rate in (0.5, 2.0, 7.0):
        x = rng.exponential(1 / rate, 5000)
        ref = sps.kstest(x, "expon", args=(0, 1 / rate)).statistic
        assert ks_exponential(x, rate) == pytest.approx(ref, abs=1e-12)


def test_ks_critical_value():
    assert ks_critical(10_000) == pytest.approx(0.0163)


def test_pearson_matches_scipy_without_pooling():
    obs = np.array([120, 480, 400])
    p = np.array([0.13, 0.47, 0.40])
    chi2, dof, pval = pearson_chi_square(obs, p)
    ref = sps.chisquare(obs, obs.sum() * p)
    assert chi2 == pytest.approx(ref.statistic)
    assert pval == pytest.approx(ref.pvalue)
    assert dof == 2


def test_pearson_perfect_match_is_zero():
    chi2, dof, _ = pearson_chi_square([250, 500, 250], [0.25, 0.5, 0.25])
    assert chi2 == 0.0
    assert dof == 2


def test_pooling_into_nearest_retained_bin():
    assert pooling_groups(np.array([100.0, 50.0, 3.0, 1.0])) == [[0], [1, 2, 3]]
    assert pooling_groups(np.array([1.0, 50.0, 3.0, 60.0])) == [[0, 1, 2], [3]]
    with pytest.raises(InsufficientDataError):
        pooling_groups(np.array([1.0, 2.0]))


def test_pearson_pooled_dof():
    probs = [0.9, 0.0995, 0.0005]
    chi2, dof, _ = pearson_chi_square([900, 99, 1], probs)
    assert dof == 1


def test_two_sample_matches_contingency():
    a = np.array([1300, 4700, 4000])
    b = np.array([1400, 4600, 4000])
    chi2, dof, p = two_sample_chi_square(a, b)
    ref = sps.chi2_contingency(np.vstack([a, b]), correction=False)
    assert chi2 == pytest.approx(ref.statistic)
    assert p == pytest.approx(ref.pvalue)
    assert dof == ref.dof


def test_two_sample_single_bin_is_insufficient():
    with pytest.raises(InsufficientDataError):
        two_sample_chi_square([100, 0, 0], [100, 0, 0])


def test_survival_band():
    rng = np.random.default_rng(1)
    x = rng.exponential(0.5, 10_000)
    emp, exp, half = survival_band(x, 2.0, 0.5)
    assert exp == pytest.approx(np.exp(-1.0))
    assert abs(emp - exp) <= half
