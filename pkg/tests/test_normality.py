import numpy as np
import pytest
from scipy import stats

from pcra.normality import shapiro_wilk


@pytest.mark.parametrize("n", [3, 4, 5, 8, 11, 12, 20, 50, 100, 500, 2000, 5000])
def test_matches_reference_implementation(n):
    rng = np.random.default_rng(n)
    for x in (rng.normal(size=n), rng.exponential(size=n), rng.uniform(size=n)):
        ours = shapiro_wilk(x)
        ref = stats.shapiro(x)
        assert ours.applicable
        assert ours.statistic == pytest.approx(ref.statistic, abs=1e-8)
        assert ours.pvalue == pytest.approx(ref.pvalue, rel=1e-6, abs=1e-12)


def test_tiny_pvalue_does_not_underflow():
    x = np.random.default_rng(0).exponential(size=2000)
    r = shapiro_wilk(x)
    assert 0.0 < r.pvalue < 1e-20
    assert r.pvalue == pytest.approx(stats.shapiro(x).pvalue, rel=1e-6)


@pytest.mark.parametrize("x", [[1.0, 2.0], [], np.zeros(10), np.arange(5001.0)])
def test_not_applicable(x):
    r = shapiro_wilk(x)
    assert not r.applicable
    assert not r.rejects(0.05)


def test_statistic_range():
    rng = np.random.default_rng(3)
    for _ in range(50):
        r = shapiro_wilk(rng.standard_t(2, size=rng.integers(3, 300)))
        assert 0.0 < r.statistic <= 1.0
        assert 0.0 <= r.pvalue <= 1.0


def test_order_invariant():
    x = np.random.default_rng(4).normal(size=64)
    assert shapiro_wilk(x) == shapiro_wilk(x[::-1])
