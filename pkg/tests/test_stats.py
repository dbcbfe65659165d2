import numpy as np
import pytest
from scipy import special, stats as sps

from deepcmac.exceptions import ZeroVarianceError
from deepcmac.stats import paired_t_test, regularized_beta, t_cdf, t_two_sided_p


def test_paired_t_reference_instance():
    # scipy.stats.ttest_rel on these differences
    t, p = paired_t_test([0.5, 0.7, 0.3, 0.6, 0.4], [0.0] * 5)
    assert t == pytest.approx(7.0710678118654755, rel=1e-12)
    assert p == pytest.approx(0.0021106458450912712, rel=1e-9)


def test_paired_t_symmetric_differences():
    t, p = paired_t_test([1.0, -1.0, 2.0, -2.0], [0.0] * 4)
    assert t == 0.0
    assert p == pytest.approx(1.0, abs=1e-15)


def test_paired_t_zero_variance():
    with pytest.raises(ZeroVarianceError):
        paired_t_test([1, 2, 3, 4], [0, 1, 2, 3])


def test_paired_t_bad_shapes():
    with pytest.raises(ValueError):
        paired_t_test([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        paired_t_test([1], [2])


def test_paired_t_against_scipy():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(2, 30))
        a = rng.normal(size=n)
        b = a + rng.normal(rng.normal(), rng.uniform(0.1, 3), n)
        t, p = paired_t_test(a, b)
        ref = sps.ttest_rel(a, b)
        assert t == pytest.approx(ref.statistic, rel=1e-9, abs=1e-12)
        assert p == pytest.approx(ref.pvalue, rel=1e-6, abs=1e-300)


def test_regularized_beta_against_scipy():
    rng = np.random.default_rng(1)
    for _ in range(200):
        a, b, x = rng.uniform(0.1, 40), rng.uniform(0.1, 40), rng.uniform()
        assert regularized_beta(a, b, x) == pytest.approx(special.betainc(a, b, x),
                                                          rel=1e-9, abs=1e-14)
    assert regularized_beta(2, 3, 0.0) == 0.0
    assert regularized_beta(2, 3, 1.0) == 1.0


def test_t_distribution_against_scipy():
    for df in (1, 2, 4, 11, 100):
        for t in (-8.0, -1.3, 0.0, 0.4, 2.5, 30.0):
            assert t_cdf(t, df) == pytest.approx(sps.t.cdf(t, df), rel=1e-9, abs=1e-15)
            assert t_two_sided_p(t, df) == pytest.approx(2 * sps.t.sf(abs(t), df),
                                                         rel=1e-9, abs=1e-15)
