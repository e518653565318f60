import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from discrisk.errors import DomainError
from discrisk.smoothing import (
    SmoothingSpec,
    binomial2_log_argument,
    coefficients,
    expected_weight,
    log_tail,
    optimal_binomial_x0,
    optimal_poisson_beta,
    tail_probability,
)


class TestSpec:
    def test_validation(self):
        with pytest.raises(DomainError):
            SmoothingSpec.poisson(0.0)
        with pytest.raises(DomainError):
            SmoothingSpec.binomial(-1, 0.5)
        with pytest.raises(DomainError):
            SmoothingSpec.binomial(3, 1.0)
        with pytest.raises(DomainError):
            SmoothingSpec("geometric")

    def test_named_binomials(self):
        assert SmoothingSpec.binomial2(4, 8.0).p == pytest.approx(0.2)
        assert SmoothingSpec.euler(4, 3.0).p == pytest.approx(0.25)

    def test_json(self):
        assert SmoothingSpec.poisson(1.5).to_json() == {"kind": "poisson", "beta": 1.5}
        assert SmoothingSpec.none().to_json() == {"kind": "none"}


class TestTails:
    @pytest.mark.parametrize("beta", [0.3, 2.0, 25.0])
    def test_poisson_tail_matches_scipy(self, beta):
        spec = SmoothingSpec.poisson(beta)
        lt = log_tail(spec, 40)
        for i in range(41):
            ref = stats.poisson.sf(i - 1, beta)
            np.testing.assert_allclose(math.exp(lt[i]), ref, rtol=1e-10, atol=1e-300)
            np.testing.assert_allclose(tail_probability(spec, i), ref, rtol=1e-12, atol=1e-300)

    def test_binomial_tail_matches_scipy(self):
        spec = SmoothingSpec.binomial(7, 0.3)
        lt = log_tail(spec, 10)
        for i in range(11):
            ref = stats.binom.sf(i - 1, 7, 0.3)
            assert tail_probability(spec, i) == pytest.approx(ref, rel=1e-12, abs=0)
            assert math.exp(lt[i]) == pytest.approx(ref, rel=1e-12, abs=0)
        assert np.isneginf(lt[8:]).all()

    def test_no_smoothing(self):
        np.testing.assert_array_equal(log_tail(SmoothingSpec.none(), 5), np.zeros(6))
        assert tail_probability(SmoothingSpec.none(), 9) == 1.0


class TestCoefficients:
    def test_undamped(self):
        seq = coefficients(SmoothingSpec.none(), 0.5, 4)
        np.testing.assert_allclose(seq.values(), [1, -1, 0.75, -0.5, 0.3125])

    def test_binomial_truncates(self):
        seq = coefficients(SmoothingSpec.binomial(2, 0.5), 3.0, 4)
        np.testing.assert_allclose(seq.values(), [1.0, -2 * 3 * 0.75, 3 * 9 * 0.25, 0.0, 0.0])

    def test_large_index_stays_finite_in_log_space(self):
        seq = coefficients(SmoothingSpec.poisson(3.0), 20.0, 2000)
        assert np.all(np.isfinite(seq.log_abs))
        assert seq.log_abs[-1] < seq.log_abs[200]


class TestExpectedWeight:
    @pytest.mark.parametrize("spec", [SmoothingSpec.poisson(1.7), SmoothingSpec.binomial(6, 0.35)])
    @pytest.mark.parametrize("lam", [1.0, 2.5, 9.0])
    def test_matches_direct_sum(self, spec, lam):
        l = np.arange(120)
        if spec.kind == "poisson":
            pmf = stats.poisson.pmf(l, spec.beta)
        else:
            pmf = stats.binom.pmf(l, spec.x0, spec.p)
        direct = np.sum(pmf * (l + 1) * lam**l.astype(float))
        assert expected_weight(spec, lam) == pytest.approx(direct, rel=1e-10)

    def test_none_rejected(self):
        with pytest.raises(DomainError):
            expected_weight(SmoothingSpec.none(), 2.0)


class TestOptimalParameters:
    def test_poisson_beta(self):
        assert optimal_poisson_beta(1, math.exp(4)) == 1.0
        assert optimal_poisson_beta(9, 100000) == pytest.approx(math.log(1e5 / 17) / 36, rel=1e-15)

    def test_poisson_domain(self):
        with pytest.raises(DomainError):
            optimal_poisson_beta(0.5, 100)
        with pytest.raises(DomainError):
            optimal_poisson_beta(9, 17)

    def test_binomial_x0(self):
        assert optimal_binomial_x0(9, 100000) == 1
        assert optimal_binomial_x0(1, 10**6) == 2

    def test_binomial_clamped_to_zero(self):
        # log argument below 1 gives a negative interior value
        assert binomial2_log_argument(2, 3) < 1
        assert optimal_binomial_x0(2, 3) == 0

    def test_binomial_x0_grows_with_n(self):
        xs = [optimal_binomial_x0(4.0, 10**e) for e in range(2, 12)]
        assert xs == sorted(xs)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.05, max_value=30), st.integers(min_value=0, max_value=60))
def test_tail_routes_agree(beta, i):
    spec = SmoothingSpec.poisson(beta)
    direct = tail_probability(spec, i)
    via_log = math.exp(log_tail(spec, i)[i])
    assert via_log == pytest.approx(direct, rel=1e-9, abs=1e-300)
