"""Covariance tests built on a first-principles moment oracle.

The oracle expands the field over the basis (a_p cos, b_p sin) with the
exact second-moment matrix E[a_p a_q] = E[b_p b_q] = delta_pq / 2,
E[a_p b_q] = 0, and contracts it with a literal quadruple loop. Everything
fast must match it.
"""

import math
import time

import numpy as np
import pytest

from eulermax.covariance import (
    CorrelationFunction,
    CovarianceSpec,
    REGIME_FAR,
    REGIME_LOG_WINDOW,
    REGIME_NEAR,
    asymptotic_covariance,
    check_monotone_nonneg,
    cosine_integral_segment,
    covariance_lattice,
    exact_covariance,
    fit_far_decay_constant,
)
from eulermax.errors import ParameterError
from eulermax.primes import prime_reciprocal_sum, weighted_log_sums

CI_10_MINUS_CI_1 = -0.3828603559054235  # oracle: cosine-integral tables


def _weights(spec):
    sl = spec.table.range_slice(spec.P, spec.Q)
    p = spec.table.primes[sl].astype(float)
    lp = spec.table.log_p[sl]
    w = (1.0 - lp / math.log(spec.T)) / np.sqrt(p)
    return lp, w


def _cov_oracle_quadruple_loop(spec, h1, h2):
    # Literal expansion: X(h) = sum_p w_p (a_p cos(h log p) + b_p sin(h log p)).
    lp, w = _weights(spec)
    n = lp.size
    total = 0.0
    for i in range(n):
        for j in range(n):
            for ci in range(2):  # 0 -> a (cos), 1 -> b (sin)
                for cj in range(2):
                    second_moment = 0.5 if (i == j and ci == cj) else 0.0
                    if second_moment == 0.0:
                        continue
                    fi = math.cos(h1 * lp[i]) if ci == 0 else math.sin(h1 * lp[i])
                    fj = math.cos(h2 * lp[j]) if cj == 0 else math.sin(h2 * lp[j])
                    total += w[i] * w[j] * fi * fj * second_moment
    return total


def _cov_oracle_quadratic_form(spec, h1, h2):
    # Vectorized contraction of the same moment matrix.
    lp, w = _weights(spec)
    v1 = np.concatenate([w * np.cos(h1 * lp), w * np.sin(h1 * lp)])
    v2 = np.concatenate([w * np.cos(h2 * lp), w * np.sin(h2 * lp)])
    return 0.5 * float(v1 @ v2)


def test_quadruple_loop_oracle_tiny(table_1e4):
    spec = CovarianceSpec(table=table_1e4, P=2, Q=10, T=10)
    rng = np.random.default_rng(42)
    for _ in range(5):
        h1, h2 = rng.uniform(0.0, 2.0 * np.pi, 2)
        slow = _cov_oracle_quadruple_loop(spec, h1, h2)
        fast = _cov_oracle_quadratic_form(spec, h1, h2)
        assert slow == pytest.approx(fast, abs=1e-14)
        assert exact_covariance(spec, h1 - h2) == pytest.approx(slow, abs=1e-12)


def test_quadratic_form_oracle_1e4(table_1e4):
    spec = CovarianceSpec(table=table_1e4, P=2, Q=10_000, T=10_000)
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    for _ in range(20):
        h1, h2 = rng.uniform(0.0, 2.0 * np.pi, 2)
        assert abs(
            exact_covariance(spec, h1 - h2) - _cov_oracle_quadratic_form(spec, h1, h2)
        ) <= 1e-10
    assert time.perf_counter() - start < 1.0


def test_variance_is_plain_weight_sum(table_1e4):
    spec = CovarianceSpec(table=table_1e4, P=2, Q=5_000, T=10_000)
    lp, w = _weights(spec)
    assert exact_covariance(spec, 0.0) == pytest.approx(
        0.5 * math.fsum((w * w).tolist()), abs=1e-14
    )


def test_four_prime_closed_form(table_1e4):
    spec = CovarianceSpec(table=table_1e4, P=2, Q=10, T=10)
    expected = 0.5 * math.fsum(
        math.cos(math.log(p)) / p * (math.log(10 / p) / math.log(10)) ** 2
        for p in (2, 3, 5, 7)
    )
    assert exact_covariance(spec, 1.0) == pytest.approx(expected, abs=1e-15)


def test_evenness(table_1e4):
    spec = CovarianceSpec(table=table_1e4, P=2, Q=10_000, T=10_000)
    rng = np.random.default_rng(3)
    for dh in rng.uniform(0.0, 2.0 * np.pi, 10):
        assert exact_covariance(spec, dh) == pytest.approx(
            exact_covariance(spec, -dh), abs=1e-12
        )


def test_recombination_identity(table_1e4):
    # C(0) = (1/2)(sum 1/p - (2/log T) sum log p/p + (1/log^2 T) sum log^2 p/p)
    P, Q, T = 2, 10_000, 10_000
    spec = CovarianceSpec(table=table_1e4, P=P, Q=Q, T=T)
    recip = prime_reciprocal_sum(table_1e4, P, Q)
    first, second = weighted_log_sums(table_1e4, P, Q, T)
    log_t = math.log(T)
    recombined = 0.5 * (recip - 2.0 / log_t * first + second / log_t**2)
    assert exact_covariance(spec, 0.0) == pytest.approx(recombined, abs=1e-13)


def test_disjoint_window_additivity(table_1e4):
    # Primes split exactly at 100 (97 | 101), same T throughout.
    whole = CovarianceSpec(table=table_1e4, P=2, Q=10_000, T=10_000)
    low = CovarianceSpec(table=table_1e4, P=2, Q=100, T=10_000)
    high = CovarianceSpec(table=table_1e4, P=100, Q=10_000, T=10_000)
    for dh in (0.0, 0.3, 2.2):
        assert exact_covariance(whole, dh) == pytest.approx(
            exact_covariance(low, dh) + exact_covariance(high, dh), abs=1e-13
        )


def test_covariance_lattice_matches_pointwise(table_1e4):
    spec = CovarianceSpec(table=table_1e4, P=2, Q=10_000, T=10_000)
    step, n = 0.0131, 2500  # crosses the rotor renormalization boundary
    lattice = covariance_lattice(spec, step, n)
    idx = [0, 1, 17, 1023, 1024, 1025, 2499]
    for j in idx:
        assert lattice[j] == pytest.approx(exact_covariance(spec, j * step), abs=1e-11)
    with pytest.raises(ParameterError):
        covariance_lattice(spec, step, 0)


def test_spec_validation(table_1e4):
    with pytest.raises(ParameterError):
        CovarianceSpec(table=table_1e4, P=100, Q=10, T=10_000)
    with pytest.raises(ParameterError):
        CovarianceSpec(table=table_1e4, P=2, Q=10, T=5)
    with pytest.raises(ParameterError):
        CovarianceSpec(table=table_1e4, P=2, Q=20_000, T=20_000)


class TestCosineIntegral:
    def test_zero_width(self):
        assert cosine_integral_segment(2.5, 2.5) == 0.0

    def test_against_fixed_step_simpson(self):
        # Independent oracle: composite Simpson on a dense fixed grid.
        a, b, n = 1.0, 10.0, 200_000
        v = np.linspace(a, b, n + 1)
        f = np.cos(v) / v
        h = (b - a) / n
        simpson = h / 3.0 * (f[0] + f[-1] + 4.0 * f[1:-1:2].sum() + 2.0 * f[2:-1:2].sum())
        ours = cosine_integral_segment(a, b)
        assert ours == pytest.approx(simpson, abs=1e-10)
        assert ours == pytest.approx(CI_10_MINUS_CI_1, abs=1e-10)

    def test_small_argument_window(self):
        # cos v = 1 + O(v^2) makes the integral log(b/a) + O(b^2/2).
        for a, b in ((1e-6, 1e-4), (1e-4, 0.5), (0.2, 0.9)):
            val = cosine_integral_segment(a, b)
            assert abs(val - math.log(b / a)) <= b * b / 2.0

    def test_series_quadrature_splice(self):
        # Straddle the series cutoff; additivity across the splice point.
        left = cosine_integral_segment(1e-5, 1e-3)
        right = cosine_integral_segment(1e-3, 2.0)
        both = cosine_integral_segment(1e-5, 2.0)
        assert both == pytest.approx(left + right, abs=1e-10)

    def test_invalid_arguments(self):
        with pytest.raises(ParameterError):
            cosine_integral_segment(0.0, 1.0)
        with pytest.raises(ParameterError):
            cosine_integral_segment(-1.0, 1.0)
        with pytest.raises(ParameterError):
            cosine_integral_segment(2.0, 1.0)


class TestAsymptotic:
    def test_near_value(self):
        val, regime = asymptotic_covariance(1e3, 1e6, 1e-8)
        assert regime == REGIME_NEAR
        expected = 0.5 * (math.log(math.log(1e6)) - math.log(math.log(1e3)))
        assert val == pytest.approx(expected, abs=1e-14)

    def test_log_window_boundary_is_zero(self):
        val, regime = asymptotic_covariance(1e3, 1e6, 1.0 / math.log(1e3))
        assert regime == REGIME_LOG_WINDOW
        assert val == pytest.approx(0.0, abs=1e-14)

    def test_far_regime(self):
        val, regime = asymptotic_covariance(1e3, 1e6, 3.0)
        assert regime == REGIME_FAR
        assert val == 0.0

    def test_regimes_are_contiguous(self):
        order = {REGIME_NEAR: 0, REGIME_LOG_WINDOW: 1, REGIME_FAR: 2}
        labels = [
            order[asymptotic_covariance(1e3, 1e6, dh)[1]]
            for dh in np.geomspace(1e-9, math.pi, 200)
        ]
        assert labels == sorted(labels)

    def test_rejects_tiny_P(self):
        with pytest.raises(ParameterError):
            asymptotic_covariance(2, 100, 0.1)

    def test_banded_against_exact_log_window(self, table_1e6):
        spec = CovarianceSpec(table=table_1e6, P=1e3, Q=1e6, T=1e6)
        for dh in np.linspace(1.05 / math.log(1e6), 0.95 / math.log(1e3), 8):
            asym, regime = asymptotic_covariance(1e3, 1e6, dh)
            assert regime == REGIME_LOG_WINDOW
            assert abs(exact_covariance(spec, dh) - asym) <= 2.0


class TestCorrelation:
    def test_normalization_and_bounds(self, table_1e5):
        spec = CovarianceSpec(table=table_1e5, P=112, Q=1e5, T=1e5)
        corr = CorrelationFunction(spec)
        assert corr(0.0) == 1.0
        rng = np.random.default_rng(11)
        for dh in rng.uniform(-2.0 * np.pi, 2.0 * np.pi, 20):
            r = corr(dh)
            assert -1.0 <= r <= 1.0
            assert r == pytest.approx(corr(-dh), abs=1e-12)

    def test_empty_window_rejected(self, table_1e4):
        with pytest.raises(ParameterError):
            CorrelationFunction(CovarianceSpec(table=table_1e4, P=24, Q=28, T=1e4))


class TestMonotoneReport:
    def test_single_lag_trivial(self, table_1e5):
        corr = CorrelationFunction(CovarianceSpec(table=table_1e5, P=112, Q=1e5, T=1e5))
        report = check_monotone_nonneg(corr, E=1.2477, K=1.0, j_max=1)
        assert report.js.tolist() == [1]
        assert report.passed

    def test_default_window_clear(self, table_1e5):
        corr = CorrelationFunction(CovarianceSpec(table=table_1e5, P=112, Q=1e5, T=1e5))
        report = check_monotone_nonneg(corr, E=1.2477, K=10.0, j_max=50)
        assert report.passed
        report_k1 = check_monotone_nonneg(corr, E=1.2477, K=1.0, j_max=50)
        assert report_k1.passed

    def test_single_prime_flags_match_cosine(self, table_1e4):
        # P = Q collapses r to cos(dh log P); flags derivable by direct scan.
        corr = CorrelationFunction(CovarianceSpec(table=table_1e4, P=89, Q=89, T=1e4))
        E, K, j_max = 2.0, 0.1, 10
        report = check_monotone_nonneg(corr, E=E, K=K, j_max=j_max)
        log_t = math.log(1e4)
        j_hi = min(j_max, math.floor(log_t / (K * E * math.log(89))))
        vals = [math.cos(j * E / log_t * math.log(89)) for j in range(1, j_hi + 1)]
        exp_neg = next((j for j, v in enumerate(vals, 1) if v < 0), None)
        exp_mono = None
        prev = 1.0
        for j, v in enumerate(vals, 1):
            if v > prev:
                exp_mono = j
                break
            prev = v
        assert report.first_negative == exp_neg
        assert report.first_nonmonotone == exp_mono
        assert not report.passed


def test_far_decay_constant_fit_and_stability(table_1e5):
    spec = CovarianceSpec(table=table_1e5, P=112, Q=1e5, T=1e5)
    lags = np.linspace(2.0 / math.log(112), math.pi, 100)
    fit_all = fit_far_decay_constant(spec, lags, normalized=True)
    fit_half = fit_far_decay_constant(spec, lags[::2], normalized=True)
    assert fit_all > 0
    # Refitting on a thinned sweep moves the constant by < 2x.
    assert fit_half <= fit_all <= 2.0 * fit_half
    corr = CorrelationFunction(spec)
    scale = math.log(math.log(1e5)) * math.log(112)
    for dh in lags:
        assert abs(corr(dh)) <= fit_all / (dh * scale) + 1e-12
    with pytest.raises(ParameterError):
        fit_far_decay_constant(spec, np.array([1e-4]))
