from __future__ import annotations

import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from weylab.cf_engine import (ContinuedFraction, fundamental_interval, interval_of_prefix,
                              sample_uniform)
from weylab.gauss_sums import theta
from weylab.oscillation_lab import (EvalConfig, InsufficientData, LevelSetEstimate,
                                    choose_threshold, decay_slope_fit, estimate_F_I,
                                    exact_next_quotient_probability, level_set_curve,
                                    oscillation_proxy, partial_quotient_histogram,
                                    random_subintervals, restricted_measure, wilson_halfwidth)

I4 = fundamental_interval("1/4")
I2 = fundamental_interval("1/2")


def test_constant_integrand():
    mean, se = estimate_F_I(I4, 200, 1, integrand=lambda x: 1.0)
    assert mean == 1 and se == 0


def test_mean_of_single_exponential():
    f = lambda x: cmath.exp(2j * math.pi * float(x))
    mean, se = estimate_F_I(I2, 4000, 3, integrand=f)
    exact = (cmath.exp(1j * math.pi) - cmath.exp(2j * math.pi / 3)) / (2j * math.pi / 6)
    assert abs(mean - exact) <= 3 * se


def test_two_seeds_agree():
    m1, s1 = estimate_F_I(I4, 1500, 1)
    m2, s2 = estimate_F_I(I4, 1500, 2)
    assert abs(m1 - m2) <= 3 * (s1 + s2)


def test_sample_size_precondition():
    with pytest.raises(ValueError):
        estimate_F_I(I4, 50, 1)


def test_proxy_zero_when_only_two_mod_four_terms():
    x = ContinuedFraction((0, 6, 1000)).value()
    value, bound = oscillation_proxy(x, 6)
    assert value == 0 and bound > 0


def test_proxy_matches_termwise_sum():
    x = ContinuedFraction((0, 4) + (1,) * 60 + (7,)).value()
    value, _ = oscillation_proxy(x, 4)
    cf = ContinuedFraction((0, 4) + (1,) * 60 + (7,))
    p_prev, q_prev, p, q = 0, 1, 1, 0
    ents = []
    for a in cf.quotients:
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        ents.append((p, q))
    want = 0j
    for (pj, qj), (_, qn) in zip(ents, ents[1:]):
        if qj * qj > x.denominator:
            break
        if qj >= 4:
            want += 0.5 * theta(pj, qj) / math.sqrt(qj) * math.log(qn / qj)
    assert abs(value - want) < 1e-12


def test_proxy_tracks_oscillation():
    mean, se = estimate_F_I(I4, 1000, 9)
    cfg = EvalConfig()
    bad = 0
    for i in range(200):
        x = sample_uniform(I4, 10, i)
        value, _ = oscillation_proxy(x, 4)
        if abs(value - (cfg.evaluate(x).value - mean)) > 5 / 2 + 3 * se:
            bad += 1
    assert bad <= 10


def test_level_set_basic_invariants():
    lam = [0.0, 0.5, 1.0, 1.5, 50.0]
    est = level_set_curve(I4, lam, 1000, 4, fit=False)
    assert est.survival[0] == 1 and est.survival[-1] == 0 and est.ci_halfwidth[-1] > 0
    assert np.all(np.diff(est.survival) <= 0)
    assert np.array_equal(est.counts / est.sample_size, est.survival)
    again = level_set_curve(I4, lam, 1000, 4, fit=False)
    assert np.array_equal(est.counts, again.counts)
    with pytest.raises(ValueError):
        level_set_curve(I4, [1.0, 0.5], 1000, 4)


def test_wilson_width_shrinks():
    assert wilson_halfwidth(np.array([50]), 100)[0] > wilson_halfwidth(np.array([5000]), 10**4)[0]


def test_slope_fit_exact_exponential():
    lam = np.linspace(0.5, 2.0, 16)
    M = 10**9
    surv = np.exp(-3 * lam)
    est = LevelSetEstimate(lam, surv, surv * M, np.zeros(16), 4, M)
    slope, (lo, hi) = decay_slope_fit(est)
    assert slope == pytest.approx(3.0, abs=1e-9)
    assert lo <= 3.0 <= hi


def test_slope_fit_needs_data():
    lam = np.linspace(0.5, 2.0, 5)
    est = LevelSetEstimate(lam, np.full(5, 1e-3), np.array([9, 8, 7, 6, 5]), np.zeros(5), 4, 9000)
    with pytest.raises(InsufficientData):
        decay_slope_fit(est)


def test_threshold_rule_is_capped():
    T, met = choose_threshold(0.5)
    assert T == 1000 and not met
    assert choose_threshold(0.5, cap=10**9) == (math.ceil((10 / (1 - 2**-0.5) / 0.01) ** 2), True)


def test_histogram_first_quotient():
    st = partial_quotient_histogram(I2, 2, 10**4, 5)
    p = 0.4
    assert exact_next_quotient_probability(I2, 1) == Fraction(2, 5)
    assert abs(st.histogram[1] - p) <= 3 * math.sqrt(p * (1 - p) / 10**4)
    assert sum(st.histogram.values()) <= 1
    assert 16 / 3 <= st.histogram[1] / st.histogram[4] <= 16 * 3
    with pytest.raises(ValueError):
        partial_quotient_histogram(I2, 1, 10**4, 5)


def test_restricted_measure():
    deficit, S, hits = restricted_measure(I2, lambda n: math.inf, 5, 500, 1)
    assert deficit == 0 and S == 0 and hits == 500
    deficit, S, _ = restricted_measure(I2, lambda n: n * n, 20, 4000, 2)
    assert 0.2 <= deficit / S <= 5
    deficit, _, hits = restricted_measure(I2, [1, 1, 1], 3, 4000, 3)
    exact = exact_next_quotient_probability(interval_of_prefix([0, 2]), 1)
    p = float(interval_of_prefix([0, 2, 1, 1, 1]).length / I2.length)
    assert abs(hits / 4000 - p) <= 3 * math.sqrt(p * (1 - p) / 4000)
    assert deficit == pytest.approx(-3 * math.log(float(exact)), rel=0.15)
    with pytest.raises(ValueError):
        restricted_measure(I2, [0.5], 1, 100, 1)


def test_subintervals_lie_inside():
    for s in random_subintervals(I4, 10, 1):
        assert I4.lo <= s.lo < s.hi < I4.hi and s.q == 4
