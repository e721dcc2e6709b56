"""Acceptance suite: one test (and one PASS/FAIL line) per criterion, at the
stated tolerances.  Slow: about 6 minutes on one core."""

from __future__ import annotations

import math
import time
import numpy as np
import pytest

from weylab.bmo_bounds import (SeriesSpec, empirical_norm_I, hilbert_check,
                               kappa_bound, norm_I_limit_bound, random_hilbert_instance,
                               random_interval_starts, s_t_sequences,
                               squares_hilbert_instance, gap_delta)
from weylab.cf_engine import (cf_of_rational, convergents, fundamental_interval, interval_of_prefix,
                              iter_convergents, sample_uniform)
from weylab.gauss_sums import (gauss_modulus_class, gauss_sum_direct, gauss_sum_fast,
                               gauss_sums_all)
from weylab.oscillation_lab import (EvalConfig, level_set_curve, partial_quotient_histogram,
                                    random_subintervals)
from weylab.theta_series import (NAIVE_CAP, block_context, block_sum_renormalized,
                                 f_eval_hybrid, f_partial_naive, partial_sums_at, proxy_series,
                                 rational_divergence_slope)

pytestmark = pytest.mark.slow

LAMBDA = np.linspace(0.5, 2.0, 16)


def test_c01_gauss_classification(criterion):
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for q in range(1, 2001):
        vals = gauss_sums_all(q)  # direct summation for every p at once
        p = np.array([p for p in range(q) if math.gcd(p, q) == 1])
        dev = np.abs(np.abs(vals[p]) ** 2 - gauss_modulus_class(q))
        worst = max(worst, float(dev.max()))
        count += len(p)
    elapsed = time.perf_counter() - t0
    ok = criterion(1, "Gauss modulus classes, q <= 2000", worst <= 1e-6 and elapsed <= 120,
                   f"{count} pairs, max | |theta|^2 - class | = {worst:.2e}, {elapsed:.1f}s")
    assert ok


def test_c02_fast_vs_direct(criterion):
    rng = np.random.default_rng(2)
    worst, n = 0.0, 0
    while n < 10**4:
        q = int(rng.integers(1, 10**5 + 1))
        p = int(rng.integers(0, q))
        if math.gcd(p, q) != 1:
            continue
        f, d = gauss_sum_fast(p, q), gauss_sum_direct(p, q)
        worst = max(worst, abs(f.re - d.re), abs(f.im - d.im))
        n += 1
    ok = criterion(2, "fast vs direct Gauss sums", worst <= 1e-9,
                   f"{n} random (p, q), q <= 1e5, max componentwise gap {worst:.2e}")
    assert ok


def test_c03_block_law(criterion):
    I = interval_of_prefix([0])
    errs, qs, skipped = [], [], 0
    for i in range(200):
        x = sample_uniform(I, 3, i)
        ents = []
        for pq in iter_convergents(x):
            ents.append(pq)
            if pq[1] > 10**5:
                break
        blocks = []
        for j in range(len(ents) - 1):
            if not 100 <= ents[j][1] <= 10**5:
                continue
            if ents[j + 1][1] > NAIVE_CAP:  # naive oracle out of reach
                skipped += 1
                continue
            blocks.append(j)
        if not blocks:
            continue
        cps = sorted({ents[j][1] - 1 for j in blocks} | {ents[j + 1][1] - 1 for j in blocks})
        sums = dict(zip(cps, partial_sums_at(x, cps)))
        for j in blocks:
            ctx = block_context(x, j)
            naive = sums[ctx.q_next - 1] - sums[ctx.q - 1]
            errs.append(abs(naive - block_sum_renormalized(x, ctx, ctx.q).value))
            qs.append(ctx.q)
    errs, qs = np.array(errs), np.array(qs, dtype=float)
    ratio = float(np.max(errs * np.sqrt(qs)))
    slope = float(np.polyfit(np.log(qs), np.log(errs), 1)[0])
    ok = ratio <= 5 and -0.65 <= slope <= -0.35
    criterion(3, "block law |naive - renormalized| <= 5 q_j^-1/2", ok,
              f"{len(errs)} blocks, max err*sqrt(q) = {ratio:.3f}, log-log slope {slope:.3f}"
              f" (blocks with q_j+1 > 1e8 skipped: {skipped})")
    assert ok


def test_c04_proxy(criterion):
    I = interval_of_prefix([0])
    worst, used, i = 0.0, 0, 0
    while used < 100:
        x = sample_uniform(I, 5, i)
        i += 1
        conv = convergents(cf_of_rational(x))
        J = max(j for j in range(conv.exact_count) if conv.q(j) <= 10**7)
        if conv.exact_count < 12 or J < 1:
            continue
        naive = partial_sums_at(x, [conv.q(j) for j in range(1, J + 1)])
        proxy = proxy_series(conv, J)
        worst = max(worst, float(np.max(np.abs(naive - np.array(proxy)))))
        used += 1
    ok = criterion(4, "proxy series tracks F_{q_J}", worst <= 5,
                   f"100 points, sup_J |F_q_J - proxy_J| = {worst:.3f} (q_J <= 1e7)")
    assert ok


def test_c05_hybrid(criterion):
    I = interval_of_prefix([0])
    worst = 0.0
    for i in range(100):
        x = sample_uniform(I, 6, i)
        N = max(q for _, q in _take_convergents(x, 10**6))
        h = f_eval_hybrid(x, 1000, n_terms=N)
        worst = max(worst, abs(h.value - f_partial_naive(x, N).value) / h.error_bound)
    speedups = []
    i = 0
    while len(speedups) < 5:
        x = sample_uniform(I, 7, i)
        i += 1
        big = [q for _, q in _take_convergents(x, 6 * 10**7) if q >= 10**7]
        if not big:
            continue
        N = big[0]
        t0 = time.perf_counter()
        f_partial_naive(x, N)
        t_naive = time.perf_counter() - t0
        t0 = time.perf_counter()
        for _ in range(5):
            f_eval_hybrid(x, 1000, n_terms=N)
        t_hybrid = (time.perf_counter() - t0) / 5
        speedups.append(t_naive / t_hybrid)
    ok = worst <= 1 and min(speedups) >= 10
    criterion(5, "hybrid evaluator", ok,
              f"max |hybrid - naive| / error_bound = {worst:.3f} on 100 points; "
              f"speedup at q_J >= 1e7, T = 1e3: min {min(speedups):.0f}x")
    assert ok


def _take_convergents(x, cap):
    out = []
    for pq in iter_convergents(x):
        if pq[1] > cap:
            break
        out.append(pq)
    return out


def test_c06_level_sets(criterion):
    t0 = time.perf_counter()
    e4 = level_set_curve(fundamental_interval("1/4"), LAMBDA, 10**5, 7)
    t4 = time.perf_counter() - t0
    target = 2 * math.sqrt(2)
    ok4 = abs(e4.fitted_slope - target) <= 0.25 * target and t4 <= 600
    e3 = level_set_curve(fundamental_interval("1/3"), LAMBDA, 10**5, 8)
    lo3, hi3 = 0.75 * math.sqrt(6), 1.25 * 2 * math.sqrt(3)
    ok3 = lo3 <= e3.fitted_slope <= hi3
    tail = np.polyfit(LAMBDA[7:], np.log(e4.counts[7:]), 1)[0]
    criterion(6, "level-set decay slopes", ok4 and ok3,
              f"q=4: slope {e4.fitted_slope:.3f} (CI {e4.slope_ci[0]:.2f}..{e4.slope_ci[1]:.2f}) "
              f"vs 2sqrt2 +-25% = [{0.75 * target:.3f}, {1.25 * target:.3f}], {t4:.0f}s, "
              f"tail-only (lambda >= 1.2) slope {-tail:.3f}; "
              f"q=3: slope {e3.fitted_slope:.3f} in [{lo3:.3f}, {hi3:.3f}]: {ok3}")
    assert ok4 and ok3


def test_c07_subintervals(criterion):
    I = fundamental_interval("1/4")
    slopes = [level_set_curve(s, LAMBDA, 10**4, 11 + k).fitted_slope
              for k, s in enumerate(random_subintervals(I, 10, 21))]
    floor = 0.75 * 2 * math.sqrt(2)
    ok = all(s >= floor for s in slopes)
    criterion(7, "subinterval slopes", ok,
              f"10 subintervals of I_1/4, slopes {min(slopes):.3f}..{max(slopes):.3f} "
              f"(floor {floor:.3f})")
    assert ok


def test_c08_metric(criterion):
    I = fundamental_interval("1/2")
    M = 10**5
    st = partial_quotient_histogram(I, I.j0 + 1, M, 13)
    ratios = st.ratios()
    bad = sorted(k for k, r in ratios.items() if not 1 / 3 <= r <= 3)
    p1 = 0.4
    z = abs(st.histogram[1] - p1) / math.sqrt(p1 * (1 - p1) / M)
    ok = not bad and z <= 3
    exact = {k: 6 / ((2 * k + 1) * (2 * k + 3)) for k in (9, 20)}
    criterion(8, "partial quotient law on I_1/2", ok,
              f"k=1 frequency {st.histogram[1]:.4f} vs 2/5 ({z:.2f} sigma); "
              f"k outside factor-3 band of c/k^2: {bad or 'none'}; ratio at k=20 "
              f"{ratios.get(20, float('nan')):.2f} (exact {exact[20] / (0.4 / 400):.2f})")
    assert ok


def test_c09_rational_divergence(criterion):
    grid = np.unique(np.geomspace(10, 10**6, 25).astype(int))
    parts, ok = [], True
    for p, q in ((0, 1), (1, 3), (1, 4)):
        slope, pred = rational_divergence_slope(p, q, grid)
        good = abs(slope - pred) <= 0.2 * pred
        ok &= good
        parts.append(f"{p}/{q}: {slope:.4f} vs {pred:.4f}")
    criterion(9, "rational divergence slopes", ok, "; ".join(parts))
    assert ok


def test_c10_kappa_soundness(criterion):
    spec = SeriesSpec.power(2, 1)
    rep = kappa_bound(spec, N_max=4 * 10**5)
    twisted = kappa_bound(spec.with_twist(99), N_max=4 * 10**5)
    invariant = (twisted.kappa == rep.kappa
                 and np.array_equal(twisted.per_eps_bound, rep.per_eps_bound))
    worst, checked = -math.inf, 0
    for k, (eps, b) in enumerate(zip(rep.epsilon_grid, rep.per_eps_bound)):
        for lo in random_interval_starts(20, 1000 + k):
            r = empirical_norm_I(spec, lo, eps, report=rep)
            worst = max(worst, r.value - b)
            checked += 1
    ok = math.isfinite(rep.kappa) and not rep.inconclusive and worst <= 1e-3 and invariant
    criterion(10, "kappa bound soundness", ok,
              f"kappa-hat {rep.kappa:.4f} on {len(rep.epsilon_grid)} grid points; "
              f"{checked} intervals, max(empirical - bound) = {worst:.3f}; "
              f"twist invariant: {invariant}")
    assert ok


def test_c11_norm_I_constant(criterion):
    spec = SeriesSpec.power(2, 1)
    delta = gap_delta(spec).delta
    limit = norm_I_limit_bound(delta)
    rep = s_t_sequences(spec, 4 * 10**5)
    vals = [empirical_norm_I(spec, lo, 1e-8, report=rep).value
            for lo in random_interval_starts(50, 77)]
    ok = delta == 2 and abs(limit - 5.03) < 5e-3 and max(vals) <= 5.03 * 1.05
    criterion(11, "small-interval oscillation bound", ok,
              f"3(12pi)^(1/3)/delta = {limit:.4f} with delta = {delta}; 50 intervals of "
              f"length 1e-8: max ||F||_I = {max(vals):.4f} <= {5.03 * 1.05:.4f}")
    assert ok


def test_c12_hilbert(criterion):
    rng = np.random.default_rng(12)
    viol, worst = 0, 0.0
    for _ in range(1000):
        lhs, rhs = hilbert_check(*random_hilbert_instance(rng))
        viol += lhs > rhs
        worst = max(worst, lhs / rhs)
    lhs, rhs = hilbert_check(*squares_hilbert_instance(2000, rng))
    viol += lhs > rhs
    ok = viol == 0
    criterion(12, "Hilbert inequality", ok,
              f"1000 random instances + squares (R=2000): {viol} violations, worst ratio "
              f"{worst:.3f}, squares ratio {lhs / rhs:.3f}")
    assert ok
