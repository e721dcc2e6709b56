"""Monte Carlo experiments on the oscillation of F over fundamental intervals.

Every stochastic routine draws points with ``cf_engine.sample_uniform`` keyed
by (seed, index), so results depend only on the arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .cf_engine import (FundamentalInterval, SubInterval, interval_of_prefix,
                        iter_convergents, iter_quotients, sample_uniform)
from .gauss_sums import TWO_MOD_FOUR, gauss_sum_fast
from .theta_series import DEFAULT_C, DEFAULT_Q_STOP, EvalResult, f_eval_hybrid

Z95 = 1.959963984540054


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class EvalConfig:
    """Settings of the F evaluator used inside sampling loops."""

    threshold: int = 1000
    C: float = DEFAULT_C
    q_stop: int = DEFAULT_Q_STOP
    grid_bits: int = 256

    def evaluate(self, x: Fraction) -> EvalResult:
        return f_eval_hybrid(x, self.threshold, C=self.C, q_stop=self.q_stop)


def predicted_hybrid_bound(T: int, C: float = DEFAULT_C) -> float:
    """Worst-case C sum_{q_j >= T} q_j^{-1/2}, using q_{j+2} >= 2 q_j."""
    return 2 * C / math.sqrt(T) / (1 - 2**-0.5)


def choose_threshold(lambda_min: float, C: float = DEFAULT_C, cap: int = 1000) -> tuple:
    """Smallest T whose predicted bound is <= min(0.01, lambda_min/10), capped.

    Returns (T, target_met).
    """
    target = min(0.01, lambda_min / 10) if lambda_min > 0 else 0.01
    T = math.ceil((2 * C / (1 - 2**-0.5) / target) ** 2)
    return (T, True) if T <= cap else (cap, False)


@dataclass
class OscillationSample:
    x: Fraction
    f_value: complex
    f_error: float
    osc: float


def _sample_values(interval, M: int, seed: int, f: Callable, start: int = 0,
                   grid_bits: int = 256):
    xs = [sample_uniform(interval, seed, i, grid_bits) for i in range(start, start + M)]
    vals = np.empty(M, dtype=complex)
    errs = np.zeros(M)
    for i, x in enumerate(xs):
        r = f(x)
        if isinstance(r, EvalResult):
            vals[i], errs[i] = r.value, r.error_bound
        else:
            vals[i] = r
    return xs, vals, errs


def _mean_stderr(vals: np.ndarray) -> tuple:
    M = len(vals)
    mean = complex(vals.mean())
    if M < 2:
        return mean, math.inf
    var = float(np.var(vals.real, ddof=1) + np.var(vals.imag, ddof=1))
    return mean, math.sqrt(var / M)


def estimate_F_I(interval, M: int, seed: int, cfg: EvalConfig | None = None,
                 integrand: Callable | None = None, start: int = 0) -> tuple:
    """Monte Carlo mean of F (or ``integrand``) over the interval; (mean, stderr)."""
    if M < 100:
        raise ValueError("M must be >= 100")
    cfg = cfg or EvalConfig()
    f = integrand or cfg.evaluate
    _, vals, _ = _sample_values(interval, M, seed, f, start, cfg.grid_bits)
    return _mean_stderr(vals)


def oscillation_proxy(x: Fraction, q: int, C: float = DEFAULT_C,
                      q_stop: int = DEFAULT_Q_STOP) -> tuple:
    """(1/2) sum_{q_j >= q} theta_j q_j^{-1/2} log(q_{j+1}/q_j) and its error bound.

    Only convergents with q_j^2 <= den(x) and q_j <= q_stop are used; the bound
    is C (q^{-1/2} + estimate of the dropped tail).
    """
    entries = []
    for pq in iter_convergents(x):
        entries.append(pq)
        if pq[1] * pq[1] > x.denominator or pq[1] > q_stop:
            break
    if len(entries) < 2 or entries[-1][1] < q:
        raise InsufficientData("x has no exact convergents past q")
    total = 0j
    max_log_ratio = 0.0
    last_q = None
    for (p, qj), (_, qn) in zip(entries, entries[1:]):
        if qj * qj > x.denominator or qj > q_stop:
            break
        last_q = qn
        ratio = math.log(qn) - math.log(qj)
        max_log_ratio = max(max_log_ratio, ratio)
        if qj < q:
            continue
        th = gauss_sum_fast(p, qj)
        if th.q_class != TWO_MOD_FOUR:
            total += 0.5 * th.value / math.sqrt(qj) * ratio
    tail = 0.0
    if last_q is not None:
        tail = (max_log_ratio + math.log(2)) * 2 / math.sqrt(last_q) / (1 - 2**-0.5)
    return total, C * (1 / math.sqrt(q) + tail)


# -- level sets ---------------------------------------------------------------

def wilson_halfwidth(count: np.ndarray, n: int, z: float = Z95) -> np.ndarray:
    p = np.asarray(count, dtype=float) / n
    denom = 1 + z * z / n
    return z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom


@dataclass
class LevelSetEstimate:
    lambda_grid: np.ndarray
    survival: np.ndarray
    counts: np.ndarray
    ci_halfwidth: np.ndarray
    q: int
    sample_size: int
    f_mean: complex = 0j
    f_stderr: float = 0.0
    max_eval_error: float = 0.0
    fitted_slope: float = math.nan
    slope_ci: tuple = (math.nan, math.nan)
    osc: np.ndarray = field(default=None, repr=False)

    def rows(self) -> list:
        return [(float(l), float(s), int(c), float(h)) for l, s, c, h in
                zip(self.lambda_grid, self.survival, self.counts, self.ci_halfwidth)]

    def summary(self) -> dict:
        q = self.q
        cq = {0: math.sqrt(2), 1: 2.0, 2: 2 * math.sqrt(2), 3: 2.0}[q % 4]
        return {
            "slope": self.fitted_slope,
            "ci": list(self.slope_ci),
            "sqrt_2q": math.sqrt(2 * q),
            "c_q_sqrt_q": cq * math.sqrt(q),
            "q": q,
            "samples": self.sample_size,
            "f_mean_re": self.f_mean.real,
            "f_mean_im": self.f_mean.imag,
            "f_stderr": self.f_stderr,
            "max_eval_error": self.max_eval_error,
            "constants": "empirical",
        }


def level_set_curve(interval, lambda_grid: Sequence[float], M: int, seed: int,
                    cfg: EvalConfig | None = None, min_count: int = 50,
                    fit: bool = True) -> LevelSetEstimate:
    """Empirical |{x in I : |F(x) - F_I| > lambda}| / |I| on a lambda grid.

    F_I is the sample mean of the same draws.  ``interval`` is a
    FundamentalInterval or a SubInterval carrying its prefix denominator q.
    """
    if M < 1000:
        raise ValueError("M must be >= 1000")
    lam = np.asarray(lambda_grid, dtype=float)
    if np.any(np.diff(lam) <= 0):
        raise ValueError("lambda_grid must be increasing")
    cfg = cfg or EvalConfig()
    _, vals, errs = _sample_values(interval, M, seed, cfg.evaluate, 0, cfg.grid_bits)
    mean, stderr = _mean_stderr(vals)
    osc = np.abs(vals - mean)
    counts = (osc[None, :] > lam[:, None]).sum(axis=1)
    est = LevelSetEstimate(lam, counts / M, counts, wilson_halfwidth(counts, M),
                           interval.q, M, mean, stderr, float(errs.max()), osc=osc)
    if fit:
        try:
            slope, ci = decay_slope_fit(est, min_count)
            est.fitted_slope, est.slope_ci = slope, ci
        except InsufficientData:
            pass
    return est


def decay_slope_fit(est: LevelSetEstimate, min_count: int = 50) -> tuple:
    """Weighted least squares of log survival on lambda; survival ~ e^{-slope lambda}.

    Uses grid points with count >= min_count and survival < 1, weighted by the
    inverse delta-method variance count / (1 - survival).  Returns
    (slope, (lo, hi)) with a 95% interval that ignores the correlation between
    cumulative counts.
    """
    lam = np.asarray(est.lambda_grid, dtype=float)
    surv = np.asarray(est.survival, dtype=float)
    counts = np.asarray(est.counts, dtype=float)
    keep = (counts >= min_count) & (surv < 1) & (surv > 0)
    if keep.sum() < 4:
        raise InsufficientData(f"only {int(keep.sum())} usable grid points")
    x, y = lam[keep], np.log(surv[keep])
    w = counts[keep] / (1 - surv[keep])
    xm = np.sum(w * x) / w.sum()
    ym = np.sum(w * y) / w.sum()
    sxx = np.sum(w * (x - xm) ** 2)
    b = np.sum(w * (x - xm) * (y - ym)) / sxx
    resid = y - ym - b * (x - xm)
    dof = max(len(x) - 2, 1)
    scale = max(1.0, float(np.sum(w * resid**2)) / dof)
    se = math.sqrt(scale / sxx)
    slope = -float(b)
    return slope, (slope - Z95 * se, slope + Z95 * se)


# -- metric theory of partial quotients --------------------------------------------

@dataclass
class MetricStats:
    j: int
    histogram: dict
    reference: dict
    band: float
    sample_size: int
    counts: dict = field(default_factory=dict)

    def ratios(self) -> dict:
        return {k: self.histogram[k] / self.reference[k] for k in self.histogram
                if self.reference[k] > 0}

    def within_band(self) -> dict:
        return {k: 1 / self.band <= r <= self.band for k, r in self.ratios().items()}


def _quotients_upto(x: Fraction, j: int) -> list:
    out = []
    for a in iter_quotients(x):
        out.append(a)
        if len(out) > j:
            break
    return out


def partial_quotient_histogram(interval: FundamentalInterval, j: int, M: int, seed: int,
                               k_max: int = 20, band: float = 3.0,
                               grid_bits: int = 256) -> MetricStats:
    """Empirical P(a_j(x) = k), k <= k_max, with reference c k^{-2} fitted at k = 1."""
    if j <= interval.j0:
        raise ValueError(f"j = {j} must exceed the prefix length j0 = {interval.j0}")
    if M < 10**4:
        raise ValueError("M must be >= 10^4")
    counts = dict.fromkeys(range(1, k_max + 1), 0)
    for i in range(M):
        qs = _quotients_upto(sample_uniform(interval, seed, i, grid_bits), j)
        if len(qs) > j and qs[j] <= k_max:
            counts[qs[j]] += 1
    hist = {k: c / M for k, c in counts.items()}
    c1 = hist[1]
    ref = {k: c1 / k**2 for k in hist}
    return MetricStats(j, hist, ref, band, M, counts)


def exact_next_quotient_probability(interval: FundamentalInterval, k: int) -> Fraction:
    """|{x in I : a_{j0+1}(x) = k}| / |I| = |I_{prefix + [k]}| / |I|."""
    sub = interval_of_prefix(interval.prefix + (k,))
    return sub.length / interval.length


def restricted_measure(interval: FundamentalInterval, bounds, n_max: int, M: int,
                       seed: int, grid_bits: int = 256, min_hits: int = 100) -> tuple:
    """(log|I| - log|{x : a_{j0+n}(x) <= A_n, n <= n_max}|, S = sum A_n^{-1}, hits).

    ``bounds`` is a callable n -> A_n or a sequence (A_1, A_2, ...); math.inf
    means no constraint.
    """
    A = [bounds(n) if callable(bounds) else bounds[n - 1] for n in range(1, n_max + 1)]
    if any(a < 1 for a in A):
        raise ValueError("bounds must satisfy A_n >= 1")
    S = float(sum(1 / a for a in A))
    j0 = interval.j0
    hits = 0
    for i in range(M):
        qs = _quotients_upto(sample_uniform(interval, seed, i, grid_bits), j0 + n_max)
        if len(qs) <= j0 + n_max:
            raise InsufficientData("sample expansion shorter than j0 + n_max; raise grid_bits")
        if all(qs[j0 + n] <= A[n - 1] for n in range(1, n_max + 1)):
            hits += 1
    if hits < min_hits:
        raise InsufficientData(f"restricted set got {hits} < {min_hits} hits")
    return math.log(M / hits), S, hits


def random_subintervals(interval: FundamentalInterval, count: int, seed: int) -> list:
    """Subintervals reaching towards the endpoint where a_{j0+1} grows.

    One endpoint is uniform in the outer half of I; the other lies at relative
    distance 10^{-3} u^2, u ~ U(0, 1), from the endpoint p/q where a_{j0+1}
    accumulates, so every subinterval still contains arbitrarily large
    a_{j0+1} and its level sets have a tail to fit.
    """
    rng = np.random.default_rng(seed)
    cusp = interval.p_over_q
    far = interval.lo if cusp == interval.hi else interval.hi
    out = []
    L = interval.length
    for _ in range(count):
        u = Fraction(int(rng.integers(1, 2**30)), 2**31)  # in (0, 1/2)
        v = Fraction(10) ** -3 * Fraction(int(rng.integers(1, 2**20)), 2**20) ** 2
        a = far + (cusp - far) * u
        b = cusp - (cusp - far) * v
        out.append(SubInterval(min(a, b), max(a, b), interval.q))
    return out
