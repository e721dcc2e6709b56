"""Evaluation of F(x) = sum_{n>=1} e(n^2 x)/n and of quadratic Weyl sums.

Naive sums use exact reduced phases (see ``weylab._kernels``).  The
renormalized evaluators replace a whole convergent block [q_j, q_{j+1}) by the
main term (theta_j / (2 sqrt(q_j))) log^+(q_j q_{j+1} / m^2), with an
error bound C q_j^{-1/2} whose constant C is empirical (default 5).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.special import exp1, fresnel

from . import _kernels as K
from .cf_engine import (ContinuedFraction, ConvergentSeq, as_rational, convergents,
                        iter_convergents, synthetic_cf)
from .gauss_sums import GaussSumValue, gauss_sum_fast, q_class, TWO_MOD_FOUR

NAIVE_CAP = 10**8
EXACT_TAIL_CAP = 10**5
DEFAULT_C = 5.0
DEFAULT_Q_STOP = 10**12
EPS = float(np.finfo(float).eps)

NAIVE = "naive"
RENORMALIZED = "renormalized"
HYBRID = "hybrid"


class RegimeError(ValueError):
    """Arguments outside the range where a renormalized formula applies."""


class CapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class EvalResult:
    value: complex
    error_bound: float
    terms_used: int
    method: str
    bound_kind: str = "rounding"

    def as_dict(self) -> dict:
        return {
            "value_re": self.value.real,
            "value_im": self.value.imag,
            "error_bound": self.error_bound,
            "terms_used": self.terms_used,
            "method": self.method,
            "bound_kind": self.bound_kind,
        }


# -- naive sums ------------------------------------------------------------

def _phase_args(x: Fraction):
    x = as_rational(x) % 1
    a, b = x.numerator, x.denominator
    if b < K.SMALL_DEN:
        return True, a, b
    X = (a << 128) // b
    return False, np.uint64(X >> 64), np.uint64(X & (2**64 - 1))


def _phase_error(x: Fraction) -> float:
    return 0.0 if as_rational(x).denominator < K.SMALL_DEN else 2.0**-62


def _range_sum(x: Fraction, m: int, stop: int, power: int) -> complex:
    if stop <= m:
        return 0j
    small, u, v = _phase_args(x)
    if small:
        re, im = K.range_sum_small(u, v, m, stop, power)
    else:
        if stop > K.MAX_N:
            if stop - m > EXACT_TAIL_CAP:
                raise CapExceeded(f"n up to {stop} exceeds fixed-point range 2^32")
            return _range_sum_exact(x, m, stop, power)
        re, im = K.range_sum_fixed(u, v, m, stop, power)
    return complex(re, im)


def _range_sum_exact(x: Fraction, m: int, stop: int, power: int) -> complex:
    """Few terms with huge n: reduce n^2 a mod b in Python integers."""
    a, b = x.numerator, x.denominator
    total = 0j
    for n in range(m, stop):
        r = (n * n * a) % b
        t = 2 * math.pi * ((r << 64) // b) / 2.0**64
        total += complex(math.cos(t), math.sin(t)) / (n if power == 1 else 1)
    return total


def reduced_phases(x, m: int, stop: int) -> np.ndarray:
    """frac(n^2 x) for m <= n < stop."""
    x = as_rational(x)
    small, u, v = _phase_args(x)
    if small:
        return K.phases_small(u, v, m, stop)
    return K.phases_fixed(u, v, m, stop)


def _rounding_bound(x: Fraction, m: int, stop: int, power: int) -> float:
    if stop <= m:
        return 0.0
    if power == 1:
        weight = math.log(stop / max(m, 1)) + 1.0 / max(m, 1)
    else:
        weight = float(stop - m)
    return (8 * EPS + 2 * math.pi * _phase_error(x)) * weight


def f_partial_naive(x, N: int, cap: int = NAIVE_CAP) -> EvalResult:
    """F_N(x) = sum_{n=1}^{N} e(n^2 x)/n."""
    if N < 0:
        raise ValueError("N must be >= 0")
    if N > cap:
        raise CapExceeded(f"N = {N} above the naive cap {cap}")
    x = as_rational(x)
    value = _range_sum(x, 1, N + 1, 1)
    return EvalResult(value, _rounding_bound(x, 1, N + 1, 1), N, NAIVE)


def partial_sums_at(x, checkpoints: Sequence[int], cap: int = NAIVE_CAP) -> np.ndarray:
    """F_c(x) for each c in ``checkpoints`` (one pass over n)."""
    x = as_rational(x)
    cps = np.asarray(checkpoints, dtype=np.int64)
    if len(cps) == 0:
        return np.zeros(0, dtype=complex)
    order = np.argsort(cps, kind="stable")
    srt = cps[order]
    if srt[0] < 0 or srt[-1] > cap:
        raise CapExceeded(f"checkpoint {srt[-1]} above the naive cap {cap}")
    small, u, v = _phase_args(x)
    if small:
        vals = K.cumulative_small(u, v, srt, 1)
    else:
        if srt[-1] >= K.MAX_N:
            raise CapExceeded("fixed-point phases need n < 2^32")
        vals = K.cumulative_fixed(u, v, srt, 1)
    out = np.empty_like(vals)
    out[order] = vals
    return out


def weyl_sum_naive(x, m: int, N: int, cap: int = NAIVE_CAP) -> complex:
    """sum_{m <= n < N} e(n^2 x)."""
    if not 0 <= m <= N:
        raise ValueError("need 0 <= m <= N")
    if N - m > cap:
        raise CapExceeded(f"{N - m} terms above the naive cap {cap}")
    return _range_sum(as_rational(x), m, N, 0)


# -- renormalized blocks ----------------------------------------------------

@dataclass(frozen=True)
class BlockContext:
    """Data of block j for x: p_j/q_j, q_{j+1}, h_j = x - p_j/q_j, theta_{p_j/q_j}."""

    j: int
    p: int
    q: int
    q_next: int
    h: Fraction
    theta: GaussSumValue

    def __post_init__(self):
        r = abs(self.h) * self.q * self.q_next
        # == 1 only at the penultimate convergent of a finite expansion
        if not Fraction(1, 2) < r <= 1:
            raise ValueError(f"|h_j| q_j q_j+1 = {float(r)} outside (1/2, 1]")

    @property
    def h_float(self) -> float:
        return self.h.numerator / self.h.denominator

    @property
    def theta_value(self) -> complex:
        return self.theta.value


def block_context(x, j: int, conv: ConvergentSeq | None = None) -> BlockContext:
    x = as_rational(x)
    if conv is None:
        entries = []
        for pq in iter_convergents(x):
            entries.append(pq)
            if len(entries) > j + 1:
                break
    else:
        entries = conv.entries
    if j + 1 >= len(entries):
        raise RegimeError(f"x has no exact convergent q_{j + 1}")
    p, q = entries[j]
    q_next = entries[j + 1][1]
    return BlockContext(j, p, q, q_next, x - Fraction(p, q), gauss_sum_fast(p, q))


def fresnel_integral(h: float, m: float, N: float) -> complex:
    """int_m^N e(h t^2) dt through the Fresnel integrals C and S."""
    if h == 0:
        return complex(N - m)
    s = math.sqrt(abs(h))
    S, C = fresnel(np.array([2 * s * m, 2 * s * N]))
    sign = 1.0 if h > 0 else -1.0
    return complex(C[1] - C[0], sign * (S[1] - S[0])) / (2 * s)


def fresnel_integral_quad(h: float, m: float, N: float, nodes: int = 16) -> complex:
    """Same integral by composite Gauss-Legendre, panels shorter than 1/8 of the
    local wavelength 1/(2|h|t)."""
    if N <= m:
        return 0j
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    width = 1.0 / (16.0 * abs(h) * N) if h else N - m
    panels = max(1, math.ceil((N - m) / width))
    edges = np.linspace(m, N, panels + 1)
    total = 0j
    chunk = 4096
    for i in range(0, panels, chunk):
        k = min(i + chunk, panels)
        a = edges[i:k][:, None]
        b = edges[i + 1:k + 1][:, None]
        t = 0.5 * (b - a) * xg[None, :] + 0.5 * (a + b)
        f = np.exp(2j * np.pi * h * t * t)
        total += np.sum(0.5 * (b - a) * wg[None, :] * f)
    return complex(total)


def weyl_sum_renormalized(x, m: int, N: int, ctx: BlockContext,
                          C: float = DEFAULT_C) -> EvalResult:
    """(theta_j / sqrt(q_j)) int_m^N e(h_j t^2) dt, error C sqrt(q_j)."""
    if not 0 <= m <= N:
        raise ValueError("need 0 <= m <= N")
    if 8 * N > ctx.q_next:
        raise RegimeError(f"N = {N} beyond q_j+1/8 = {ctx.q_next / 8}")
    if m == N:
        return EvalResult(0j, 0.0, 0, RENORMALIZED, "exact")
    bound = C * math.sqrt(ctx.q)
    if ctx.theta.q_class == TWO_MOD_FOUR:
        return EvalResult(0j, bound, 0, RENORMALIZED, "empirical-constant")
    main = ctx.theta_value / math.sqrt(ctx.q) * fresnel_integral(ctx.h_float, m, N)
    return EvalResult(main, bound, 0, RENORMALIZED, "empirical-constant")


def log_plus(t: float) -> float:
    return max(math.log(t), 0.0) if t > 0 else 0.0


def _block_main(ctx: BlockContext, m: int) -> complex:
    if ctx.theta.q_class == TWO_MOD_FOUR:
        return 0j
    # log(q_j q_{j+1} / m^2) without forming the huge product as a float
    lg = math.log(ctx.q) + math.log(ctx.q_next) - 2 * math.log(m)
    return ctx.theta_value / (2 * math.sqrt(ctx.q)) * max(lg, 0.0)


def block_sum_renormalized(x, ctx: BlockContext, m: int,
                           C: float = DEFAULT_C) -> EvalResult:
    """Main term of sum_{m <= n < q_j+1} e(n^2 x)/n, error C q_j^{-1/2}."""
    if not ctx.q <= m < ctx.q_next:
        raise RegimeError(f"m = {m} outside [q_j, q_j+1) = [{ctx.q}, {ctx.q_next})")
    return EvalResult(_block_main(ctx, m), C / math.sqrt(ctx.q), 0, RENORMALIZED,
                      "empirical-constant")


def straddle_main(ctx: BlockContext, m: int, stop: int) -> complex:
    """(theta_j / sqrt(q_j)) int_m^stop e(h_j t^2) t^{-1} dt for q_j <= m < stop <= q_j+1.

    int_a^b e(h t^2) dt/t = (E1(-2 pi i h a^2) - E1(-2 pi i h b^2)) / 2.
    """
    if ctx.theta.q_class == TWO_MOD_FOUR:
        return 0j
    w = -2j * math.pi * ctx.h_float
    e = exp1(np.array([w * m * m, w * float(stop) ** 2]))
    return ctx.theta_value / math.sqrt(ctx.q) * 0.5 * complex(e[0] - e[1])


# -- hybrid ----------------------------------------------------------------

STRADDLE_FACTOR = 16

def _natural_target(entries: list, den: int, q_stop: int) -> int:
    """Largest usable q_J: convergents shared with nearby irrationals, below q_stop."""
    best = entries[0][1]
    for _, q in entries:
        if q * q > den or q > q_stop:
            break
        best = q
    return best


def f_eval_hybrid(x, T: int, n_terms: int | None = None, C: float = DEFAULT_C,
                  q_stop: int = DEFAULT_Q_STOP, naive_cap: int = NAIVE_CAP) -> EvalResult:
    """F_N(x) from naive terms n < q_j* (first q_j >= T) plus renormalized blocks.

    With ``n_terms=None`` the target N is the largest convergent denominator
    q_J with q_J^2 <= den(x) and q_J <= q_stop.  The error bound adds C q_j^{-1/2}
    for every renormalized block (twice for a split final block).  When the
    block straddling T is long (q_j* >= 16 T) the terms T <= n < q_j* use the
    exponential-integral main term, with bound C (q_{j*-1}^{1/2}/T + q_j*^{-1/2}).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    x = as_rational(x)
    entries = []
    for pq in iter_convergents(x):
        entries.append(pq)
        if pq[1] > q_stop and (n_terms is None or pq[1] > n_terms):
            break
    N = _natural_target(entries, x.denominator, q_stop) if n_terms is None else int(n_terms)
    if N < 0:
        raise ValueError("N must be >= 0")

    start = next((j for j, (_, q) in enumerate(entries) if q >= T), None)
    if start is None or entries[start][1] > N:
        res = f_partial_naive(x, N, naive_cap)
        return EvalResult(res.value, res.error_bound, res.terms_used, HYBRID)

    q_first = entries[start][1]
    if start >= 1 and q_first >= STRADDLE_FACTOR * T:
        # q_{start-1} < T and the block reaching q_first is long: renormalize from T
        ctx = block_context(x, start - 1, ConvergentSeq(tuple(entries)))
        value = _range_sum(x, 1, T, 1) + straddle_main(ctx, T, q_first)
        bound = _rounding_bound(x, 1, T, 1) + C * (math.sqrt(ctx.q) / T + 1 / math.sqrt(q_first))
        terms = T - 1
    else:
        value = _range_sum(x, 1, q_first, 1)
        bound = _rounding_bound(x, 1, q_first, 1)
        terms = q_first - 1
    j = start
    # whole blocks [q_j, q_{j+1}) inside [1, N]
    while j + 1 < len(entries) and entries[j + 1][1] <= N:
        ctx = block_context(x, j, ConvergentSeq(tuple(entries)))
        value += _block_main(ctx, ctx.q)
        bound += C / math.sqrt(ctx.q)
        j += 1
    q_J = entries[j][1]
    rest = N - q_J + 1  # terms q_J <= n <= N
    if rest > 0:
        if rest <= max(T, 1) or j + 1 >= len(entries):
            value += _range_sum(x, q_J, N + 1, 1)
            bound += _rounding_bound(x, q_J, N + 1, 1)
            terms += rest
        else:
            ctx = block_context(x, j, ConvergentSeq(tuple(entries)))
            value += _block_main(ctx, q_J) - _block_main(ctx, N + 1)
            bound += 2 * C / math.sqrt(q_J)
    return EvalResult(value, bound, terms, HYBRID, "empirical-constant")


# -- proxy series ------------------------------------------------------------

@dataclass
class ProxyTrace:
    """Terms (1/2) theta_j q_j^{-1/2} log(q_{j+1}/q_j), j = 0, 1, ...

    ``terms[j]`` is None where theta_j is unknown (q_j only known in log scale).
    """

    terms: list
    abs_terms: list
    log_ratios: list
    partial_sums: list = field(default_factory=list)


def proxy_terms(conv: ConvergentSeq, J: int | None = None) -> ProxyTrace:
    n = len(conv) - 1 if J is None else J
    if n > len(conv) - 1:
        raise ValueError(f"proxy through j={n - 1} needs {n + 1} convergents")
    terms, abs_terms, ratios, sums = [], [], [], []
    running = 0j
    known = True
    for j in range(n):
        ratio = conv.log_q(j + 1) - conv.log_q(j)
        ratios.append(ratio)
        if conv.is_exact(j):
            p, q = conv.entries[j]
            th = gauss_sum_fast(p, q)
            t = 0j if th.q_class == TWO_MOD_FOUR else 0.5 * th.value / math.sqrt(q) * ratio
            terms.append(t)
            abs_terms.append(math.sqrt(th.claimed_mod_sq / q) * ratio)
        else:
            terms.append(None)
            abs_terms.append(math.sqrt(2) * math.exp(-0.5 * conv.log_q(j)) * ratio)
        if terms[-1] is None:
            known = False
        if known:
            running += terms[-1]
            sums.append(running)
    return ProxyTrace(terms, abs_terms, ratios, sums)


def proxy_series(conv: ConvergentSeq, J: int | None = None) -> list:
    """Partial sums of (1/2) sum_j theta_j q_j^{-1/2} log(q_{j+1}/q_j) starting at
    p_0/q_0 = a_0/1; stops at the first term whose theta_j is unknown."""
    return proxy_terms(conv, J).partial_sums


CONVERGES = "converges-absolutely"
DIVERGES = "diverges"
INCONCLUSIVE = "inconclusive"


@dataclass
class ConvergenceReport:
    partial_sums: list
    terms: list
    abs_bound: float
    tail_estimate: float
    max_quotient: float
    verdict: str

    def as_dict(self) -> dict:
        return {
            "partial_sums_re": [z.real for z in self.partial_sums],
            "partial_sums_im": [z.imag for z in self.partial_sums],
            "abs_bound": self.abs_bound,
            "tail_estimate": self.tail_estimate,
            "max_quotient": self.max_quotient,
            "verdict": self.verdict,
        }


def convergence_report(cf, J_max: int, growth: float = 10.0,
                       tol: float = 1e-3) -> ConvergenceReport:
    """Trace the proxy series and classify it conservatively.

    * ``diverges``: some computed term has modulus >= ``growth`` and is at
      least twice every earlier term (terms unbounded);
    * ``converges-absolutely``: if later quotients stay below the largest one
      seen, the remaining absolute series is below ``tol``;
    * otherwise ``inconclusive``.
    """
    if callable(cf):
        cf = synthetic_cf(cf, J_max)
    quotients = cf.quotients if isinstance(cf, ContinuedFraction) else tuple(cf)
    J = min(J_max, len(quotients) - 1)
    conv = convergents(quotients[:J + 1])
    trace = proxy_terms(conv, J)
    abs_bound = float(sum(trace.abs_terms))

    verdict = INCONCLUSIVE
    prev_max = 0.0
    for t in trace.terms:
        if t is None:
            continue
        if abs(t) >= growth and abs(t) >= 2 * prev_max:
            verdict = DIVERGES
        prev_max = max(prev_max, abs(t))

    log_quotients = [math.log(a) if isinstance(a, int) else a.log for a in quotients[1:J + 1]]
    max_logq = max(log_quotients) if log_quotients else 0.0
    tail = math.inf
    if conv.exact_count == len(conv) and J >= 1:
        # q_{j+2} >= 2 q_j, so sum_{j > J} q_j^{-1/2} <= 2 q_{J}^{-1/2} / (1 - 2^{-1/2})
        tail = (math.sqrt(2) / 2) * (max_logq + math.log(2)) * 2 \
            * math.exp(-0.5 * conv.log_q(J)) / (1 - 2**-0.5)
    if verdict != DIVERGES and tail <= tol:
        verdict = CONVERGES
    return ConvergenceReport(trace.partial_sums, trace.terms, abs_bound, tail,
                             math.exp(max_logq) if max_logq < 700 else math.inf, verdict)


# -- rational points -----------------------------------------------------------

def rational_divergence_slope(p: int, q: int, N_grid: Sequence[int]) -> tuple:
    """Least-squares slope of |F_N(p/q)| against log N; returns (slope, predicted)."""
    if math.gcd(p, q) != 1:
        raise ValueError("p/q must be irreducible")
    if q % 4 == 2:
        raise ValueError("no divergence claim when 4 | q - 2")
    grid = np.asarray(sorted(set(int(n) for n in N_grid)), dtype=np.int64)
    sums = partial_sums_at(Fraction(p % q, q), grid)
    slope = np.polyfit(np.log(grid.astype(float)), np.abs(sums), 1)[0]
    return float(slope), abs(gauss_sum_fast(p % q, q).value) / math.sqrt(q)
