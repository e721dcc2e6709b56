"""Explicit mean-oscillation bounds for gap Fourier series sum_n b_n e(nu_n x).

A :class:`SeriesSpec` fixes frequencies nu_n and coefficient bounds a_n >= |b_n|.
From them we build

    S_N = sum_{n<=N} a_n nu_n,    T_N = sum_{n>N} a_n^2 / M(n),

with M(n) = min(nu_n - nu_{n-1}, nu_{n+1} - nu_n) except M(N+1) = nu_{N+2} - nu_{N+1},
and the interval-length bound

    ||f||_I <= inf_N  4 pi eps S_N + (6 T_N / eps + 4 sum_{n>N} a_n^2)^{1/2},   eps = |I|.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import _kernels as K

NORM_I_CONSTANT = 3 * (12 * math.pi) ** (1 / 3)
HILBERT_CONSTANT = 1.5 * math.pi
DEFAULT_DIRECT_TERMS = 10**6


class MissingMajorant(ValueError):
    pass


class SeparationError(ValueError):
    pass


class ToleranceUnreachable(ValueError):
    pass


# -- series specifications ----------------------------------------------------------

@dataclass(frozen=True)
class SeriesSpec:
    """Frequencies nu_n and coefficient bounds a_n, n = 1, 2, ...

    ``freq``/``coeff`` are finite tuples or callables n -> value.  Infinite
    specs need ``tail_sq`` (L -> bound on sum_{n>L} a_n^2) and ``tail_t``
    (L -> bound on sum_{n>L} a_n^2 / M(n)).  ``twist_seed`` attaches random
    unimodular multipliers, b_n = a_n e(u_n).
    """

    freq: object
    coeff: object
    tail_sq: Callable | None = None
    tail_t: Callable | None = None
    family: tuple | None = None
    twist_seed: int | None = None
    label: str = ""

    # constructors
    @classmethod
    def power(cls, k: int, alpha: float = 1.0) -> "SeriesSpec":
        """nu_n = n^k, a_n = n^-alpha (needs 2 alpha > 1 and 2 alpha + k > 2)."""
        if k < 1 or 2 * alpha <= 1 or 2 * alpha + k <= 2:
            raise ValueError("need k >= 1, 2 alpha > 1 and 2 alpha + k > 2")

        def tail_sq(L):
            return L ** (1 - 2 * alpha) / (2 * alpha - 1)

        def tail_t(L):
            # M(n) >= k (n-1)^{k-1}, so a_n^2 / M(n) <= (n-1)^{1-k-2 alpha} / k
            return (L - 1) ** (2 - k - 2 * alpha) / (k * (k + 2 * alpha - 2)) if L > 1 else math.inf

        return cls(lambda n: n**k, lambda n: n ** -alpha, tail_sq, tail_t,
                   ("power", k, alpha), label=f"nu=n^{k}, a=n^-{alpha:g}")

    @classmethod
    def geometric(cls, base: int = 2, alpha: float = 1.0) -> "SeriesSpec":
        """nu_n = base^n, a_n = n^-alpha."""
        if base < 2 or 2 * alpha <= 1:
            raise ValueError("need base >= 2 and 2 alpha > 1")

        def tail_sq(L):
            return L ** (1 - 2 * alpha) / (2 * alpha - 1)

        def tail_t(L):
            # M(n) = base^{n-1}(base - 1), a_n <= 1
            return base ** -(L - 1) / (base - 1) ** 2 if L < 1000 else 0.0

        return cls(lambda n: base**n, lambda n: n ** -alpha, tail_sq, tail_t,
                   ("geometric", base, alpha), label=f"nu={base}^n, a=n^-{alpha:g}")

    @classmethod
    def finite(cls, freqs: Sequence[int], coeffs: Sequence, label: str = "") -> "SeriesSpec":
        spec = cls(tuple(int(v) for v in freqs), tuple(coeffs), label=label or "finite")
        if len(spec.freq) != len(spec.coeff) or not spec.freq:
            raise ValueError("freqs and coeffs must be non-empty and of equal length")
        spec._validate(spec.freq, np.asarray([float(c) for c in spec.coeff]))
        return spec

    def with_twist(self, seed: int) -> "SeriesSpec":
        return SeriesSpec(self.freq, self.coeff, self.tail_sq, self.tail_t, self.family,
                          seed, self.label + f" (twist seed {seed})")

    # access
    @property
    def is_finite(self) -> bool:
        return isinstance(self.freq, tuple)

    @property
    def length(self) -> int | None:
        return len(self.freq) if self.is_finite else None

    @staticmethod
    def _validate(nu, a) -> None:
        if nu[0] < 1 or any(y <= x for x, y in zip(nu, nu[1:])):
            raise ValueError("frequencies must be strictly increasing positive integers")
        if np.any(a <= 0):
            raise ValueError("coefficient bounds must be positive")

    def frequencies(self, L: int) -> list:
        """nu_1..nu_L as Python integers."""
        if self.is_finite:
            if L > len(self.freq):
                raise ValueError(f"spec has only {len(self.freq)} terms")
            return list(self.freq[:L])
        return [int(self.freq(n)) for n in range(1, L + 1)]

    def coefficients(self, L: int) -> np.ndarray:
        """a_1..a_L as floats."""
        if self.is_finite:
            return np.asarray([float(c) for c in self.coeff[:L]])
        if self.family is not None:
            return np.arange(1, L + 1, dtype=float) ** -self.family[2]
        return np.asarray([float(self.coeff(n)) for n in range(1, L + 1)])

    def twist(self, L: int) -> np.ndarray:
        """Unimodular multipliers e(u_n); all ones without a twist.  Prefix-stable in L."""
        if self.twist_seed is None:
            return np.ones(L, dtype=complex)
        u = np.random.default_rng(self.twist_seed).random(L)
        return np.exp(2j * np.pi * u)

    def gaps(self, L: int) -> np.ndarray:
        """g[i] = nu_{i+2} - nu_{i+1} for i = 0..L-2 (0-based), as floats."""
        if self.family is not None and self.family[0] == "power":
            k = self.family[1]
            n = np.arange(1, L, dtype=float)
            # (n+1)^k - n^k = sum_{i<k} C(k, i) n^i, a positive sum without cancellation
            return sum(math.comb(k, i) * n**i for i in range(k))
        if self.family is not None and self.family[0] == "geometric":
            b = self.family[1]
            with np.errstate(over="ignore"):
                return float(b - 1) * np.power(float(b), np.arange(1, L, dtype=float))
        nu = self.frequencies(L)
        return np.asarray([float(y - x) for x, y in zip(nu, nu[1:])])


# -- S_N, T_N, kappa ------------------------------------------------------------------

@dataclass
class BoundReport:
    S: list
    T: list
    tail_sq: list
    kappa: float | str = math.nan
    epsilon_grid: list = field(default_factory=list)
    per_eps_bound: list = field(default_factory=list)
    argmin_N: list = field(default_factory=list)
    boundary_min: list = field(default_factory=list)
    heuristic_N: list = field(default_factory=list)
    heuristic_bound: list = field(default_factory=list)
    inconclusive: bool = False
    label: str = "grid-estimate"

    @property
    def N_max(self) -> int:
        return len(self.S)

    def as_dict(self, sequences: bool = True) -> dict:
        d = {
            "kappa": self.kappa,
            "kappa_label": self.label,
            "inconclusive": self.inconclusive,
            "epsilon_grid": list(self.epsilon_grid),
            "per_eps_bound": list(self.per_eps_bound),
            "argmin_N": list(self.argmin_N),
            "boundary_min": list(self.boundary_min),
            "heuristic_N": list(self.heuristic_N),
            "heuristic_bound": list(self.heuristic_bound),
            "N_max": self.N_max,
        }
        if sequences:
            d.update(S=list(self.S), T=list(self.T), tail_sq=list(self.tail_sq))
        return d


def _st_exact(spec: SeriesSpec, N_max: int) -> BoundReport:
    nu = list(spec.freq)
    a = [Fraction(c) for c in spec.coeff]
    L = len(nu)

    def M(n, N):  # 1-based; finite-list ends use the single neighbouring gap
        if n == N + 1 and n + 1 <= L:
            return nu[n] - nu[n - 1]
        left = nu[n - 1] - nu[n - 2] if n >= 2 else None
        right = nu[n] - nu[n - 1] if n + 1 <= L else None
        return min(g for g in (left, right) if g is not None)

    S, T, tail = [], [], []
    s = Fraction(0)
    for N in range(1, N_max + 1):
        if N <= L:
            s += a[N - 1] * nu[N - 1]
        S.append(s)
        T.append(sum((a[n - 1] ** 2 / M(n, N) for n in range(N + 1, L + 1)), Fraction(0)))
        tail.append(sum((a[n - 1] ** 2 for n in range(N + 1, L + 1)), Fraction(0)))
    return BoundReport(S, T, tail)


def s_t_sequences(spec: SeriesSpec, N_max: int, direct_terms: int = DEFAULT_DIRECT_TERMS,
                  exact: bool = False) -> BoundReport:
    """S_N, T_N and sum_{n>N} a_n^2 for N = 1..N_max.

    Infinite specs are summed directly up to ``max(N_max + 2, direct_terms)``
    and closed with the analytic majorants, so T and the tail are upper bounds.
    ``exact=True`` (finite specs with rational coefficients) returns Fractions.
    """
    if N_max < 1:
        raise ValueError("N_max must be >= 1")
    if exact:
        if not spec.is_finite:
            raise ValueError("exact sequences need a finite spec")
        return _st_exact(spec, N_max)
    if spec.is_finite:
        L = len(spec.freq)
        extra = 0
    else:
        if spec.tail_sq is None or spec.tail_t is None:
            raise MissingMajorant("infinite rule-based spec needs tail majorants")
        L = max(N_max + 2, direct_terms)
        extra = 1  # nu_{L+1} for the last interior M(L)
    a = spec.coefficients(L)
    g = spec.gaps(L + extra)  # g[i] = nu_{i+2} - nu_{i+1}
    nu_f = _freq_floats(spec, L)

    a2 = a * a
    # M(n) for n = 2..L (0-based index n-1)
    if extra:
        M = np.minimum(g[:L - 1], g[1:L])
    else:
        M = np.minimum(g[:-1], g[1:]) if L > 2 else np.zeros(0)
        M = np.append(M, g[-1]) if L >= 2 else M
    u = np.zeros(L + 1)  # u[n], 1-based, zero past L
    if L >= 2:
        with np.errstate(divide="ignore", over="ignore"):
            u[2:L + 1] = a2[1:L] / M
    suffix_u = np.zeros(L + 2)
    suffix_u[:L + 1] = np.cumsum(u[::-1])[::-1]
    a2p = np.zeros(L + 2)
    a2p[1:L + 1] = a2
    suffix_a2 = np.zeros(L + 2)
    suffix_a2[:L + 1] = np.cumsum(a2p[:L + 1][::-1])[::-1]

    tail_t = 0.0 if spec.is_finite else float(spec.tail_t(L))
    tail_a2 = 0.0 if spec.is_finite else float(spec.tail_sq(L))

    N = np.arange(1, N_max + 1)
    # special term a_{N+1}^2 / (nu_{N+2} - nu_{N+1}); at the last index of a
    # finite list only nu_{N+1} - nu_N exists and is used instead
    special = np.zeros(N_max)
    has = N + 1 <= L
    n1 = N[has] + 1  # 1-based n = N + 1
    gi = np.where(n1 - 1 < len(g), n1 - 1, n1 - 2)
    with np.errstate(divide="ignore", over="ignore"):
        special[has] = a2[n1 - 1] / g[gi]
    rest = np.where(N + 2 <= L, suffix_u[np.minimum(N + 2, L + 1)], 0.0) + tail_t
    T = special + rest
    tail = suffix_a2[np.minimum(N + 1, L + 1)] + tail_a2
    S = np.cumsum(a[:min(L, N_max)] * nu_f[:min(L, N_max)])
    if len(S) < N_max:
        S = np.append(S, np.full(N_max - len(S), S[-1]))
    return BoundReport(S.tolist(), T.tolist(), tail.tolist())


def _freq_floats(spec: SeriesSpec, L: int) -> np.ndarray:
    if spec.family is not None and spec.family[0] == "power":
        return np.arange(1, L + 1, dtype=float) ** spec.family[1]
    if spec.family is not None and spec.family[0] == "geometric":
        with np.errstate(over="ignore"):
            return np.power(float(spec.family[1]), np.arange(1, L + 1, dtype=float))
    return np.asarray([float(v) for v in spec.frequencies(L)])


def default_epsilon_grid(points: int = 64, lo: float = 1e-6, hi: float = 1 - 1e-6) -> np.ndarray:
    return np.geomspace(lo, hi, points)


def _per_eps(S, T, tail, eps):
    with np.errstate(over="ignore", invalid="ignore"):
        vals = 4 * math.pi * eps * S + np.sqrt(6 * T / eps + 4 * tail)
    i = int(np.nanargmin(vals))
    return float(vals[i]), i


def kappa_bound(spec: SeriesSpec, epsilon_grid: Sequence[float] | None = None,
                N_max: int = 10**5, refine: bool = True,
                report: BoundReport | None = None) -> BoundReport:
    """Per-eps bounds inf_{N <= N_max}(...) and kappa-hat = their max over the grid.

    Each per-eps value bounds ||f||_I for every interval with |I| = eps.  The
    sup over eps is only a grid estimate; ``inconclusive`` flags minima sitting
    at N_max for infinite specs.
    """
    grid = default_epsilon_grid() if epsilon_grid is None else np.asarray(epsilon_grid, float)
    if np.any((grid <= 0) | (grid >= 1)):
        raise ValueError("epsilon grid must lie in (0, 1)")
    rep = report or s_t_sequences(spec, N_max)
    S, T, tail = (np.asarray(v, dtype=float) for v in (rep.S, rep.T, rep.tail_sq))
    grid = list(grid)

    def evaluate(eps_list):
        return [_per_eps(S, T, tail, e) for e in eps_list]

    res = evaluate(grid)
    if refine and len(grid) >= 3:
        i = int(np.argmax([v for v, _ in res]))
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        extra = [e for e in np.geomspace(lo, hi, 18)[1:-1] if e not in grid]
        grid = grid + extra
        res = res + evaluate(extra)
        order = np.argsort(grid)
        grid = [grid[k] for k in order]
        res = [res[k] for k in order]

    bounds = [v for v, _ in res]
    argmin = [i + 1 for _, i in res]
    nmax = len(S)
    boundary = [(not spec.is_finite) and n == nmax for n in argmin]
    h_N, h_b = [], []
    for e in grid:
        n = int(np.searchsorted(S, 1 / e, side="right"))  # S_n <= 1/eps < S_{n+1}
        n = min(max(n, 1), nmax)
        h_N.append(n)
        h_b.append(float(4 * math.pi * e * S[n - 1] + math.sqrt(6 * T[n - 1] / e + 4 * tail[n - 1])))
    kappa = max(bounds)
    rep.kappa = kappa if math.isfinite(kappa) else "unbounded-grid"
    rep.epsilon_grid = [float(e) for e in grid]
    rep.per_eps_bound = bounds
    rep.argmin_N = argmin
    rep.boundary_min = boundary
    rep.heuristic_N = h_N
    rep.heuristic_bound = h_b
    rep.inconclusive = any(boundary)
    return rep


def bound_at(report: BoundReport, eps: float) -> tuple:
    """(inf_N bound, argmin N) for a single interval length."""
    S, T, tail = (np.asarray(v, dtype=float) for v in (report.S, report.T, report.tail_sq))
    v, i = _per_eps(S, T, tail, eps)
    return v, i + 1


def simpl_statistics(report: BoundReport) -> dict:
    """max_N S_N T_N and max_N S_{N+1}/S_N over the computed range."""
    S = np.asarray(report.S, dtype=float)
    T = np.asarray(report.T, dtype=float)
    return {"max_S_T": float(np.max(S * T)),
            "max_S_ratio": float(np.max(S[1:] / S[:-1])) if len(S) > 1 else 1.0}


# -- Fefferman condition --------------------------------------------------------------

def fefferman_stat(coeffs, N: int, K_max: int | None = None) -> float:
    """sum_{j>=1} (sum_{jN <= k < (j+1)N} a_k)^2.

    ``coeffs`` maps k -> a_k >= 0: a dict, or a sequence with coeffs[k] = a_k
    (entry 0 unused).  Terms with k > K_max are dropped.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if isinstance(coeffs, dict):
        top = max(coeffs, default=0)
        arr = np.zeros(top + 1)
        for k, v in coeffs.items():
            if k >= 1:
                arr[k] = v
    else:
        arr = np.asarray(coeffs, dtype=float).copy()
    if np.any(arr < 0):
        raise ValueError("coefficients must be non-negative")
    if K_max is not None:
        arr = arr[:K_max + 1]
    arr = arr[N:]  # block j >= 1 starts at k = N
    if len(arr) == 0:
        return 0.0
    pad = (-len(arr)) % N
    blocks = np.concatenate([arr, np.zeros(pad)]).reshape(-1, N).sum(axis=1)
    return float(math.fsum(blocks * blocks))


def squares_coefficients(K_max: int) -> np.ndarray:
    """a_k = k^{-1/2} at perfect squares k = n^2 <= K_max, else 0."""
    arr = np.zeros(K_max + 1)
    n = np.arange(1, math.isqrt(K_max) + 1)
    arr[n * n] = 1.0 / n
    return arr


# -- gap parameter --------------------------------------------------------------------------

@dataclass
class GapResult:
    delta: float
    numeric_inf: float
    argmin_n: int
    limit: float | None
    inconclusive: bool


def gap_delta(spec: SeriesSpec, n_min: int = 1, n_max: int = 10**6) -> GapResult:
    """inf_{n >= n_min} (nu_{n+1}/nu_n - 1) / max(a_n, a_{n+1}).

    The numeric infimum over n < n_max is combined with the exact limit for
    the power and geometric families.
    """
    if spec.is_finite:
        n_max = min(n_max, len(spec.freq) - 1)
        if n_max < n_min:
            raise ValueError("finite spec too short")
    L = n_max + 1
    a = spec.coefficients(L)
    g = spec.gaps(L)
    nu = _freq_floats(spec, L)
    r = (g / nu[:-1]) / np.maximum(a[:-1], a[1:])
    r = r[n_min - 1:]
    i = int(np.argmin(r))
    numeric = float(r[i])
    limit = None
    if spec.family is not None:
        kind, par, alpha = spec.family
        if kind == "power":
            # ((1 + 1/n)^k - 1) n^alpha -> k n^{alpha-1}
            limit = float(par) if alpha == 1 else (math.inf if alpha < 1 else 0.0)
        else:
            limit = math.inf
    delta = numeric if limit is None else min(numeric, limit)
    near_end = i >= 0.9 * (len(r) - 1) and len(r) > 10
    inconclusive = delta <= 0 or (limit is None and near_end)
    return GapResult(delta, numeric, n_min + i, limit, inconclusive)


def norm_I_limit_bound(delta: float) -> float:
    """3 (12 pi)^{1/3} / delta: the small-interval bound on ||f||_I."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return NORM_I_CONSTANT / delta


# -- Hilbert inequality --------------------------------------------------------------------

def hilbert_check(lambdas, deltas, weights, rtol: float = 1e-9) -> tuple:
    """(|sum_{r != s} w_r conj(w_s) / (lambda_r - lambda_s)|, (3 pi/2) sum |w_r|^2 / delta_r).

    The double sum is purely imaginary (the matrix 1/(lambda_r - lambda_s) is
    antisymmetric); that is asserted before returning its modulus.
    """
    lam = np.asarray(lambdas, dtype=float)
    d = np.asarray(deltas, dtype=float)
    w = np.asarray(weights, dtype=complex)
    R = len(lam)
    if not (len(d) == R == len(w)):
        raise ValueError("lambdas, deltas and weights must have equal length")
    if np.any(d <= 0):
        raise SeparationError("separations must be positive")
    rhs = HILBERT_CONSTANT * float(np.sum(np.abs(w) ** 2 / d))
    if R < 2:
        return 0.0, rhs
    diff = lam[:, None] - lam[None, :]
    np.fill_diagonal(diff, np.inf)
    if np.any(np.abs(diff).min(axis=1) < d * (1 - 1e-12)):
        raise SeparationError("|lambda_r - lambda_s| >= delta_r violated")
    inv = 1.0 / diff
    total = complex(w @ inv @ np.conj(w))
    scale = float(np.abs(w) @ np.abs(inv) @ np.abs(w))
    assert abs(total.real) <= rtol * max(scale, 1.0), "bilinear sum not purely imaginary"
    return abs(total.imag), rhs


def random_hilbert_instance(rng: np.random.Generator, size: int | None = None,
                            span: int = 10**4) -> tuple:
    """Distinct random integers, delta_r = 1, complex Gaussian weights."""
    size = int(rng.integers(2, 200)) if size is None else size
    lam = np.sort(rng.choice(span, size=size, replace=False)).astype(float)
    w = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return lam, np.ones(size), w


def squares_hilbert_instance(R: int, rng: np.random.Generator | None = None) -> tuple:
    """lambda_r = r^2 with delta_r = M(r) (nearest gap), weights 1/r or random."""
    r = np.arange(1, R + 1, dtype=float)
    lam = r * r
    gaps = np.diff(lam)
    d = np.minimum(np.r_[np.inf, gaps], np.r_[gaps, np.inf])
    w = 1 / r if rng is None else rng.standard_normal(R) + 1j * rng.standard_normal(R)
    return lam, d, w.astype(complex)


# -- empirical mean oscillation -----------------------------------------------------------------

@dataclass
class NormEstimate:
    value: float
    quad_error: float
    trunc_error: float
    terms: int
    method: str
    nodes: int = 0

    @property
    def error(self) -> float:
        return self.quad_error + self.trunc_error

    def as_dict(self) -> dict:
        return {"value": self.value, "quad_error": self.quad_error,
                "trunc_error": self.trunc_error, "terms": self.terms,
                "method": self.method, "nodes": self.nodes}


def truncation_error(report: BoundReport, N: int, length: float) -> float:
    """Bound on | ||f||_I - ||f_N||_I | for |I| = length.

    ||g||_I <= (|I|^{-1} int_I |g|^2)^{1/2}, and for g = sum_{n>N} b_n e(nu_n x)
    the Hilbert inequality bounds the cross terms by (3/2) T_N / |I|.
    """
    if N >= report.N_max:
        raise ValueError("N beyond the computed sequences")
    return math.sqrt(report.tail_sq[N - 1] + 1.5 * report.T[N - 1] / length)


def _truncation_level(report: BoundReport, length: float, tol: float) -> int:
    tail = np.asarray(report.tail_sq)
    T = np.asarray(report.T)
    ok = np.nonzero(tail + 1.5 * T / length <= tol * tol)[0]
    if len(ok) == 0:
        raise ToleranceUnreachable(f"truncation error above {tol} for all N <= {report.N_max}")
    return int(ok[0]) + 1


def _trapezoid_osc(vals: np.ndarray) -> float:
    w = np.ones(len(vals))
    w[0] = w[-1] = 0.5
    w /= w.sum()
    mean = np.sum(w * vals)
    return float(np.sum(w * np.abs(vals - mean)))


def _exact_phases(nus: list, lo: Fraction) -> np.ndarray:
    a, b = lo.numerator, lo.denominator
    return np.asarray([((v * a) % b) / b for v in nus])


def empirical_norm_I(spec: SeriesSpec, lo, length: float, tol: float = 0.1,
                     report: BoundReport | None = None, seed: int = 0,
                     max_work: float = 4e9, mc_samples: int = 20000) -> NormEstimate:
    """||f||_I = |I|^{-1} int_I |f - f_I| on I = [lo, lo + length].

    f is truncated at the first N whose truncation bound is <= tol.  The
    truncated sum is integrated by the trapezoid rule on a uniform grid
    (about 16 nodes per shortest period), doubling the grid until the
    difference with the half grid is below tol/4; the quadrature error is
    that difference.  When the grid would be too expensive, stratified Monte
    Carlo with exact phases is used and the error is 3 standard errors.
    """
    if length <= 0:
        raise ValueError("length must be positive")
    lo = Fraction(lo)
    if report is None:
        n_req = spec.length if spec.is_finite else max(10**4, int(4 / tol**2))
        report = s_t_sequences(spec, n_req + (0 if spec.is_finite else 1))
    if spec.is_finite:
        N = spec.length
        trunc = 0.0
    else:
        N = _truncation_level(report, length, tol)
        trunc = truncation_error(report, N, length)
    nus = spec.frequencies(N)
    coeff = spec.coefficients(N) * spec.twist(N)
    phase0 = _exact_phases(nus, lo)
    cycles = float(nus[-1]) * length
    nodes = 1 << max(8, math.ceil(math.log2(max(16 * cycles, 1))))

    if N * nodes <= max_work:
        freq = np.asarray([float(v) for v in nus]) * length
        coarse = None
        while True:
            vals = K.series_uniform_grid(phase0, freq / nodes, coeff, nodes + 1)
            fine = _trapezoid_osc(vals)
            coarse = _trapezoid_osc(vals[::2])
            err = abs(fine - coarse)
            if err <= tol / 4 or 2 * N * nodes > max_work:
                return NormEstimate(fine, err, trunc, N, "trapezoid", nodes)
            nodes *= 2

    # stratified Monte Carlo with exact dyadic offsets
    rng = np.random.default_rng(seed)
    bits = max(int(nus[-1]).bit_length() + 64, 128)
    span = Fraction(length).limit_denominator(1 << 64)
    offs = [(Fraction(k) + Fraction(int(rng.integers(0, 1 << 53)), 1 << 53)) / mc_samples * span
            for k in range(mc_samples)]
    unit = 1 << bits
    dys = [int(o * unit) for o in offs]
    vals = np.zeros(mc_samples, dtype=complex)
    for n, (v, c, p0) in enumerate(zip(nus, coeff, phase0)):
        ph = np.asarray([((v * d) % unit) / unit for d in dys]) + p0
        vals += c * np.exp(2j * np.pi * ph)
    dev = np.abs(vals - vals.mean())
    return NormEstimate(float(dev.mean()), 3 * float(dev.std(ddof=1)) / math.sqrt(mc_samples),
                        trunc, N, "monte-carlo", mc_samples)


def random_interval_starts(count: int, seed: int, bits: int = 64) -> list:
    """Uniform dyadic left endpoints u / 2^bits in [0, 1)."""
    rng = np.random.default_rng(seed)
    return [Fraction(int(rng.integers(0, 1 << 62)) << (bits - 62), 1 << bits) for _ in range(count)]


# -- CLI spec strings --------------------------------------------------------------------------

_FREQ_POWER = re.compile(r"^n(?:\^(\d+))?$")
_FREQ_GEOM = re.compile(r"^(\d+)\^n$")
_COEFF = re.compile(r"^(?:1/n(?:\^([0-9.]+))?|n\^-([0-9.]+)|1/sqrt\(n\))$")


def parse_coeff_exponent(text: str) -> float:
    t = text.replace(" ", "")
    m = _COEFF.match(t)
    if not m:
        raise ValueError(f"unsupported coefficient rule {text!r}")
    if t == "1/sqrt(n)":
        return 0.5
    return float(m.group(1) or m.group(2) or 1.0)


def spec_from_strings(freq: str, coeff: str) -> SeriesSpec:
    """Parse rules like ``n^2``, ``2^n`` with ``1/n``, ``n^-0.75``, ``1/n^2``."""
    alpha = parse_coeff_exponent(coeff)
    f = freq.replace(" ", "")
    m = _FREQ_POWER.match(f)
    if m:
        return SeriesSpec.power(int(m.group(1) or 1), alpha)
    m = _FREQ_GEOM.match(f)
    if m:
        return SeriesSpec.geometric(int(m.group(1)), alpha)
    raise ValueError(f"unsupported frequency rule {freq!r}")
