"""Exact continued-fraction arithmetic on rationals.

Points are ``fractions.Fraction`` values; irrationals are represented by
long rational approximants (see :func:`sample_uniform`) or by quotient
generators (see :func:`synthetic_cf`).
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence, Union

LAST_NOT_ONE = "last-quotient-ne-1"
LAST_ONE = "last-quotient-eq-1"
CONVENTIONS = (LAST_NOT_ONE, LAST_ONE)

DEFAULT_BIT_BUDGET = 2**20
DEFAULT_GRID_BITS = 256


class BudgetExceeded(ArithmeticError):
    """Exact arithmetic was requested past the configured bit budget."""


def bit_budget() -> int:
    env = os.environ.get("WEYLAB_BITBUDGET")
    return int(env) if env else DEFAULT_BIT_BUDGET


@dataclass(frozen=True)
class LogScale:
    """A positive integer too large to materialize, known through its natural log."""

    log: float

    def __repr__(self) -> str:
        return f"LogScale(log={self.log!r})"


Quotient = Union[int, LogScale]


def _log(v: Quotient) -> float:
    if isinstance(v, LogScale):
        return v.log
    return math.log(v) if v > 0 else -math.inf


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi, lo = max(a, b), min(a, b)
    if hi == math.inf:
        return math.inf
    return hi + math.log1p(math.exp(lo - hi))


def as_rational(x) -> Fraction:
    """Parse ``"num/den"`` strings, ints or Fractions into a reduced Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def rational_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class ContinuedFraction:
    quotients: tuple
    convention: str = LAST_NOT_ONE

    def __post_init__(self):
        if self.convention not in CONVENTIONS:
            raise ValueError(f"unknown convention {self.convention!r}")
        qs = self.quotients
        if not qs:
            raise ValueError("a continued fraction needs at least a_0")
        for a in qs[1:]:
            if isinstance(a, int) and a < 1:
                raise ValueError("partial quotients a_j (j >= 1) must be >= 1")

    def __len__(self):
        return len(self.quotients)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(a, int) for a in self.quotients)

    def value(self) -> Fraction:
        if not self.is_exact:
            raise BudgetExceeded("continued fraction has log-scale quotients")
        p, q = 1, 0
        p_prev, q_prev = 0, 1
        for a in self.quotients:
            p, p_prev = a * p + p_prev, p
            q, q_prev = a * q + q_prev, q
        return Fraction(p, q)


def iter_quotients(x: Fraction) -> Iterator[int]:
    """Euclidean algorithm; yields a_0, a_1, ... with the last quotient >= 2."""
    num, den = x.numerator, x.denominator
    while den:
        a, r = divmod(num, den)
        yield a
        num, den = den, r


def cf_of_rational(x, convention: str = LAST_NOT_ONE) -> ContinuedFraction:
    x = as_rational(x)
    if not 0 <= x < 1:
        raise ValueError("points must lie in [0, 1)")
    qs = list(iter_quotients(x))
    if convention == LAST_ONE and len(qs) > 1 and qs[-1] > 1:
        qs[-1] -= 1
        qs.append(1)
    return ContinuedFraction(tuple(qs), convention)


def partial_quotient(x: Fraction, j: int) -> int | None:
    """a_j(x) under the default convention, or None if the expansion is shorter."""
    for i, a in enumerate(iter_quotients(x)):
        if i == j:
            return a
    return None


@dataclass(frozen=True)
class ConvergentSeq:
    """Convergents p_j/q_j, j = 0, 1, ...; entries past the bit budget are log-scale."""

    entries: tuple
    log_scale_tail: tuple = ()

    def __len__(self):
        return len(self.entries) + len(self.log_scale_tail)

    @property
    def exact_count(self) -> int:
        return len(self.entries)

    def q(self, j: int) -> int:
        return self.entries[j][1]

    def log_q(self, j: int) -> float:
        if j < len(self.entries):
            return math.log(self.entries[j][1])
        return self.log_scale_tail[j - len(self.entries)][1]

    def is_exact(self, j: int) -> bool:
        return j < len(self.entries)

    @property
    def qs(self) -> list:
        return [q for _, q in self.entries]


def convergents(cf, J: int | None = None, budget: int | None = None,
                exact: bool = False) -> ConvergentSeq:
    """Convergents of ``cf`` (a ContinuedFraction or a sequence of quotients).

    Entries whose denominator would exceed ``budget`` bits switch to log scale;
    with ``exact=True`` that raises :class:`BudgetExceeded` instead.
    """
    quotients = cf.quotients if isinstance(cf, ContinuedFraction) else tuple(cf)
    if J is None:
        J = len(quotients)
    if J > len(quotients):
        raise ValueError(f"requested {J} convergents from {len(quotients)} quotients")
    budget = bit_budget() if budget is None else budget

    entries = []
    tail = []
    # (p, q) = (p_{-1}, q_{-1}), (p_prev, q_prev) = (p_{-2}, q_{-2})
    p, q, p_prev, q_prev = 1, 0, 0, 1
    in_log = False
    lp = lq = lp_prev = lq_prev = 0.0
    for a in quotients[:J]:
        if not in_log and isinstance(a, int):
            np_, nq = a * p + p_prev, a * q + q_prev
            if nq.bit_length() <= budget:
                p, p_prev, q, q_prev = np_, p, nq, q
                entries.append((p, q))
                continue
            if exact:
                raise BudgetExceeded(f"denominator needs {nq.bit_length()} bits > {budget}")
        elif not in_log and exact:
            raise BudgetExceeded("log-scale quotient in exact mode")
        if not in_log:
            in_log = True
            lp, lq = _log(p), _log(q)
            lp_prev, lq_prev = _log(p_prev), _log(q_prev)
        la = _log(a)
        lp, lp_prev = _logaddexp(la + lp, lp_prev), lp
        lq, lq_prev = _logaddexp(la + lq, lq_prev), lq
        tail.append((lp, lq))
    return ConvergentSeq(tuple(entries), tuple(tail))


def iter_convergents(x: Fraction) -> Iterator[tuple]:
    """Lazy exact convergents (p_j, q_j) of a rational, j = 0, 1, ..."""
    p, p_prev, q, q_prev = 1, 0, 0, 1
    for a in iter_quotients(x):
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        yield p, q


@dataclass(frozen=True)
class FundamentalInterval:
    """I_{p/q}: points whose expansion starts with ``prefix``; endpoints excluded."""

    prefix: tuple
    lo: Fraction
    hi: Fraction
    q: int
    q_prev: int

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    @property
    def j0(self) -> int:
        return len(self.prefix) - 1

    @property
    def p_over_q(self) -> Fraction:
        return ContinuedFraction(self.prefix).value()

    def contains(self, x: Fraction) -> bool:
        return self.lo < x < self.hi


@dataclass(frozen=True)
class SubInterval:
    """An arbitrary interval (lo, hi) inside a fundamental interval with denominator q."""

    lo: Fraction
    hi: Fraction
    q: int

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x: Fraction) -> bool:
        return self.lo < x < self.hi


def interval_of_prefix(prefix: Sequence[int]) -> FundamentalInterval:
    prefix = tuple(int(a) for a in prefix)
    if not prefix or prefix[0] != 0:
        raise ValueError("prefix must start with a_0 = 0")
    p, p_prev, q, q_prev = 1, 0, 0, 1
    for a in prefix:
        if a < 0:
            raise ValueError("negative partial quotient")
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
    # x = (p t + p_prev) / (q t + q_prev), t in (1, inf)
    end_a = Fraction(p, q)
    end_b = Fraction(p + p_prev, q + q_prev)
    lo, hi = min(end_a, end_b), max(end_a, end_b)
    return FundamentalInterval(prefix, lo, hi, q, q_prev)


def fundamental_interval(p_over_q, convention: str = LAST_NOT_ONE) -> FundamentalInterval:
    cf = cf_of_rational(as_rational(p_over_q), convention)
    return interval_of_prefix(cf.quotients)


def _uniform_index(seed: int, index: int, grid_bits: int) -> int:
    nbytes = (grid_bits + 7) // 8
    mask = (1 << grid_bits) - 1
    salt = 0
    while True:
        msg = f"{seed}:{index}:{salt}".encode()
        u = int.from_bytes(hashlib.shake_256(msg).digest(nbytes), "big") & mask
        if u:
            return u
        salt += 1


def sample_uniform(interval, seed: int, index: int = 0,
                   grid_bits: int = DEFAULT_GRID_BITS) -> Fraction:
    """Draw ``index`` of the stream keyed by ``seed``: lo + u (hi - lo) / 2^grid_bits.

    u is uniform on {1, ..., 2^grid_bits - 1}, derived from SHAKE-256 of
    (seed, index), so any index range can be drawn independently.
    """
    if grid_bits < 64:
        raise ValueError("grid_bits must be >= 64")
    u = _uniform_index(seed, index, grid_bits)
    return interval.lo + (interval.hi - interval.lo) * Fraction(u, 1 << grid_bits)


def sample_batch(interval, seed: int, count: int, start: int = 0,
                 grid_bits: int = DEFAULT_GRID_BITS) -> list:
    return [sample_uniform(interval, seed, i, grid_bits) for i in range(start, start + count)]


QuotientRule = Callable[[int, Quotient], Quotient]


def synthetic_cf(rule: QuotientRule, J: int, budget: int | None = None) -> ContinuedFraction:
    """Materialize [0; a_1, ..., a_J] with a_j = rule(j, q_{j-1}).

    ``q_{j-1}`` is passed as an int while it fits in the bit budget and as a
    :class:`LogScale` afterwards; the rule may answer with either.
    """
    budget = bit_budget() if budget is None else budget
    quotients = [0]
    q, q_prev = 1, 0
    lq, lq_prev = 0.0, -math.inf
    exact = True
    for j in range(1, J + 1):
        a = rule(j, q if exact else LogScale(lq))
        if isinstance(a, int) and a < 1:
            raise ValueError(f"rule produced a_{j} = {a} < 1")
        quotients.append(a)
        if exact and isinstance(a, int):
            nq = a * q + q_prev
            if nq.bit_length() <= budget:
                q, q_prev = nq, q
                lq, lq_prev = math.log(q), lq
                continue
        if exact:
            exact = False
            lq, lq_prev = _log(q), _log(q_prev)
        lq, lq_prev = _logaddexp(_log(a) + lq, lq_prev), lq
    return ContinuedFraction(tuple(quotients))


def tower_rule(base: int = 10) -> QuotientRule:
    """a_1 = base, a_{j+1} = ceil(base^{q_j} / q_j): denominators grow like base^^j."""

    def rule(j: int, q_prev: Quotient) -> Quotient:
        if j == 1:
            return base
        if isinstance(q_prev, int) and q_prev * math.log2(base) <= bit_budget():
            return -(-base**q_prev // q_prev)
        lq = _log(q_prev)
        try:
            return LogScale(math.exp(lq) * math.log(base) - lq)
        except OverflowError:
            return LogScale(math.inf)

    return rule
