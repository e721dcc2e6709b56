"""Normalized quadratic Gauss sums theta_{p/q} = q^{-1/2} sum_{n<q} e(p n^2 / q).

``gauss_sum_direct`` sums the definition (the oracle); ``gauss_sum_fast``
evaluates the closed form through the 2-power/odd splitting and the Jacobi
symbol, and is validated against the oracle in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2
import numpy as np

DIRECT_CAP = 10**7

FOUR_DIVIDES = "four-divides"
ODD = "odd"
TWO_MOD_FOUR = "two-mod-four"


def q_class(q: int) -> str:
    if q % 4 == 0:
        return FOUR_DIVIDES
    if q % 2:
        return ODD
    return TWO_MOD_FOUR


def gauss_modulus_class(q: int) -> int:
    """|theta_{p/q}|^2: 2 if 4 | q, 1 if q is odd, 0 otherwise."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return {FOUR_DIVIDES: 2, ODD: 1, TWO_MOD_FOUR: 0}[q_class(q)]


@dataclass(frozen=True)
class GaussSumValue:
    re: float
    im: float
    q_class: str
    claimed_mod_sq: int

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    @property
    def mod_sq(self) -> float:
        return self.re * self.re + self.im * self.im

    def as_dict(self) -> dict:
        return {"re": self.re, "im": self.im, "mod_sq": self.mod_sq, "class": self.q_class}


def _make(re: float, im: float, q: int) -> GaussSumValue:
    return GaussSumValue(float(re), float(im), q_class(q), gauss_modulus_class(q))


def _check(p: int, q: int) -> None:
    if q < 1:
        raise ValueError("q must be >= 1")
    if math.gcd(p, q) != 1:
        raise ValueError(f"gcd({p}, {q}) != 1")


def gauss_sum_direct(p: int, q: int, cap: int = DIRECT_CAP) -> GaussSumValue:
    """O(q) summation; p n^2 is reduced mod q in integer arithmetic before e(.)."""
    _check(p, q)
    if q > cap:
        raise ValueError(f"q = {q} above the direct-summation cap {cap}")
    n = np.arange(q, dtype=np.int64)
    r = (n * n) % q
    r = (r * (p % q)) % q if q < 2**31 else np.array([(p * int(v)) % q for v in r], dtype=np.int64)
    phase = 2.0 * np.pi * (r / q)
    s = complex(np.cos(phase).sum(), np.sin(phase).sum()) / math.sqrt(q)
    return _make(s.real, s.imag, q)


def gauss_sums_all(q: int) -> np.ndarray:
    """theta_{p/q} for every p in 0..q-1 by direct summation grouped by residue.

    sum_n e(p n^2/q) = sum_r c_r e(p r/q) with c_r = #{n < q : n^2 = r mod q},
    which is one length-q DFT of the residue histogram.  Entries with
    gcd(p, q) > 1 are returned as computed but are not normalized Gauss sums.
    """
    n = np.arange(q, dtype=np.int64)
    counts = np.bincount((n * n) % q, minlength=q).astype(float)
    return np.fft.ifft(counts) * q / math.sqrt(q)


def _odd_part_unit(b: int, m: int) -> tuple:
    """G(b; m)/sqrt(m) for odd m as (re, im) integers: (b/m) * (1 or i)."""
    if m == 1:
        return 1, 0
    s = int(gmpy2.jacobi(b % m, m))
    return (s, 0) if m % 4 == 1 else (0, s)


def _two_part_unit(c: int, k: int) -> tuple:
    """G(c; 2^k)/2^{k/2} for odd c as (re, im) integers."""
    if k == 0:
        return 1, 0
    if k == 1:
        return 0, 0
    # (1 + i^c) * (2/c)^k
    re, im = (1, 1) if c % 4 == 1 else (1, -1)
    if k % 2 and c % 8 in (3, 5):
        re, im = -re, -im
    return re, im


def gauss_sum_fast(p: int, q: int) -> GaussSumValue:
    """Closed form in O(log q): q = 2^k m, G(p; q) = G(p m; 2^k) G(p 2^k; m)."""
    _check(p, q)
    k = (q & -q).bit_length() - 1
    m = q >> k
    a_re, a_im = _two_part_unit((p * m) % (1 << (k + 3)) if k else 1, k)
    b_re, b_im = _odd_part_unit(p << k, m)
    re = a_re * b_re - a_im * b_im
    im = a_re * b_im + a_im * b_re
    return _make(re, im, q)


def theta(p: int, q: int) -> complex:
    """theta_{p/q} as a complex number (fast path)."""
    return gauss_sum_fast(p, q).value
