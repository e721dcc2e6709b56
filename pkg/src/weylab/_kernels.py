"""Compiled inner loops for exponential sums.

Two phase representations for e(n^2 x), x = a/b:

* ``b < 2^31``: the reduced argument (n^2 a mod b) is formed exactly in int64
  and divided by b once, so the phase is the correctly rounded double.
* otherwise: x is held as the 128-bit fixed-point X = floor(x 2^128) split into
  two uint64 words; n^2 X mod 2^128 is formed with 32-bit partial products and
  its top word gives frac(n^2 x) with absolute error below 2^-63 (n < 2^32).

Sums use Kahan compensation in index order, so results do not depend on how
a caller splits a range.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi
SMALL_DEN = 2**31
MAX_N = 2**32

_M32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_INV64 = 2.0**-64


@njit(cache=True)
def _mulhi(a, b):
    a0 = a & _M32
    a1 = a >> _S32
    b0 = b & _M32
    b1 = b >> _S32
    p00 = a0 * b0
    p01 = a0 * b1
    p10 = a1 * b0
    p11 = a1 * b1
    mid = (p00 >> _S32) + (p01 & _M32) + (p10 & _M32)
    return p11 + (p01 >> _S32) + (p10 >> _S32) + (mid >> _S32)


@njit(cache=True)
def _frac_fixed(n, xhi, xlo):
    s = np.uint64(n) * np.uint64(n)
    top = s * xhi + _mulhi(s, xlo)
    return float(top) * _INV64


@njit(cache=True)
def _frac_small(n, a, b):
    r = (n * n) % b
    r = (r * a) % b
    return r / b


@njit(cache=True)
def range_sum_small(a, b, m, stop, power):
    """sum_{m <= n < stop} e(n^2 a/b) / n^power for b < 2^31."""
    sr = 0.0
    si = 0.0
    cr = 0.0
    ci = 0.0
    for n in range(m, stop):
        t = TWO_PI * _frac_small(n, a, b)
        w = 1.0 / n if power == 1 else 1.0
        yr = math.cos(t) * w - cr
        tr = sr + yr
        cr = (tr - sr) - yr
        sr = tr
        yi = math.sin(t) * w - ci
        ti = si + yi
        ci = (ti - si) - yi
        si = ti
    return sr, si


@njit(cache=True)
def range_sum_fixed(xhi, xlo, m, stop, power):
    """sum_{m <= n < stop} e(n^2 x) / n^power with x in 128-bit fixed point."""
    sr = 0.0
    si = 0.0
    cr = 0.0
    ci = 0.0
    for n in range(m, stop):
        t = TWO_PI * _frac_fixed(n, xhi, xlo)
        w = 1.0 / n if power == 1 else 1.0
        yr = math.cos(t) * w - cr
        tr = sr + yr
        cr = (tr - sr) - yr
        sr = tr
        yi = math.sin(t) * w - ci
        ti = si + yi
        ci = (ti - si) - yi
        si = ti
    return sr, si


@njit(cache=True)
def phases_small(a, b, m, stop):
    out = np.empty(stop - m)
    for i in range(stop - m):
        out[i] = _frac_small(m + i, a, b)
    return out


@njit(cache=True)
def phases_fixed(xhi, xlo, m, stop):
    out = np.empty(stop - m)
    for i in range(stop - m):
        out[i] = _frac_fixed(m + i, xhi, xlo)
    return out


@njit(cache=True)
def cumulative_small(a, b, checkpoints, power):
    """Partial sums sum_{1 <= n <= c} at each (sorted) checkpoint c."""
    out = np.empty(len(checkpoints), dtype=np.complex128)
    sr = 0.0
    si = 0.0
    start = 1
    for k in range(len(checkpoints)):
        dr, di = range_sum_small(a, b, start, checkpoints[k] + 1, power)
        sr += dr
        si += di
        start = checkpoints[k] + 1
        out[k] = complex(sr, si)
    return out


@njit(cache=True)
def cumulative_fixed(xhi, xlo, checkpoints, power):
    out = np.empty(len(checkpoints), dtype=np.complex128)
    sr = 0.0
    si = 0.0
    start = 1
    for k in range(len(checkpoints)):
        dr, di = range_sum_fixed(xhi, xlo, start, checkpoints[k] + 1, power)
        sr += dr
        si += di
        start = checkpoints[k] + 1
        out[k] = complex(sr, si)
    return out


@njit(cache=True)
def series_uniform_grid(phase0, step, coeff, K):
    """f[k] = sum_n coeff[n] e(phase0[n] + k step[n]) for k = 0..K-1.

    Rotation recurrence along k, re-anchored every 256 nodes.
    """
    out = np.zeros(K, dtype=np.complex128)
    for n in range(len(coeff)):
        c = coeff[n]
        w = complex(math.cos(TWO_PI * step[n]), math.sin(TWO_PI * step[n]))
        z = complex(0.0, 0.0)
        for k in range(K):
            if k % 256 == 0:
                t = phase0[n] + k * step[n]
                t -= math.floor(t)
                z = c * complex(math.cos(TWO_PI * t), math.sin(TWO_PI * t))
            out[k] += z
            z *= w
    return out


@njit(cache=True)
def series_at_nodes(phase0, freq, coeff, nodes):
    """f[k] = sum_n coeff[n] e(phase0[n] + freq[n] nodes[k])."""
    K = len(nodes)
    out = np.zeros(K, dtype=np.complex128)
    for n in range(len(coeff)):
        c = coeff[n]
        for k in range(K):
            t = phase0[n] + freq[n] * nodes[k]
            t -= math.floor(t)
            out[k] += c * complex(math.cos(TWO_PI * t), math.sin(TWO_PI * t))
    return out
