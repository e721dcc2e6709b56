from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from weylab.gauss_sums import (FOUR_DIVIDES, ODD, TWO_MOD_FOUR, gauss_modulus_class,
                               gauss_sum_direct, gauss_sum_fast, gauss_sums_all, q_class, theta)


def test_small_values():
    assert theta(1, 4) == 1 + 1j
    assert theta(0, 1) == 1
    assert abs(theta(1, 3)) == pytest.approx(1)
    assert theta(1, 2) == 0
    assert gauss_sum_direct(1, 4).value == pytest.approx(1 + 1j)


def test_classes():
    assert [q_class(q) for q in (4, 3, 6)] == [FOUR_DIVIDES, ODD, TWO_MOD_FOUR]
    assert [gauss_modulus_class(q) for q in (8, 9, 10)] == [2, 1, 0]


def test_rejects_non_coprime():
    with pytest.raises(ValueError):
        gauss_sum_fast(2, 4)
    with pytest.raises(ValueError):
        gauss_sum_direct(3, 9)


def test_fast_matches_direct_all_small_moduli():
    for q in range(1, 300):
        batch = gauss_sums_all(q)
        for p in range(q):
            if math.gcd(p, q) != 1:
                continue
            f = gauss_sum_fast(p, q).value
            assert abs(f - batch[p]) < 1e-9, (p, q)


@given(st.integers(1, 10**5).flatmap(lambda q: st.tuples(st.integers(0, q - 1), st.just(q))))
def test_fast_matches_direct_random(pq):
    p, q = pq
    if math.gcd(p, q) != 1:
        return
    f, d = gauss_sum_fast(p, q), gauss_sum_direct(p, q)
    assert abs(f.re - d.re) <= 1e-9 and abs(f.im - d.im) <= 1e-9


@given(st.integers(1, 10**30), st.integers(1, 10**30))
def test_modulus_class_holds_for_huge_moduli(p, q):
    if math.gcd(p, q) != 1:
        return
    v = gauss_sum_fast(p, q)
    assert v.mod_sq == v.claimed_mod_sq == gauss_modulus_class(q)


def test_periodic_in_p():
    q = 1155
    for p in (2, 4, 13):
        assert gauss_sum_fast(p, q).value == gauss_sum_fast(p + 7 * q, q).value
