from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collatz_lab.exact_arith import (Polynomial, RationalMatrix, ceil_log2_pow3, char_poly, floor_log2_pow3,
                                     mod_inverse_pow2, perron_root, stationary_distribution, tv_distance, v2)


def test_v2_basic():
    assert v2(1) == 0
    assert v2(48) == 4
    assert v2(-8) == 3
    with pytest.raises(ValueError):
        v2(0)


@given(st.integers(min_value=1, max_value=10**30), st.integers(min_value=0, max_value=80))
def test_v2_of_scaled_odd(m, k):
    odd = 2 * m + 1
    assert v2(odd << k) == k


@given(st.integers(min_value=0, max_value=10**12), st.integers(min_value=1, max_value=64))
def test_mod_inverse(a, e):
    a = 2 * a + 1
    assert (a * mod_inverse_pow2(a, e)) % (1 << e) == 1


def test_mod_inverse_even_rejected():
    with pytest.raises(ValueError):
        mod_inverse_pow2(6, 4)


@given(st.integers(min_value=0, max_value=400))
def test_log2_pow3_bracket(t):
    lo, hi = floor_log2_pow3(t), ceil_log2_pow3(t)
    assert 2**lo <= 3**t
    assert 2 ** (lo + 1) > 3**t
    if t:
        assert hi == lo + 1


def test_polynomial_arithmetic():
    p = Polynomial([1, 1])  # 1 + x
    q = p * p
    assert q.coeffs == (1, 2, 1)
    d, r = q.divmod(p)
    assert d == p and r.is_zero()


def test_char_poly_and_perron_exact():
    m = RationalMatrix([[Fraction(1, 2), Fraction(1, 2)], [Fraction(1, 4), Fraction(3, 4)]])
    p = char_poly(m)
    assert p(1) == 0
    pr = perron_root(m)
    assert pr.exact == 1
    assert abs(pr.float_check - 1) < 1e-9


def test_perron_irrational_interval():
    m = RationalMatrix([[1, 1], [1, 0]])
    pr = perron_root(m)
    assert pr.exact is None
    lo, hi = pr.interval
    phi = (1 + 5**0.5) / 2
    assert float(lo) <= phi <= float(hi)


def test_perron_rejects_negative():
    with pytest.raises(ValueError):
        perron_root(RationalMatrix([[1, -1], [0, 1]]))


@given(st.lists(st.integers(min_value=0, max_value=9), min_size=9, max_size=9))
def test_perron_matches_numpy(xs):
    if sum(xs) == 0:
        return
    m = RationalMatrix([xs[0:3], xs[3:6], xs[6:9]])
    pr = perron_root(m)
    ref = max(abs(np.linalg.eigvals(m.to_numpy())))
    assert abs(pr.value - ref) < 1e-6 * max(1, ref)


def test_stationary_distribution():
    m = RationalMatrix([[Fraction(1, 2), Fraction(1, 2)], [Fraction(1, 4), Fraction(3, 4)]])
    pi = stationary_distribution(m)
    assert pi == [Fraction(1, 3), Fraction(2, 3)]
    assert tv_distance(pi, [Fraction(1, 2)] * 2) == Fraction(1, 6)
