from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from collatz_lab import cascade_renewal as cr


def test_markov_chain():
    cm = cr.cascade_markov()
    assert cm.rho == Fraction(3, 4)
    assert list(cm.fundamental.row_sums()) == [4, 3, 5]
    assert cm.q3 == Fraction(1, 3)
    assert cm.expected_S == 5


def test_pgf_two_routes():
    for z in (Fraction(0), Fraction(1, 3), Fraction(1, 2), Fraction(1)):
        assert cr.cascade_pgf(z) == cr.cascade_pgf_markov(z)
    assert cr.cascade_pgf(1) == 1
    assert cr.pgf_mean() == 5


def test_pgf_coefficients_sum():
    cs = cr.pgf_coefficients(150)
    assert all(c >= 0 for c in cs)
    assert 0 < 1 - sum(cs) < Fraction(1, 10**9)


def test_pgf_singularity():
    ps = cr.pgf_singularity()
    lo, hi = ps.interval
    assert lo * lo + 2 * lo - 4 <= 0 <= hi * hi + 2 * hi - 4
    assert abs(ps.alpha - 0.305758) < 1e-6


def test_two_thirds():
    for j in range(0, 4):
        assert cr.two_thirds_census(j) == Fraction(2, 3)


@given(st.integers(0, 8), st.integers(0, 1000))
def test_post_recovery_branch(j, t):
    assert cr.post_recovery_branch(j, t) == (3 if t % 2 else 1)


def test_gap_first_valuation():
    assert [cr.gap_first_valuation(j) for j in range(6)] == [4, 3, 4, 3, 4, 3]


def test_gap_compensation_monotone():
    for j in range(4):
        assert cr.gap_compensation(j, 0).compensated


def test_uniform_fibers():
    for path in ((2,), (2, 3), (2, 2, 4)):
        assert cr.uniform_fiber_check(path, 6)


def test_t10_and_gap():
    ss = cr.fiber_spectral_summary(10)
    assert abs(ss.gamma - 0.85486) < 1e-4
    assert abs(float(ss.tv_uniform) - 0.042503) < 1e-5
    assert all(s == 1 for s in ss.T.row_sums())


def test_fiber_matrix_range():
    with pytest.raises(ValueError):
        cr.fiber_transition_matrix(5)
