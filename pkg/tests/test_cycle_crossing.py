import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from collatz_lab import cycle_crossing as cc
from collatz_lab.exact_arith import v2


@given(st.integers(0, 6), st.integers(2, 9), st.integers(0, 200))
def test_threshold_matches_endpoint(L, r, k):
    cls = cc.cycle_class(L, r)
    n = cls.value + k * cls.modulus
    if n < 3:
        return
    end = cc.cycle_endpoint(n, L, r)
    th = cc.crossing_threshold(L, r)
    if th.crosses_never:
        assert end >= n
    else:
        assert (end < n) == (n > th.n_star)


def test_cycle_class_type():
    for L in range(4):
        for r in range(2, 6):
            n = cc.cycle_class(L, r).value + (1 << (L + r + 1))
            assert cc.first_cycle(n)[1:] == (L, r)


def test_thresholds():
    assert cc.thresholds(0) == cc.Thresholds(2, 3)
    assert cc.thresholds(3) == cc.Thresholds(4, 5)


def test_one_cycle_densities():
    d = cc.one_cycle_densities()
    assert str(d.p1cyc.decimal(10)) == "0.7137254976"
    assert str(d.p_all.decimal(10)) == "0.4193627488"
    assert d.p1cyc.width < Fraction(1, 10**100)


def test_cumulative_density_k2():
    assert abs(cc.cumulative_universal_density(2).value - 0.6116) <= 0.002


def test_drift_moments_two_routes():
    m = cc.logdrift_moments()
    m1, var = cc.series_moments()
    assert abs(m.mean - m1) < 1e-9
    assert abs(m.variance - var) < 1e-9
    assert abs(m.mgf(0) - 1) < 1e-12


def test_mgf_strip():
    with pytest.raises(ValueError):
        cc.log_mgf(cc.T_HI + 0.01)


def test_cramer():
    c = cc.cramer_rate()
    assert abs(c.t_star - 0.363351) < 1e-5
    assert abs(c.I0 - 0.146479) < 1e-5
    assert abs(cc.log_mgf_prime(c.t_star)) < 1e-10


def test_correction_exceptions():
    assert cc.criterion_exceptions(2000) == [27, 31, 63]


@given(st.integers(1, 10**6))
def test_cycle_correction_bound(k):
    n = 2 * k + 1
    assert 0 < cc.cycle_correction(n) < math.log2(1 + 1 / n)


def test_adversarial_closed_form():
    for a in (1, 2, 4):
        for t in (0, 3, 7):
            blk = cc.block_compose([cc.ADV_A] * a + [cc.ADV_B] * t)
            assert blk == cc.adversarial_closed_form(a, t)
    b = cc.adversarial_block(1)
    assert not b.universal_at_tmin and b.universal_at_tmin_plus_1
    assert abs(cc.THETA_CRIT - 0.0129105) < 1e-7


def test_fragility_grid():
    g = cc.fragility_grid()
    assert g.passing == 1192


def test_post_mersenne():
    for k in range(2, 30):
        want = 2 if k % 2 == 0 else 3 + v2(k + 1)
        assert cc.post_mersenne_valuation(k) == want


def test_weak_cylinder_density():
    assert cc.weak_cylinder_density(3, 2) == Fraction(1, 8)


def test_kesten_small_run_deterministic():
    a = cc.kesten_simulate(steps=20_000, trials=20_000, seed=3)
    b = cc.kesten_simulate(steps=20_000, trials=20_000, seed=3)
    assert a.mass_below_1 == b.mass_below_1 and a.rho0 == b.rho0
    assert 0.3 < a.mass_below_1 < 0.6
