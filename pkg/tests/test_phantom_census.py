import itertools
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collatz_lab import phantom_census as pc
from collatz_lab.exact_arith import v2

FAMILY_TABLE = {  # name -> (max delta, m*, C_e)
    "ell5": (4, 5, 16),
    "ell6": (3, 5, 8),
    "ell7": (5, 6, 32),
    "ell8": (7, 8, 128),
}

words = st.lists(st.integers(1, 4), min_size=1, max_size=7)


@pytest.mark.parametrize("name", sorted(FAMILY_TABLE))
def test_family_constants(name):
    sig = pc.FAMILIES[name]
    dmax, mstar, ce = FAMILY_TABLE[name]
    assert max(d for _, d in pc.rotation_deltas(sig)) == dmax
    assert pc.uniqueness_threshold(sig) == mstar
    res = pc.census_iterate(sig)
    assert res.C_e == ce
    assert res.C_e <= res.formula_C_e
    assert res.split_budget_ok


def test_periodic_family_has_no_threshold():
    sig = pc.FAMILIES["ell3"]
    assert not sig.primitive
    with pytest.raises(ValueError):
        pc.uniqueness_threshold(sig)


@given(words)
def test_root_is_fixed_point_and_realizes_word(w):
    sig = pc.Signature(tuple(w))
    if 3**sig.ell == 2**sig.K:
        return
    root = pc.phantom_root(sig)
    assert root.C_sigma % 2 == 1
    assert pc.block_map(sig.entries, root.rho) == root.rho
    assert pc.root_orbit_valuations(sig) == list(sig.entries)


@given(words, st.integers(0, 10**6))
def test_block_contraction(w, x):
    # v2(F(x) - rho) = v2(x - rho) - K on the 2-adic side
    sig = pc.Signature(tuple(w))
    root = pc.phantom_root(sig)
    x = Fraction(root.mod(sig.K) + (x << sig.K))
    if x == root.rho:
        return
    y = pc.block_map(sig.entries, x)
    assert pc.v2_rational(y - root.rho) == pc.v2_rational(x - root.rho) - sig.K


def test_repulsion():
    for sig in pc.FAMILIES.values():
        assert pc.repulsion_check(sig, sig.K + 3)


def test_universal_depth():
    for name in FAMILY_TABLE:
        assert pc.universal_depth_check(pc.FAMILIES[name], L=8)


def test_census_bruteforce_end_of_cycle():
    for sig in pc.FAMILIES.values():
        assert pc.census_bruteforce(sig, sig.ell, 3, L=10) == 1


def test_overlap_batch():
    passed, total = pc.overlap_batch(60, seed=3)
    assert passed == total


def test_periodic_core():
    r = pc.periodic_core((1, 2), 3, (1, 3))
    assert r.identity_holds and r.defect_valuation == r.rhs_valuation == 3
    assert pc.periodic_core((1, 2), 3, ()).defect_valuation == pc.INF
    assert pc.concat_identity((1, 2, 1), (3, 1))


@pytest.mark.parametrize("K", range(1, 15))
def test_necklaces_match_bruteforce(K):
    assert pc.necklace_counts(K) == pc.necklace_counts_bruteforce(K)


def test_expanding_counts():
    assert [pc.expanding_count(K) for K in range(3, 11)] == [1, 1, 1, 3, 4, 4, 14, 17]


def test_necklace_cost_guard():
    with pytest.raises(ValueError):
        pc.necklace_counts(61)


@pytest.mark.xfail(strict=True, reason="primitive necklace totals are 9 and 56 at K=6, 9; the "
                                        "published totals 5 and 22 follow no stated count")
def test_published_necklace_totals():
    assert sum(pc.necklace_counts(6).values()) == 5
    assert sum(pc.necklace_counts(9).values()) == 22


def test_gain_series():
    g = pc.gain_series(55)
    assert abs(g.R(3) - 0.010620) < 1e-6
    assert abs(g.R(10) - 0.0036039) < 1e-7
    assert abs(g.R(20) - 7.4946e-4) < 1e-8
    assert abs(g.partial_sum - 0.08783) <= 5e-5
    assert g.total_bound < 0.0893
    assert g.max_ratio <= pc.TAIL_RATIO


def test_chernoff_dominates():
    g = pc.gain_series(55)
    assert abs(pc.D_STAR - 0.0500445) < 1e-6
    for K in range(10, 56):
        assert pc.chernoff_bound(K) >= g.R(K)


@pytest.mark.parametrize("K", range(5, 13))
def test_gain_observable_support(K):
    h = pc.gain_observable(K)
    assert 0.19 <= h.support_fraction <= 0.50
    assert abs(h.centred().mean()) < 1e-12


def test_coding_injective():
    assert all(pc.coding_injective(K) for K in range(1, 13))


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=16, max_size=16))
def test_walsh_parseval_and_inverse(vals):
    x = np.array(vals)
    w = pc.walsh_spectrum(x)
    assert np.allclose((x**2).mean(), (w**2).sum())
    # transform is an involution up to 2^K
    assert np.allclose(pc.walsh_spectrum(w * 16, check=False), x)


def test_walsh_delta_flat():
    w = pc.walsh_spectrum([1.0] + [0.0] * 15)
    assert np.allclose(w, 1 / 16)


@pytest.mark.xfail(strict=True, reason="weight-0 and weight-1 bands of h_8 carry 25.5% of power, "
                                        "not 70-78%, under every normalisation tried")
def test_walsh_low_band_concentration():
    bp = pc.band_power(pc.gain_observable(8).values)
    assert 0.70 <= bp[0] + bp[1] <= 0.78


def test_spectral_excess():
    assert pc.spectral_excess(837799, K=8, trials=100) >= 3


def test_structural_checks():
    for K, s in ((5, 3), (8, 3), (7, 3)):
        r = pc.structural_checks(K, s)
        assert r.ok
    assert pc.structural_checks(7, 3).contraction_ratio == Fraction(1, 2)


def test_oscillation_spikes():
    rec = pc.oscillation_records(100)
    assert {3, 19, 84} <= set(rec)
    assert pc.oscillation_factor(19) > pc.oscillation_factor(3)


def test_subroot_injectivity_grid():
    from collatz_lab.phantom_census import subroot_injective, subroot_residue
    assert all(subroot_injective(4, p, 30) for p in range(1, 7))
    assert not subroot_injective(4, 3, 2)  # 64 words cannot fit in 4 residues
    # the sub-root is a fixed point of its own block map mod 2^M
    w, M = (1, 2, 1), 20
    r = subroot_residue(w, M)
    assert (3**3 * r + pc.carry_constant(w) - (r << 4)) % (1 << M) == 0
