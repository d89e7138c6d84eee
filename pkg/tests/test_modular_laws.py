from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from collatz_lab import modular_laws as ml
from collatz_lab.syracuse_core import syracuse_step


@given(st.lists(st.integers(min_value=1, max_value=4), min_size=1, max_size=6), st.integers(0, 50))
def test_block_residue_realizes_word(word, lift):
    wc = ml.block_residue(word)
    n = wc.residue.value + lift * wc.residue.modulus
    if n == 1 and word[0] != 2:
        return
    assert ml.valuation_word(n, len(word)) == tuple(word)
    assert wc.density == Fraction(2, wc.residue.modulus)


def test_block_residue_rejects_zero():
    with pytest.raises(ValueError):
        ml.block_residue([1, 0])


def test_gap_law_exact():
    d = ml.modular_census("gap", 18)
    for g in range(1, 8):
        assert d[g] == Fraction(1, 2**g)


def test_census_depth_guard():
    with pytest.raises(ValueError):
        ml.modular_census("quarter", 4)
    with pytest.raises(ValueError):
        ml.modular_census("nope", 10)


def test_post_burst_independent_of_k():
    laws = [ml.modular_census("post_burst", 14, k).as_dict() for k in (3, 5, 10)]
    for j in range(2, 10):
        assert {law[j] for law in laws} == {Fraction(2, 2**j)}


@given(st.integers(min_value=4, max_value=10).flatmap(
    lambda e: st.tuples(st.just(e), st.integers(0, 2 ** (e - 1) - 1))), st.integers(1, 5))
def test_scramble_affine_identity(ea, g):
    e, a = ea
    s = ml.scramble_decompose(ml.ResidueClass(2 * a + 1, e), g)
    assert s.V == sum(s.pattern)
    assert s.M_prime >= max(e, s.V + 1)
    assert (s.regime == "pure_gap") == (s.V == g)


def test_scramble_refuses_split_without_refinement():
    with pytest.raises(ml.PatternSplitError):
        ml.scramble_decompose(ml.ResidueClass(1, 4), 6, refine=False)


@given(st.integers(min_value=0, max_value=2**9 - 1))
def test_known_zone_loses_two_bits_per_cycle(a):
    Z = ml.known_zone_trace(ml.ResidueClass(2 * a + 1, 10), 10).Z
    assert all(z1 <= max(0, z0 - 2) for z0, z1 in zip(Z, Z[1:]))


def test_crossing_strata_small():
    assert ml.crossing_strata(4) == Fraction(5, 8)
    assert ml.crossing_strata(5) == Fraction(3, 4)
    with pytest.raises(ValueError):
        ml.crossing_strata(17)


def test_crossing_strata_monotone():
    vals = [ml.crossing_strata(K) for K in range(3, 12)]
    assert vals == sorted(vals)


def test_lattice_path_values():
    assert ml.lattice_path_f(1) == Fraction(1, 2)
    assert ml.lattice_path_f(2) == Fraction(3, 8)
    assert ml.lattice_path_f(10) == Fraction(1057, 16384)
    tab = ml.lattice_path_table(12)
    assert tab[7] == ml.lattice_path_f(7)


def test_lattice_path_vs_modular_count():
    for J in range(1, 7):
        assert ml.modular_survival_fraction(J, 16) == ml.lattice_path_f(J)


def test_modular_count_depth_guard():
    with pytest.raises(ValueError):
        ml.modular_survival_fraction(10, 8)


def test_short_word_residue():
    wc = ml.short_word_residue((2, 3))
    n = wc.residue.value + wc.residue.modulus
    m, v = syracuse_step(n)
    assert v == 2
    assert syracuse_step(m)[1] >= 3
