import pytest
from hypothesis import given
from hypothesis import strategies as st

from collatz_lab.exact_arith import v2
from collatz_lab.syracuse_core import (collatz_step, cycle_types, orbit, sigma_crossing, syracuse_step,
                                       synthetic_trace)

odd = st.integers(min_value=0, max_value=10**40).map(lambda x: 2 * x + 1)


def test_steps():
    assert collatz_step(6) == 3
    assert collatz_step(7) == 22
    assert syracuse_step(7) == (11, 1)
    assert syracuse_step(5) == (1, 4)


@given(odd)
def test_syracuse_is_accelerated_collatz(n):
    m, v = syracuse_step(n)
    assert m % 2 == 1
    assert 3 * n + 1 == m << v
    assert v == v2(3 * n + 1)


def test_orbit_27():
    tr = orbit(27, 1000)
    assert tr.reached_one
    assert len(tr) == 41
    assert max(tr.values) == 3077
    tr.check()


def test_orbit_rejects_even():
    with pytest.raises(ValueError):
        orbit(8, 10)


@given(st.lists(st.integers(min_value=1, max_value=5), min_size=1, max_size=30))
def test_cycle_types_partition_word(word):
    split = cycle_types(word)
    rebuilt = []
    for c in split.cycles:
        rebuilt += [1] * c.L + [c.r]
    rebuilt += list(split.trailing)
    assert rebuilt == word


def test_sigma_crossing():
    assert sigma_crossing(3, 100) == 2  # 3 -> 5 -> 1
    assert sigma_crossing(27, 100) == 37


def test_synthetic_trace_valuations():
    tr = synthetic_trace([1, 1, 2])
    assert tr.valuations == (1, 1, 2)
