"""Orbits of the Collatz / Syracuse maps and their structural decompositions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .exact_arith import v2

LOG2_3 = math.log2(3)


def collatz_step(n: int) -> int:
    if n < 1:
        raise ValueError("collatz_step needs n >= 1")
    return n // 2 if n % 2 == 0 else 3 * n + 1


def syracuse_step(n: int) -> tuple[int, int]:
    if n < 1 or n % 2 == 0:
        raise ValueError("Syracuse map requires odd argument")
    m = 3 * n + 1
    v = (m & -m).bit_length() - 1
    return m >> v, v


def run_length(n: int) -> int:
    """Number of v=1 Syracuse steps before the first v >= 2."""
    if n % 2 == 0:
        raise ValueError("run_length requires odd argument")
    return v2(n + 1) - 1


@dataclass(frozen=True)
class OrbitTrace:
    start: int
    values: tuple[int, ...]  # odd iterates n_0, n_1, ..., n_T
    valuations: tuple[int, ...]  # v_t = v2(3 n_t + 1), one per completed step
    reached_one: bool

    @property
    def steps(self) -> list[tuple[int, int]]:
        return list(zip(self.values, self.valuations))

    def __len__(self):
        return len(self.valuations)

    def check(self) -> None:
        for t, v in enumerate(self.valuations):
            n = self.values[t]
            assert n % 2 == 1
            assert (3 * n + 1) == self.values[t + 1] << v

    @property
    def classes(self) -> list[str]:
        return step_classes(self)


def orbit(n0: int, max_steps: int) -> OrbitTrace:
    if max_steps < 1:
        raise ValueError("max_steps must be positive")
    if n0 < 1 or n0 % 2 == 0:
        raise ValueError("orbit needs an odd start")
    vals = [n0]
    vs = []
    n = n0
    while n != 1 and len(vs) < max_steps:
        n, v = syracuse_step(n)
        vals.append(n)
        vs.append(v)
    return OrbitTrace(n0, tuple(vals), tuple(vs), n == 1)


def synthetic_trace(valuations: Sequence[int]) -> OrbitTrace:
    """Trace carrying only a valuation word (values are placeholders)."""
    return OrbitTrace(0, tuple([0] * (len(valuations) + 1)), tuple(valuations), False)


# -- run-compensate cycles -------------------------------------------------


@dataclass(frozen=True, order=True)
class CycleType:
    L: int
    r: int

    def __post_init__(self):
        if self.L < 0 or self.r < 2:
            raise ValueError(f"bad cycle type ({self.L}, {self.r})")

    @property
    def lam(self):
        from fractions import Fraction

        return Fraction(3 ** (self.L + 1), 2 ** (self.L + self.r))

    @property
    def beta(self):
        from fractions import Fraction

        return Fraction(3 ** (self.L + 1) - 2 ** (self.L + 1), 2 ** (self.L + self.r))


@dataclass
class CycleSplit:
    cycles: list[CycleType]
    trailing: tuple[int, ...] = ()  # incomplete block of v=1 steps, if any


def cycle_types(trace_or_word) -> CycleSplit:
    word = trace_or_word.valuations if isinstance(trace_or_word, OrbitTrace) else tuple(trace_or_word)
    if not word:
        raise ValueError("empty trace")
    out = []
    ones = 0
    for v in word:
        if v == 1:
            ones += 1
        else:
            out.append(CycleType(ones, v))
            ones = 0
    return CycleSplit(out, tuple([1] * ones))


# -- burst / gap -------------------------------------------------------------


@dataclass
class BurstGapDecomposition:
    segments: list[tuple[str, int, int]]  # (kind, first index, length)

    @property
    def lengths(self) -> list[int]:
        return [s[2] for s in self.segments]

    @property
    def kinds(self) -> list[str]:
        return [s[0] for s in self.segments]


def burst_gap_decompose(trace: OrbitTrace, convention: str = "odd_run") -> BurstGapDecomposition:
    """Maximal runs of burst epochs (k_t >= 2) and gap epochs (k_t = 1).

    convention "odd_run" uses k_t = v2(n_t + 1) over every odd iterate.
    convention "valuation" indexes by v2(3 n_t + 1) = 1 instead, i.e.
    burst epochs are n_t = 3 mod 4 (the gap-law indexing).
    """
    vals = trace.values
    if not vals:
        raise ValueError("empty trace")
    if convention == "odd_run":
        kinds = ["burst" if v2(n + 1) >= 2 else "gap" for n in vals]
    elif convention == "valuation":
        kinds = ["burst" if n % 4 == 3 else "gap" for n in vals]
    else:
        raise ValueError(f"unknown convention {convention!r}")
    segs = []
    start = 0
    for i in range(1, len(kinds) + 1):
        if i == len(kinds) or kinds[i] != kinds[start]:
            segs.append((kinds[start], start, i - start))
            start = i
    return BurstGapDecomposition(segs)


def step_classes(trace: OrbitTrace) -> list[str]:
    """Label each step burst / recovery / gap / pre-cascade.

    A cascade starts at the first iterate = 3 mod 4. Inside it, v=1 steps
    are burst and v=2 steps are recovery. The cascade closes at the first
    iterate = 5 mod 8 (valuation >= 3) reached after a burst or recovery;
    from there every step until the next iterate = 3 mod 4 is gap.
    """
    labels = []
    state = "pre"
    for n, v in zip(trace.values, trace.valuations):
        if n % 4 == 3:
            state = "cascade"
            labels.append("burst")
        elif state == "pre":
            labels.append("pre-cascade")
        elif state == "cascade" and n % 8 == 1:
            labels.append("recovery")
        else:
            state = "gap"
            labels.append("gap")
    return labels


# -- drift -------------------------------------------------------------------


def drift_increments(trace: OrbitTrace, exact_correction: bool = True) -> list[float]:
    out = []
    for n, v in zip(trace.values, trace.valuations):
        d = LOG2_3 - v
        if exact_correction and n:
            d += math.log2(1 + 1 / (3 * n))
        out.append(d)
    return out


def drift_signal(trace: OrbitTrace) -> list[float]:
    """x_t = log2 n_t - log2 n_0 as partial sums; sign checked against integers."""
    if not trace.valuations:
        raise ValueError("empty trace")
    xs = [0.0]
    for d in drift_increments(trace):
        xs.append(xs[-1] + d)
    if trace.start:
        n0 = trace.start
        for x, n in zip(xs[1:], trace.values[1:]):
            # float partial sums could flip sign only at |x| ~ 1e-12
            if (x < 0) != (n < n0) and abs(x) > 1e-9:
                raise ArithmeticError("drift sign disagrees with integer comparison")
    return xs


def sigma_crossing(n0: int, cap: int, full_collatz: bool = False) -> int | None:
    """First step t >= 1 with iterate below n0, or None if cap is hit."""
    if cap < 1:
        raise ValueError("cap must be positive")
    if n0 < 3 or (not full_collatz and n0 % 2 == 0):
        raise ValueError("sigma_crossing needs n0 >= 3 (odd for Syracuse steps)")
    n = n0
    for t in range(1, cap + 1):
        n = collatz_step(n) if full_collatz else syracuse_step(n)[0]
        if n < n0:
            return t
    return None


def autocorrelation(xs: Sequence[float], max_lag: int) -> list[float]:
    T = len(xs)
    mu = sum(xs) / T
    c = [x - mu for x in xs]
    var = sum(y * y for y in c) / T
    if var == 0:
        raise ValueError("constant signal has undefined autocorrelation")
    return [sum(c[i] * c[i + k] for i in range(T - k)) / T / var for k in range(1, max_lag + 1)]


@dataclass
class Autocorr:
    rho: list[float]
    abs_sum: float


def drift_autocorrelation(trace_or_incs, max_lag: int) -> Autocorr:
    incs = drift_increments(trace_or_incs) if isinstance(trace_or_incs, OrbitTrace) else list(trace_or_incs)
    if len(incs) < 4 * max_lag:
        raise ValueError(f"trace too short: need >= {4 * max_lag} steps, have {len(incs)}")
    rho = autocorrelation(incs, max_lag)
    return Autocorr(rho, sum(abs(r) for r in rho))


def touched_set(seed_cap: int, window: int) -> int:
    """How many m in [1, window] lie on the Collatz orbit of some seed <= seed_cap."""
    if window < 1:
        raise ValueError("window must be >= 1")
    seen = set()
    for s in range(1, seed_cap + 1):
        n = s
        while True:
            if n <= window:
                if n in seen:
                    break
                seen.add(n)
            if n == 1:
                # 1 -> 4 -> 2 -> 1
                for m in (4, 2):
                    if m <= window:
                        seen.add(m)
                break
            n = collatz_step(n)
    return len(seen)
