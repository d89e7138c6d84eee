"""Residue-class censuses for the distribution laws, plus scrambling and
known-zone bookkeeping, crossing strata and the lattice-path survival DP.

Every census is an exhaustive enumeration over residues modulo 2^depth,
run on integer representatives. A residue whose answer needs more bits
than the depth supplies is counted as unresolved and reported as tail.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Sequence

import numpy as np

from .exact_arith import floor_log2_pow3, mod_inverse_pow2, v2
from .syracuse_core import syracuse_step


@dataclass(frozen=True)
class ResidueClass:
    value: int
    modulus_exp: int

    def __post_init__(self):
        if self.modulus_exp < 1 or not 0 <= self.value < (1 << self.modulus_exp):
            raise ValueError(f"bad residue class {self.value} mod 2^{self.modulus_exp}")

    @property
    def modulus(self) -> int:
        return 1 << self.modulus_exp

    def __contains__(self, n: int) -> bool:
        return n % self.modulus == self.value


@dataclass
class Distribution:
    support: list
    mass: list[Fraction]
    deficit: Fraction = Fraction(0)  # unresolved tail

    def __post_init__(self):
        if any(m < 0 for m in self.mass):
            raise ValueError("negative mass")
        if sum(self.mass, Fraction(0)) + self.deficit != 1:
            raise ValueError("masses plus deficit must sum to 1")

    def __getitem__(self, label) -> Fraction:
        return self.mass[self.support.index(label)] if label in self.support else Fraction(0)

    def as_dict(self) -> dict:
        return dict(zip(self.support, self.mass))


def _distribution(counts: Counter, total: int, unresolved: int = 0) -> Distribution:
    labels = sorted(counts)
    return Distribution(labels, [Fraction(counts[k], total) for k in labels], Fraction(unresolved, total))


# -- block law ---------------------------------------------------------------


@dataclass(frozen=True)
class WordClass:
    residue: ResidueClass
    density: Fraction  # among odd integers


def block_residue(word: Sequence[int]) -> WordClass:
    """Unique odd class mod 2^(sum+1) whose first len(word) valuations are exactly word."""
    if not word or any(b < 1 for b in word):
        raise ValueError("valuation word entries must be >= 1")
    # last step: 3x + 1 = 2^b * odd  <=>  x = (2^b - 1) / 3 mod 2^(b+1)
    b = word[-1]
    e = b + 1
    c = ((1 << b) - 1) * mod_inverse_pow2(3, e) % (1 << e)
    for b in reversed(word[:-1]):
        e += b
        c = (((1 << b) * c - 1) * mod_inverse_pow2(3, e)) % (1 << e)
    dens = Fraction(1, 1 << sum(word))
    return WordClass(ResidueClass(c, e), dens)


def valuation_word(n: int, length: int) -> tuple[int, ...]:
    out = []
    for _ in range(length):
        n, v = syracuse_step(n)
        out.append(v)
    return tuple(out)


def short_word_residue(word: Sequence[int]) -> WordClass:
    """c_w mod 2^V for a word of valuations >= 2 (last valuation read as 'at least')."""
    if not word or any(b < 2 for b in word):
        raise ValueError("short-word entries must be >= 2")
    b = word[-1]
    e = b
    c = (-mod_inverse_pow2(3, e)) % (1 << e)
    for b in reversed(word[:-1]):
        e += b
        c = (((1 << b) * c - 1) * mod_inverse_pow2(3, e)) % (1 << e)
    V = sum(word)
    return WordClass(ResidueClass(c, V), Fraction(1, 1 << (V - 1)))


# -- censuses ----------------------------------------------------------------

CENSUS_MIN_DEPTH = {"gap": 3, "valuation": 3, "quarter": 6, "reload": 4, "post_burst": None}


def _known_v(y: int, bits: int) -> int | None:
    """v2(y) if it is decided by the low `bits` bits of y, else None."""
    v = v2(y) if y else bits
    return v if v < bits else None


def gap_census(depth: int) -> Distribution:
    # n = 3 mod 4; G = number of consecutive v = 1 steps
    counts, unresolved, total = Counter(), 0, 0
    for n in range(3, 1 << depth, 4):
        total += 1
        x, bits, g = n, depth, 0
        while True:
            # v = 1 versus v >= 2 is decided by x mod 4
            if bits < 2:
                unresolved += 1
                break
            if x % 4 == 1:
                counts[g] += 1
                break
            g += 1
            bits -= 1
            x = (3 * x + 1) >> 1
    return _distribution(counts, total, unresolved)


def valuation_census(depth: int) -> Distribution:
    counts, unresolved, total = Counter(), 0, 0
    for n in range(1, 1 << depth, 4):
        total += 1
        v = _known_v(3 * n + 1, depth)
        if v is None:
            unresolved += 1
        else:
            counts[v] += 1
    return _distribution(counts, total, unresolved)


def persistent_states(k_max: int) -> list[tuple[int, int]]:
    return [(k, mu) for k in range(2, k_max + 1) for mu in (1, 3, 5, 7) if (3**k * mu) % 8 == 7]


def quarter_census(depth: int, k_max: int = 6) -> Distribution:
    """For each persistent state (k, mu): fraction of resolved lifts m = mu mod 8
    whose successor state is again persistent. Deficit is 0 by construction;
    the unresolved share per state is dropped from the ratio.
    """
    states = persistent_states(k_max)
    fracs = []
    for k, mu in states:
        good = bad = 0
        for m in range(mu, 1 << depth, 8):
            n = (m << k) - 1
            x = n
            for _ in range(k):
                x, _v = syracuse_step(x)
            # x = T^k(n) = (3^k m - 1) / 2, exact from m mod 2^depth only to depth-1 bits
            assert 2 * x == 3**k * m - 1
            bits = depth - 1
            kk = v2(x + 1)
            if kk + 3 > bits:
                continue
            mp = (x + 1) >> kk
            if kk >= 2 and (3**kk * mp) % 8 == 7:
                good += 1
            else:
                bad += 1
        fracs.append(Fraction(good, good + bad))
    # report conditional continuation mass per state; weights are equal
    w = Fraction(1, len(states))
    return Distribution([(k, mu) for k, mu in states], [f * w for f in fracs], 1 - sum(fracs, Fraction(0)) * w)


def reload_census(depth: int) -> Distribution:
    # v2(3r+1) = 2 exactly  <=>  r = 1 mod 8; reload = v2(q + 1) with q = (3r+1)/4
    counts, unresolved, total = Counter(), 0, 0
    for r in range(1, 1 << depth, 8):
        total += 1
        q = (3 * r + 1) >> 2
        j = _known_v(q + 1, depth - 2)
        if j is None:
            unresolved += 1
        else:
            counts[j] += 1
    return _distribution(counts, total, unresolved)


def post_burst_census(k: int, depth: int) -> Distribution:
    """v_{k+1} after a k-step burst from n0 = 2^(k+1) m - 1, m odd mod 2^depth."""
    counts, unresolved, total = Counter(), 0, 0
    for m in range(1, 1 << depth, 2):
        total += 1
        x = (m << (k + 1)) - 1
        for _ in range(k):
            x, v = syracuse_step(x)
            assert v == 1
        y = 3 * x + 1
        # y = 2 (3^(k+1) m - 1): the odd part's valuation is decided by m mod 2^depth
        w = _known_v(y >> 1, depth)
        if w is None:
            unresolved += 1
        else:
            counts[1 + w] += 1
    return _distribution(counts, total, unresolved)


def modular_census(law: str, depth: int, k: int | None = None) -> Distribution:
    if law.startswith("post_burst"):
        if k is None and "(" in law:
            k = int(law[law.index("(") + 1 : law.index(")")])
        if k is None:
            raise ValueError("post_burst law needs k")
        need = 3
        if depth < need:
            raise ValueError(f"depth too small for post_burst: need >= {need}")
        return post_burst_census(k, depth)
    if law not in CENSUS_MIN_DEPTH:
        raise ValueError(f"unknown law {law!r}")
    need = CENSUS_MIN_DEPTH[law]
    if depth < need:
        raise ValueError(f"depth too small for {law}: need >= {need}")
    return {"gap": gap_census, "valuation": valuation_census, "quarter": quarter_census, "reload": reload_census}[law](
        depth
    )


# -- scrambling / known zone -------------------------------------------------


@dataclass
class Scramble:
    pattern: tuple[int, ...]
    V: int
    c_g: int
    M_prime: int
    regime: str  # "pure_gap" (V = g) or "with_burst" (V >= g + 1)
    refined: bool  # True when M' > M, i.e. the class was split to fix the pattern


class PatternSplitError(ValueError):
    def __init__(self, bit):
        super().__init__(f"halving pattern not constant on the class; splits at bit {bit}")
        self.bit = bit


def scramble_decompose(a: ResidueClass, g: int, refine: bool = True) -> Scramble:
    if g < 1:
        raise ValueError("g must be >= 1")
    if a.value % 2 == 0:
        raise ValueError("class must be odd")
    x = a.value
    pattern = []
    C = 0
    S = 0
    for _ in range(g):
        y = 3 * x + 1
        v = v2(y)
        C = 3 * C + (1 << S)
        S += v
        pattern.append(v)
        x = y >> v
    V = S
    need = V + 1
    if need > a.modulus_exp and not refine:
        # find the lowest bit whose flip changes the pattern
        for bit in range(a.modulus_exp, need + 1):
            other = a.value + (1 << bit)
            if valuation_word(other, g) != tuple(pattern):
                raise PatternSplitError(bit)
        raise PatternSplitError(need)
    Mp = max(a.modulus_exp, need)
    # affine identity over 16 lifts
    base = 3**g * a.value + C
    for delta in range(16):
        n = a.value + (delta << Mp)
        got = n
        for _ in range(g):
            got, _v = syracuse_step(got)
        want_num = base + 3**g * delta * (1 << Mp)
        if want_num % (1 << V) or got != want_num >> V:
            raise ArithmeticError("scrambling identity failed")
        if valuation_word(n, g) != tuple(pattern):
            raise ArithmeticError("pattern not constant on refined class")
    regime = "pure_gap" if V == g else "with_burst"
    return Scramble(tuple(pattern), V, C, Mp, regime, Mp > a.modulus_exp)


@dataclass
class ZoneTrace:
    Z: list[int]
    reached_one: bool = False


def known_zone_trace(a: ResidueClass, steps: int) -> ZoneTrace:
    """Known low bits after each run-compensate cycle (v=1 run then one v>=2 step)."""
    if a.modulus_exp < 4 or a.value % 2 == 0:
        raise ValueError("need an odd class with modulus_exp >= 4")
    Z = [a.modulus_exp]
    x = a.value
    bits = a.modulus_exp
    hit_one = False
    while len(Z) <= steps and bits > 0:
        # one cycle
        while True:
            y = 3 * x + 1
            v = v2(y)
            if v >= bits:
                bits = 0
                break
            bits -= v
            x = y >> v
            if v >= 2:
                break
        if x == 1:
            hit_one = True
        Z.append(bits)
    return ZoneTrace(Z, hit_one)


# -- crossing strata ---------------------------------------------------------


def resolved_time(r: int, K: int) -> int | None:
    """Uniform crossing time for all n = r mod 2^K (n >= 3), or None.

    Tracks T^t(n) = (3^t n + C_t)/2^{S_t} while valuations are decided by
    the known bits; an undecided valuation contributes its lower bound (all
    remaining known bits) and ends the trace.
    """
    smallest = r if r >= 3 else r + (1 << K)
    x, Z, t, S, C = r, K, 0, 0, 0
    while Z > 0:
        y = 3 * x + 1
        v = v2(y)
        final = v >= Z
        if final:
            v = Z
        Z -= v
        C = 3 * C + (1 << S)
        S += v
        t += 1
        x = y >> v
        lam_den = (1 << S) - 3**t
        if lam_den > 0 and C < smallest * lam_den:
            return t
        if final:
            break
    return None


def crossing_strata(K: int, allow_large: bool = False) -> Fraction:
    if K < 2:
        raise ValueError("K must be >= 2")
    if K > 16 and not allow_large:
        raise ValueError("K > 16 exceeds the desk-scale cost guard")
    res = sum(1 for r in range(1, 1 << K, 2) if resolved_time(r, K) is not None)
    return Fraction(res, 1 << (K - 1))


# -- lattice path ------------------------------------------------------------


def barrier(t: int) -> int:
    return floor_log2_pow3(t)


def lattice_path_f(J: int) -> Fraction:
    """Pr(S_t <= floor(t log2 3) for 1 <= t <= J), steps i.i.d. Geometric(1/2) on {1,2,...}."""
    if J < 0:
        raise ValueError("J must be >= 0")
    mass = {0: Fraction(1)}
    for t in range(1, J + 1):
        b = barrier(t)
        nxt: dict[int, Fraction] = {}
        for s, p in mass.items():
            for j in range(1, b - s + 1):
                nxt[s + j] = nxt.get(s + j, Fraction(0)) + p / (1 << j)
        mass = nxt
    return sum(mass.values(), Fraction(0))


def lattice_path_table(J_max: int) -> list[Fraction]:
    # one DP pass for all J
    out = [Fraction(1)]
    mass = {0: Fraction(1)}
    for t in range(1, J_max + 1):
        b = barrier(t)
        nxt: dict[int, Fraction] = {}
        for s, p in mass.items():
            for j in range(1, b - s + 1):
                nxt[s + j] = nxt.get(s + j, Fraction(0)) + p / (1 << j)
        mass = nxt
        out.append(sum(mass.values(), Fraction(0)))
    return out


def modular_survival_fraction(J: int, M: int) -> Fraction:
    """Fraction of odd residues mod 2^M whose first J valuations keep S_t <= t log2 3.

    Vectorised over all 2^(M-1) odd representatives. Any residue whose
    outcome depends on bits above M raises, so the answer is exact.
    """
    r = np.arange(1, 1 << M, 2, dtype=np.int64)
    x = r.copy()
    S = np.zeros_like(r)
    alive = np.ones(r.shape, dtype=bool)
    for t in range(1, J + 1):
        y = 3 * x + 1
        # trailing zeros via the lowest set bit (exact in float64 below 2^53)
        v = np.log2((y & -y).astype(np.float64)).astype(np.int64)
        z = y >> v
        b = barrier(t)
        # a survivor's valuation must be decided by the known bits M - S
        newS = S + v
        decided = v < (M - S)
        died = newS > b
        # deaths are decided as soon as the known lower bound already exceeds the barrier
        undecided_alive = alive & ~decided & (S + (M - S) <= b)
        if undecided_alive.any():
            raise ValueError(f"M={M} too small to resolve J={J}")
        alive &= ~died
        S = newS
        x = z
    return Fraction(int(alive.sum()), 1 << (M - 1))


@dataclass
class DriftFraction:
    fraction: Fraction
    max_steps: int


def positive_drift_fraction(M: int) -> DriftFraction:
    """Odd residues mod 2^M whose decided valuations keep 2^S_t <= 3^t until bits run out.

    A residue whose very first valuation is already undecided has no
    deterministic step at all and is not counted.
    """
    if not 2 <= M <= 22:
        raise ValueError("M out of range")
    cnt = 0
    longest = 0
    for r in range(1, 1 << M, 2):
        x, S, t = r, 0, 0
        ok = True
        while True:
            y = 3 * x + 1
            v = v2(y)
            if v >= M - S:
                if t == 0:
                    ok = False
                break
            S += v
            t += 1
            x = y >> v
            if (1 << S) > 3**t:
                ok = False
                break
        if ok:
            cnt += 1
            longest = max(longest, t)
    return DriftFraction(Fraction(cnt, 1 << (M - 1)), longest)
