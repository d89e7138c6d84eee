"""Phantom cycles: 2-adic roots of block maps, their census, and the gain series."""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from .exact_arith import mod_inverse_pow2, v2
from .syracuse_core import LOG2_3, collatz_step, syracuse_step

INF = math.inf


def v2_rational(q) -> float:
    """2-adic valuation of a rational with odd denominator; inf at 0."""
    q = Fraction(q)
    if q.denominator % 2 == 0:
        raise ValueError("even denominator: not a 2-adic integer")
    if q == 0:
        return INF
    return v2(q.numerator)


# -- signatures -----------------------------------------------------------


@dataclass(frozen=True)
class Signature:
    entries: tuple[int, ...]

    def __init__(self, entries):
        entries = tuple(int(k) for k in entries)
        if not entries:
            raise ValueError("empty signature")
        if any(k < 1 for k in entries):
            raise ValueError("signature entries must be positive")
        object.__setattr__(self, "entries", entries)

    @property
    def ell(self) -> int:
        return len(self.entries)

    @property
    def K(self) -> int:
        return sum(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def rotate(self, s: int) -> "Signature":
        s %= self.ell
        return Signature(self.entries[s:] + self.entries[:s])

    def prefix(self, s: int) -> "Signature":
        return Signature(self.entries[:s])

    @property
    def delta(self) -> float:
        """Log-drift of one pass: l log2 3 - K."""
        return self.ell * LOG2_3 - self.K

    @property
    def expanding(self) -> bool:
        return 3**self.ell > 2**self.K

    @property
    def primitive(self) -> bool:
        e, n = self.entries, self.ell
        return all(e != e[d:] + e[:d] for d in range(1, n) if n % d == 0)

    @property
    def period(self) -> int:
        e, n = self.entries, self.ell
        return next(d for d in range(1, n + 1) if n % d == 0 and e == e[d:] + e[:d])


FAMILIES = {
    "ell3": Signature((1, 1, 1)),
    "ell5": Signature((1, 1, 1, 1, 2)),
    "ell6": Signature((1, 1, 2, 1, 1, 1)),
    "ell7": Signature((1, 1, 1, 1, 1, 2, 2)),
    "ell8": Signature((1, 1, 1, 1, 1, 1, 1, 3)),
}
# m10, m11 and m20 are named with (K, m*, max delta) but no signature is published


def carry_constant(entries: Sequence[int]) -> int:
    """C with F(x) = (3^l x + C) / 2^K for the prescribed valuation word."""
    # C = sum_j 3^(l-1-j) 2^(k_1+...+k_j)
    c, w, l = 0, 0, len(entries)
    for j, k in enumerate(entries):
        c += 3 ** (l - 1 - j) << w
        w += k
    return c


def block_map(entries: Sequence[int], x):
    """Exact rational image (3^l x + C)/2^K."""
    l, K = len(entries), sum(entries)
    return (3**l * Fraction(x) + carry_constant(entries)) / Fraction(2**K)


@dataclass(frozen=True)
class PhantomRoot:
    signature: Signature
    C_sigma: int
    D: int

    @property
    def rho(self) -> Fraction:
        return Fraction(self.C_sigma, self.D)

    def mod(self, m: int) -> int:
        """rho reduced mod 2^m as an integer in [0, 2^m)."""
        M = 1 << m
        return (self.C_sigma * mod_inverse_pow2(self.D % M, m)) % M if m else 0


def phantom_root(sig) -> PhantomRoot:
    sig = sig if isinstance(sig, Signature) else Signature(sig)
    C = carry_constant(sig.entries)
    D = 2**sig.K - 3**sig.ell
    # D odd as K >= 1; C odd since only its j = 0 term 3^(l-1) is odd
    assert D % 2 != 0 and C % 2 == 1
    root = PhantomRoot(sig, C, D)
    if block_map(sig.entries, root.rho) != root.rho:
        raise ArithmeticError("block map does not fix its root")
    return root


def root_orbit_valuations(sig) -> list[int]:
    """v2(3 F_s(rho) + 1) along the root orbit; equals the signature for a true root."""
    sig = sig if isinstance(sig, Signature) else Signature(sig)
    x = phantom_root(sig).rho
    out = []
    for k in sig.entries:
        out.append(int(v2_rational(3 * x + 1)))
        x = (3 * x + 1) / 2**k
    return out


def repulsion_check(sig, m: int, samples: int = 16, blocks: int | None = None, seed: int = 0) -> bool:
    """Each block pass lowers v2(x - rho) by exactly K, for x aligned to depth m.

    Checked on exact rationals for floor(m/K) passes, and on actual
    Syracuse iterates while the alignment is deep enough to force the word.
    """
    sig = sig if isinstance(sig, Signature) else Signature(sig)
    K = sig.K
    if m < K:
        raise ValueError("repulsion_check needs m >= K")
    root = phantom_root(sig)
    rho = root.rho
    base = root.mod(m)
    blocks = m // K if blocks is None else blocks
    rng = random.Random(seed)
    for _ in range(samples):
        x = base + (rng.randrange(1, 1 << 20) << m)
        if x <= 0:
            continue
        d0 = v2_rational(x - rho)
        if d0 == INF:
            continue  # x is the root itself
        y = Fraction(x)
        for j in range(1, blocks + 1):
            y = block_map(sig.entries, y)
            if v2_rational(y - rho) != d0 - j * K:
                return False
        # integer orbit follows the word while alignment exceeds K
        n, d = x, d0
        while d >= K + 1 and n % 2 == 1:
            for k in sig.entries:
                n, v = syracuse_step(n)
                if v != k:
                    return False
            if v2_rational(n - rho) != d - K:
                return False
            d -= K
    return True


# -- census -----------------------------------------------------------------


@dataclass
class CensusNode:
    A: int
    B: int
    depth: int  # population share 2^-depth

    @property
    def gamma(self) -> int:
        return v2(self.B)


@dataclass
class CensusStep:
    s: int
    beta: float
    gamma: int
    delta: float
    ratio_exp: float  # max over live nodes of min(beta, gamma)
    universal: bool
    nodes: int


@dataclass
class CensusResult:
    signature: Signature
    exit_class: int
    per_step: list[CensusStep]
    C_e: int
    formula_C_e: int
    splits: list[tuple[int, int, int, int]] = field(default_factory=list)  # (depth, gamma, g0, g1)

    @property
    def universal_steps(self) -> list[int]:
        return [st.s for st in self.per_step if st.universal]

    @property
    def split_budget_ok(self) -> bool:
        # 2^-(d+1) (2^g0 + 2^g1) <= 2^-d 2^gamma
        return all(2**g0 + 2**g1 <= 2 * 2**g for _, g, g0, g1 in self.splits)


def affine_step(A: int, B: int, max_refine: int = 24):
    """One Syracuse step on the progression A + B u.

    Returns a list of (A', B', extra_depth) children plus the list of
    equal-case split records (gamma, gamma0', gamma1').
    """
    out, splits = [], []
    stack = [(A, B, 0)]
    while stack:
        a, b, d = stack.pop()
        alpha, gamma = v2(3 * a + 1), v2(b)
        if alpha < gamma:
            out.append(((3 * a + 1) >> alpha, (3 * b) >> alpha, d))
            continue
        if d >= max_refine:
            continue  # dropped: affine structure dissolved below fidelity
        even, odd = (a, 2 * b, d + 1), (a + b, 2 * b, d + 1)
        if alpha == gamma:
            g0 = gamma + 1 - v2(3 * a + 1)
            a1 = 3 * (a + b) + 1
            g1 = gamma + 1 - v2(a1) if v2(a1) < gamma + 1 else 0
            splits.append((gamma, g0, g1))
        stack.append(odd)
        stack.append(even)
    return out, splits


def census_iterate(sig, max_nodes: int = 4096) -> CensusResult:
    """Affine iteration of the lift progression e + 2^K u through one pass.

    e is taken congruent to rho mod 2^K, so every lift has v2(x - rho) >= K.
    Steps s = 1..l are recorded; C_e is the max of 2^min(beta, gamma)
    over s >= 1 and live sub-progressions.
    """
    sig = sig if isinstance(sig, Signature) else Signature(sig)
    root = phantom_root(sig)
    K, l = sig.K, sig.ell
    C, D = root.C_sigma, root.D
    e = root.mod(K)
    deltas = dict(rotation_deltas(sig)) if l >= 2 else {}
    nodes = [CensusNode(e, 1 << K, 0)]
    steps, splits = [], []
    V = 0
    for s in range(1, l + 1):
        new = []
        for nd in nodes:
            kids, sp = affine_step(nd.A, nd.B)
            splits.extend((nd.depth, *x) for x in sp)
            new.extend(CensusNode(a, b, nd.depth + dd) for a, b, dd in kids)
        nodes = new[:max_nodes]
        V += sig[s - 1]
        best, lead = -INF, None
        for nd in nodes:
            beta = v2(nd.A * D - C) if nd.A * D != C else INF
            m = min(beta, nd.gamma)
            if m > best:
                best, lead = m, (beta, nd.gamma)
        dl = deltas.get(s, INF) if s < l else INF
        beta, gamma = lead if lead else (INF, 0)
        steps.append(CensusStep(s, beta, gamma, dl, best, s < l and dl < K - V, len(nodes)))
    ce = 2 ** int(max(st.ratio_exp for st in steps))
    fexp = max((min(deltas[s], K - sum(sig.entries[:s])) for s in range(1, l)), default=0)
    return CensusResult(sig, e, steps, ce, 2 ** int(fexp), splits)


def census_bruteforce(sig, s: int, a: int, L: int = 14, block_at_end: bool = True) -> Fraction:
    """N(s, >= a, L) / 2^(L-a) by enumerating lifts e + 2^K u, u < 2^L.

    At s = l the exact block map is used (the last valuation of an
    actual orbit is only bounded below by the word).
    """
    sig = sig if isinstance(sig, Signature) else Signature(sig)
    root = phantom_root(sig)
    K, l = sig.K, sig.ell
    e = root.mod(K)
    C, D = root.C_sigma, root.D
    hits = 0
    for u in range(1 << L):
        x = e + (u << K)
        if s == l and block_at_end:
            y = block_map(sig.entries, x)
            val = v2_rational(y - root.rho)
        else:
            n = x
            for _ in range(s):
                n, _v = syracuse_step(n)
            val = v2(n * D - C) if n * D != C else INF
        if val >= a:
            hits += 1
    return Fraction(hits, 2 ** (L - a)) if L >= a else Fraction(hits * 2 ** (a - L))


def universal_depth_check(sig, L: int = 10) -> bool:
    """Where delta_s < K - V_s, every lift lands at exactly v2 = delta_s."""
    sig = sig if isinstance(sig, Signature) else Signature(sig)
    res = census_iterate(sig)
    root = phantom_root(sig)
    C, D, K = root.C_sigma, root.D, sig.K
    for st in res.per_step:
        if not st.universal:
            continue
        for u in range(1 << L):
            n = res.exit_class + (u << K)
            for _ in range(st.s):
                n, _v = syracuse_step(n)
            if v2(n * D - C) != st.delta:
                return False
    return True


# -- rotations, overlap, period --------------------------------------------


def rotation_deltas(sig) -> list[tuple[int, float]]:
    """delta_s for s = 1..l-1 by two routes (rotated carry constant; Delta_s)."""
    sig = sig if isinstance(sig, Signature) else Signature(sig)
    l, K = sig.ell, sig.K
    if l < 2:
        raise ValueError("rotation_deltas needs l >= 2")
    C = carry_constant(sig.entries)
    D = 2**K - 3**l
    out = []
    for s in range(1, l):
        rot = carry_constant(sig.rotate(s).entries)
        d1 = v2(rot - C) if rot != C else INF
        Ks = sum(sig.entries[:s])
        Cs = carry_constant(sig.entries[:s])
        big = (3**s - 2**Ks) * C + Cs * D
        d2 = v2(big) - Ks if big else INF
        if d1 != d2:
            raise ArithmeticError(f"delta routes disagree at s={s}: {d1} vs {d2}")
        out.append((s, d1))
    return out


def visible_prefix(sig, m: int) -> tuple[int, ...]:
    """Longest prefix (cyclically extended) with total weight < m."""
    sig = sig if isinstance(sig, Signature) else Signature(sig)
    out, tot, j = [], 0, 0
    while tot + sig[j % sig.ell] < m:
        tot += sig[j % sig.ell]
        out.append(sig[j % sig.ell])
        j += 1
    return tuple(out)


def cyclic_occurrences(sig, word: Sequence[int]) -> int:
    sig = sig if isinstance(sig, Signature) else Signature(sig)
    l = sig.ell
    return sum(all(sig[(t + j) % l] == w for j, w in enumerate(word)) for t in range(l))


def least_period(word: Sequence[int]) -> int:
    r = len(word)
    return next(p for p in range(1, r + 1) if all(word[j] == word[j + p] for j in range(r - p))) if r else 1


@dataclass
class Overlap:
    m: int
    N_m: int
    Occ: int
    visible_prefix: tuple[int, ...]
    p_m: int
    m_star: int
    max_delta: float
    ell: int

    @property
    def ok(self) -> bool:
        return self.N_m <= self.Occ - 1 <= self.ell // self.p_m - 1 and self.max_delta <= self.m_star - 1


def uniqueness_threshold(sig) -> int:
    """m* = least m whose visible prefix occurs only once cyclically."""
    sig = sig if isinstance(sig, Signature) else Signature(sig)
    if not sig.primitive:
        raise ValueError("m* is unbounded for a periodic signature")
    m = 1
    while cyclic_occurrences(sig, visible_prefix(sig, m)) != 1:
        m += 1
    return m


def overlap_and_period(sig, m: int) -> Overlap:
    sig = sig if isinstance(sig, Signature) else Signature(sig)
    if m < 1:
        raise ValueError("m must be positive")
    ds = rotation_deltas(sig) if sig.ell >= 2 else []
    N = sum(1 for _, d in ds if d >= m)
    P = visible_prefix(sig, m)
    occ = cyclic_occurrences(sig, P)
    res = Overlap(m, N, occ, P, least_period(P), uniqueness_threshold(sig),
                  max((d for _, d in ds), default=0), sig.ell)
    if not res.ok:
        raise AssertionError(f"overlap bounds violated for {sig.entries} at m={m}")
    return res


def converse_overlap_check(sig, m: int) -> bool:
    """If P_m has period p < |P_m| then delta_p >= sum of its first r-p entries."""
    sig = sig if isinstance(sig, Signature) else Signature(sig)
    P = visible_prefix(sig, m)
    p = least_period(P)
    if p >= len(P) or p >= sig.ell:
        return True
    d = dict(rotation_deltas(sig))[p]
    return d >= sum(P[: len(P) - p])


def random_signature(rng: random.Random, ell: int, max_k: int = 4) -> Signature:
    while True:
        s = Signature(rng.choice([1, 1, 1, 2, 2, 3, max_k]) for _ in range(ell))
        if s.primitive and s.ell >= 2:
            return s


def overlap_batch(n: int = 200, seed: int = 7) -> tuple[int, int]:
    """(passed, total) inequality checks over random primitive signatures."""
    rng = random.Random(seed)
    passed = total = 0
    for _ in range(n):
        sig = random_signature(rng, rng.randint(3, 20))
        ms = uniqueness_threshold(sig)
        for m in range(1, ms + 2):
            total += 1
            try:
                overlap_and_period(sig, m)
                passed += converse_overlap_check(sig, m)
            except AssertionError:
                pass
    return passed, total


# -- periodic core -----------------------------------------------------------


def _C(entries) -> int:
    return carry_constant(entries) if entries else 0


def _D(entries) -> int:
    return 2 ** sum(entries) - 3 ** len(entries) if entries else 0


@dataclass
class PeriodicCore:
    identity_holds: bool
    lhs_valuation: float
    rhs_valuation: float | None  # first-mismatch prediction for v2(E(tau, eta))
    defect_valuation: float


def first_mismatch_valuation(tau: Sequence[int], eta: Sequence[int]) -> float | None:
    """M_r + min(a_r, b_r) for the first position r where the periodic words differ."""
    p, t = len(tau), len(eta)
    M = 0
    for r in range(p * t + max(p, t)):
        a, b = tau[r % p], eta[r % t]
        if a != b:
            return M + min(a, b)
        M += a
    return None  # periodic extensions agree: same root


def periodic_core(tau, q: int, eta) -> PeriodicCore:
    tau = tuple(tau.entries if isinstance(tau, Signature) else tau)
    eta = tuple(eta.entries if isinstance(eta, Signature) else eta)
    if not tau or q < 1:
        raise ValueError("need nonempty tau and q >= 1")
    sigma = tau * q + eta
    Cl, D = _C(sigma), _D(sigma)
    Cp, Dp = _C(tau), _D(tau)
    Ce, De = _C(eta), _D(eta)
    Kp = sum(tau)
    lhs = Cl * Dp - Cp * D
    rhs = 2 ** (q * Kp) * (Ce * Dp - Cp * De)
    E = Ce * Dp - Cp * De
    if not eta:
        # exact repetition: the root of tau^q is the root of tau
        assert Fraction(Cl, D) == Fraction(Cp, Dp)
    return PeriodicCore(
        lhs == rhs,
        v2(lhs) if lhs else INF,
        first_mismatch_valuation(tau, eta) if eta else None,
        v2(E) if E else INF,
    )


def concat_identity(alpha: Sequence[int], beta: Sequence[int]) -> bool:
    """C(alpha beta) = 3^|beta| C(alpha) + 2^K(alpha) C(beta)."""
    return _C(tuple(alpha) + tuple(beta)) == 3 ** len(beta) * _C(alpha) + 2 ** sum(alpha) * _C(beta)



def subroot_residue(entries: Sequence[int], M: int) -> int:
    """rho_p = C_p / (2^K_p - 3^p) reduced mod 2^M (the denominator is odd)."""
    mod = 1 << M
    return _C(entries) * mod_inverse_pow2(_D(entries), M) % mod


def subroot_injective(B: int = 4, p: int = 6, M: int = 30) -> bool:
    """All B^p words over {1..B} give distinct sub-roots mod 2^M.

    Checked only on the grid asked for; nothing is claimed beyond it.
    """
    seen = {subroot_residue(w, M) for w in product(range(1, B + 1), repeat=p)}
    return len(seen) == B**p

# -- necklaces and the gain series -----------------------------------------


def _mobius(n: int) -> int:
    r, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            r = -r
        p += 1
    return -r if n > 1 else r


def necklace_counts(K: int) -> dict[int, int]:
    """Primitive cyclic compositions of K with l parts, for each l."""
    if K < 1:
        raise ValueError("K must be positive")
    if K > 60:
        raise ValueError("K > 60 is outside the supported cost range")
    out = {}
    for l in range(1, K + 1):
        g = math.gcd(K, l)
        tot = sum(_mobius(d) * math.comb(K // d - 1, l // d - 1) for d in range(1, g + 1) if g % d == 0)
        assert tot % l == 0
        out[l] = tot // l
    return out


def compositions(K: int):
    for cuts in product((0, 1), repeat=K - 1):
        parts, run = [], 1
        for c in cuts:
            if c:
                parts.append(run)
                run = 1
            else:
                run += 1
        parts.append(run)
        yield tuple(parts)


def necklace_counts_bruteforce(K: int) -> dict[int, int]:
    """Rotation-orbit enumeration oracle; small K only."""
    if K > 16:
        raise ValueError("brute force limited to K <= 16")
    seen, out = set(), Counter()
    for c in compositions(K):
        if c in seen:
            continue
        orbit = {c[i:] + c[:i] for i in range(len(c))}
        seen |= orbit
        if len(orbit) == len(c):
            out[len(c)] += 1
    return {l: out.get(l, 0) for l in range(1, K + 1)}


def expanding_lengths(K: int) -> list[int]:
    return [l for l in range(1, K + 1) if 3**l > 2**K]


def gain_term(K: int) -> float:
    """R(K) = 2^-K sum over expanding l of M(K, l) (log2 3 - K/l)."""
    M = necklace_counts(K)
    return math.fsum(M[l] * (LOG2_3 - K / l) for l in expanding_lengths(K)) / 2**K


def expanding_count(K: int) -> int:
    M = necklace_counts(K)
    return sum(M[l] for l in expanding_lengths(K))


TAIL_RATIO = 0.979


@dataclass
class GainSeries:
    K_min: int
    R_of_K: list[float]
    partial_sum: float
    tail_bound: float
    max_ratio: float  # over K >= 15 within range

    @property
    def total_bound(self) -> float:
        return self.partial_sum + self.tail_bound

    def R(self, K: int) -> float:
        return self.R_of_K[K - self.K_min]


def gain_series(K_max: int = 55, K_min: int = 3) -> GainSeries:
    if K_max < 10:
        raise ValueError("K_max must be at least 10")
    rs = [gain_term(K) for K in range(K_min, K_max + 1)]
    ratios = [rs[i] / rs[i - 1] for i in range(len(rs)) if i > 0 and K_min + i >= 15]
    mr = max(ratios) if ratios else float("nan")
    if ratios and mr > TAIL_RATIO:
        raise ArithmeticError(f"ratio envelope {TAIL_RATIO} violated: {mr}")
    tail = rs[-1] * TAIL_RATIO / (1 - TAIL_RATIO)
    return GainSeries(K_min, rs, math.fsum(rs), tail, mr)


def kl_bits(a: float, p: float = 0.5) -> float:
    """D(a || p) in bits."""
    out = 0.0
    if a > 0:
        out += a * math.log2(a / p)
    if a < 1:
        out += (1 - a) * math.log2((1 - a) / (1 - p))
    return out


D_STAR = kl_bits(1 / LOG2_3)
R_STAR = 2 ** (-D_STAR)


def chernoff_bound(K: int) -> float:
    """(log2 3 - 1) 2^-(K-1) D(alpha_K || 1/2), alpha_K = (ceil(K/log2 3) - 1)/(K - 1)."""
    if K < 10:
        raise ValueError("chernoff_bound needs K >= 10")
    l0 = next(l for l in range(1, K + 1) if 3**l > 2**K)  # ceil(K/log2 3), exactly
    a = (l0 - 1) / (K - 1)
    return (LOG2_3 - 1) * 2 ** (-(K - 1) * kl_bits(a))


# -- gain observable and Walsh analysis ---------------------------------------


def composition_of(a: int, K: int) -> tuple[int, ...]:
    """Valuation word of the first K halvings from odd a (last part truncated)."""
    if a % 2 == 0:
        raise ValueError("odd residue required")
    x, tot, parts = a, 0, []
    while True:
        y = 3 * x + 1
        v = v2(y)
        if tot + v >= K:
            parts.append(K - tot)
            return tuple(parts)
        parts.append(v)
        tot += v
        x = y >> v


@lru_cache(maxsize=32)
def _composition_table(K: int) -> tuple[tuple[int, ...], ...]:
    return tuple(composition_of(a, K) for a in range(1, 1 << K, 2))


def coding_injective(K: int) -> bool:
    """Distinct odd residues give distinct words, and for each l the
    numerators C mod 2^K of the l-part words are distinct."""
    words = _composition_table(K)
    if len(set(words)) != len(words):
        return False
    by_len = Counter(len(w) for w in words)
    codes = {(len(w), _C(w) % (1 << K)) for w in words}
    return len(codes) == sum(by_len.values())


@dataclass
class GainObservable:
    K: int
    values: np.ndarray  # indexed by residue 0..2^K-1; zero on even residues
    ells: np.ndarray  # odd-step count l(a); 0 on even residues

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.values > 0)

    @property
    def support_fraction(self) -> float:
        return len(self.support) / 2 ** (self.K - 1)

    def centred(self) -> np.ndarray:
        """(l(a) - (K+1)/2) log2 3 on odd residues, 0 on even ones."""
        out = np.zeros(1 << self.K)
        out[1::2] = (self.ells[1::2] - (self.K + 1) / 2) * LOG2_3
        return out


def gain_observable(K: int) -> GainObservable:
    if not 3 <= K <= 16:
        raise ValueError("gain_observable supports 3 <= K <= 16")
    if K <= 14 and not coding_injective(K):
        raise ArithmeticError("coding map not injective")
    vals = np.zeros(1 << K)
    ells = np.zeros(1 << K, dtype=int)
    for i, w in enumerate(_composition_table(K)):
        a = 2 * i + 1
        sig = Signature(w)
        ells[a] = sig.ell
        if sig.expanding and sig.primitive:
            vals[a] = sig.delta / sig.ell
    assert vals.max() <= LOG2_3 - 1 + 1e-12
    return GainObservable(K, vals, ells)


def walsh_spectrum(values, check: bool = True) -> np.ndarray:
    """f^(xi) = 2^-K sum_a f(a) (-1)^<a, xi>, by the fast transform."""
    if isinstance(values, Mapping):
        n = max(values) + 1
        size = 1 << max(0, (n - 1).bit_length())
        f = np.zeros(size)
        for k, v in values.items():
            f[k] = v
    else:
        f = np.array(values, dtype=float)
    N = len(f)
    if N & (N - 1) or N > 1 << 16:
        raise ValueError("length must be a power of two, at most 2^16")
    h, g = 1, f.copy()
    while h < N:
        g = g.reshape(-1, 2, h)
        g = np.stack((g[:, 0] + g[:, 1], g[:, 0] - g[:, 1]), axis=1).reshape(N)
        h *= 2
    g /= N
    if check:
        lhs, rhs = float(np.sum(f * f)) / N, float(np.sum(g * g))
        if abs(lhs - rhs) > 1e-12 * max(1.0, lhs):
            raise ArithmeticError("Parseval identity failed")
    return g


def hamming_weights(K: int) -> np.ndarray:
    idx = np.arange(1 << K)
    return np.array([bin(i).count("1") for i in idx]) if K <= 8 else np.unpackbits(
        idx.astype(">u4").view(np.uint8).reshape(-1, 4), axis=1).sum(axis=1)


def band_power(values) -> np.ndarray:
    """Share of Walsh power per Hamming weight."""
    g = walsh_spectrum(values)
    K = len(g).bit_length() - 1
    p = g * g
    w = hamming_weights(K)
    return np.bincount(w, weights=p, minlength=K + 1) / p.sum()


def collatz_transient(n0: int) -> list[int]:
    out, n = [], n0
    while n != 1:
        out.append(n)
        n = collatz_step(n)
    return out


def orbit_measure(values: Sequence[int], K: int) -> np.ndarray:
    return np.bincount(np.asarray(values, dtype=np.int64) % (1 << K), minlength=1 << K) / len(values)


def spectral_content(mu: np.ndarray, w: int) -> float:
    """S_w: mean of |mu^(xi)|^2 over weight-w frequencies, mu^(xi) = sum_a mu(a) chi_xi(a)."""
    K = len(mu).bit_length() - 1
    g = walsh_spectrum(mu) * len(mu)
    hw = hamming_weights(K)
    return float(np.sum(g[hw == w] ** 2)) / math.comb(K, w)


def spectral_excess(n0: int = 837799, K: int = 8, w: int = 1, trials: int = 200, seed: int = 11) -> float:
    """S_w of the transient orbit over the mean S_w of uniform sequences of equal length."""
    orb = collatz_transient(n0)
    s = spectral_content(orbit_measure(orb, K), w)
    rng = np.random.Generator(np.random.PCG64(seed))
    base = np.mean([spectral_content(orbit_measure(rng.integers(0, 1 << K, len(orb)), K), w)
                    for _ in range(trials)])
    return s / base


# -- structural checks ----------------------------------------------------------


def oscillation_factor(K: int) -> float:
    """Theta_K by the closed form; cross-checked against the direct max/min."""
    a = LOG2_3
    fl = math.floor(K / a)
    r = K / a - fl
    closed = (a - 1) / a * (fl + 1) / (1 - r)
    gains = [a - K / l for l in range(1, K + 1) if a - K / l > 0]
    direct = max(gains) / min(gains)
    if abs(closed - direct) > 1e-9 * direct:
        raise ArithmeticError("oscillation closed form mismatch")
    return closed


def oscillation_records(K_max: int = 100, K_min: int = 3) -> list[int]:
    """K where Theta_K beats every earlier value."""
    best, out = -1.0, []
    for K in range(K_min, K_max + 1):
        t = oscillation_factor(K)
        if t > best:
            best = t
            out.append(K)
    return out


@dataclass
class StructuralReport:
    K: int
    s: int
    suffix_binomial: bool
    harmonic: bool
    contraction_ratio: Fraction
    contraction_expected: Fraction
    theta: float
    spike_records: list[int]
    sparsity: tuple[float, float] | None

    @property
    def ok(self) -> bool:
        sp = self.sparsity is None or self.sparsity[0] <= self.sparsity[1]
        return (self.suffix_binomial and self.harmonic and sp
                and self.contraction_ratio == self.contraction_expected)


def _ells(K: int) -> np.ndarray:
    return np.array([len(w) for w in _composition_table(K)])  # index i <-> residue 2i+1


def structural_checks(K: int, s: int) -> StructuralReport:
    if K < 3 or s < 1 or K + s > 16:
        raise ValueError("need K >= 3, s >= 1, K + s <= 16")
    lo, hi = _ells(K), _ells(K + s)
    # lifts of residue a mod 2^K: a + e 2^K, index (a + e 2^K - 1)/2 = i + e 2^(K-1)
    fib = hi.reshape(1 << s, 1 << (K - 1))  # fib[e, i]
    suffix = fib - lo[None, :]
    want = np.array([math.comb(s, j) for j in range(s + 1)])
    binom = all(np.array_equal(np.bincount(suffix[:, i], minlength=s + 1), want)
                for i in range(1 << (K - 1)))
    # coarse average of centred h_{K+s} equals centred h_K
    hK = (lo - (K + 1) / 2) * LOG2_3
    hKs = (fib - (K + s + 1) / 2) * LOG2_3
    harmonic = bool(np.allclose(hKs.mean(axis=0), hK, atol=1e-12))
    # sup-norm contraction under projection K -> K - 3 (exact in half-integers of l)
    if K >= 6:
        top = _ells(K)
        bot = top.reshape(8, 1 << (K - 4)).mean(axis=0)
        num = max(abs(Fraction(float(x)) - Fraction(K + 1, 2)) for x in bot)
        den = max(abs(Fraction(int(x)) - Fraction(K + 1, 2)) for x in top)
        ratio, expected = num / den, Fraction(K - 4, K - 1)
    else:
        ratio = expected = Fraction(0)
    sparsity = None
    if K >= 10:
        sparsity = (len(gain_observable(K).support) / 2**K, 2 ** (-(K - 1) * D_STAR / 2))
    return StructuralReport(K, s, binom, harmonic, ratio, expected, oscillation_factor(K),
                            oscillation_records(100), sparsity)
