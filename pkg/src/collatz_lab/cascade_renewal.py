"""Cascade / gap renewal structure.

Parse used throughout: a cascade opens at an iterate = 3 mod 4. Inside it,
iterates = 3 mod 4 take burst steps (v = 1) and iterates = 1 mod 8 take
recovery steps (v = 2). The first iterate = 5 mod 8 closes the cascade and
opens the gap, which lasts until the next iterate = 3 mod 4.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exact_arith import (
    Polynomial,
    RationalMatrix,
    count_real_roots,
    perron_root,
    spectral_gap_modulus,
    stationary_distribution,
    tv_distance,
    v2,
    _solve,
)
from .modular_laws import Distribution, ResidueClass, _distribution, block_residue
from .syracuse_core import LOG2_3, OrbitTrace, orbit, syracuse_step

ENTRY_CLASSES = tuple(range(3, 32, 4))


@dataclass
class CascadeCycle:
    episodes: list[tuple[int, int]]  # (burst length k, recovery depth j)
    gap: tuple[int, ...]
    entry_residue: int  # mod 32
    exit_residue: int  # mod 32, the next cascade entry
    cascade_valuations: tuple[int, ...] = ()
    entry: int = 0
    exit: int = 0

    def __post_init__(self):
        if not self.episodes:
            raise ValueError("a cascade has at least one episode")
        if any(v < 2 for v in self.gap):
            raise ValueError("gap valuations must be >= 2")

    @property
    def L(self) -> int:
        return len(self.episodes)

    @property
    def s_cascade(self) -> int:
        return sum(self.cascade_valuations)

    @property
    def s_gap(self) -> int:
        return sum(self.gap)

    @property
    def steps(self) -> int:
        return len(self.cascade_valuations) + len(self.gap)

    @property
    def max_burst(self) -> int:
        return max(k for k, _ in self.episodes)

    @property
    def delta(self) -> float:
        """Bit change log2(exit / entry) over the cycle."""
        return math.log2(self.exit / self.entry) if self.entry else float("nan")


@dataclass(frozen=True)
class GapPath:
    valuations: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "valuations", tuple(self.valuations))
        if not self.valuations:
            raise ValueError("gap path must be nonempty")
        if any(v < 2 for v in self.valuations):
            raise ValueError("gap path valuations must be >= 2")

    @property
    def S(self) -> int:
        return sum(self.valuations)


def _parse_cycles(values: Sequence[int], vals: Sequence[int]) -> list[CascadeCycle]:
    out = []
    T = len(vals)
    t = 0
    while t < T and values[t] % 4 != 3:
        t += 1
    while t < T:
        start = t
        episodes = []
        k = j = 0
        while t < T and values[t] % 8 != 5:
            n = values[t]
            if n % 4 == 3:
                if j:  # recovery finished, a new burst opens an episode
                    episodes.append((k, j))
                    k = j = 0
                k += 1
            else:
                j += 1
            t += 1
        episodes.append((k, j))
        mid = t
        while t < T and values[t] % 4 == 1 and values[t] != 1:
            t += 1
        if t >= T or values[t] % 4 != 3:
            break  # cycle not completed inside the trace
        out.append(
            CascadeCycle(
                episodes,
                tuple(vals[mid:t]),
                values[start] % 32,
                values[t] % 32,
                tuple(vals[start:mid]),
                values[start],
                values[t],
            )
        )
    return out


def classify_cascades(trace: OrbitTrace) -> list[CascadeCycle]:
    if not trace.values:
        raise ValueError("empty trace")
    return _parse_cycles(trace.values, trace.valuations)


@dataclass
class CascadeBatch:
    cycles_per_orbit: list[list[CascadeCycle]]

    @property
    def cycles(self) -> list[CascadeCycle]:
        return [c for cs in self.cycles_per_orbit for c in cs]

    def mean(self, attr: str) -> float:
        cs = self.cycles
        return sum(getattr(c, attr) for c in cs) / len(cs)


def cascade_batch(n_max: int, max_cycles: int = 50, n_min: int = 3) -> CascadeBatch:
    """Cascade-gap cycles of every odd start in [n_min, n_max]."""
    per = []
    for n0 in range(n_min | 1, n_max + 1, 2):
        tr = orbit(n0, 100_000)
        per.append(_parse_cycles(tr.values, tr.valuations)[:max_cycles])
    return CascadeBatch(per)


# -- episode laws ------------------------------------------------------------------


def _depth(x: int, bits: int) -> tuple[int, int, int] | None:
    """Run (3x+1)/4 while v = 2; returns (depth, iterate, bits left) or None."""
    j = 0
    while True:
        if bits < 3:
            return None
        if (3 * x + 1) % 8 != 4:
            return j, x, bits
        x = ((3 * x + 1) >> 2) % (1 << (bits - 2))
        bits -= 2
        j += 1


def two_thirds_census(j: int, depth: int | None = None) -> Fraction:
    """Among odd C of exact depth j, the fraction whose post-recovery iterate is 3 mod 4."""
    if j < 0:
        raise ValueError("j must be >= 0")
    need = 2 * j + 3
    depth = need if depth is None else depth
    if depth < need:
        raise ValueError(f"depth must be >= {need}")
    hits = total = 0
    for C in range(1, 1 << depth, 2):
        r = _depth(C, depth)
        if r is None or r[0] != j:
            continue
        total += 1
        hits += r[1] % 4 == 3
    return Fraction(hits, total)


def post_recovery_branch(j: int, t: int) -> int:
    """n_j mod 4 for C = 1 + t 2^(2j+1); closed form n_j = 1 + 2 t 3^j."""
    C = 1 + t * 2 ** (2 * j + 1)
    x = C
    for _ in range(j):
        x, v = syracuse_step(x)
        assert v == 2
    assert x == 1 + 2 * t * 3 ** j
    return x % 4


@dataclass
class TransitionLaws:
    k_law: Distribution
    depth_law: Distribution


def transition_census(depth: int) -> TransitionLaws:
    """Next burst length k' and next depth j' over all odd C mod 2^depth.

    k' is tallied over every C whose k' is decided. For j' only continuing
    C with at least 2D+3 bits left after the burst are used, D = (depth-9)//2;
    that event depends on (j, k') alone, so the sub-census is still uniform
    in C' and the masses for j' <= D are exact; deeper j' goes to the deficit.
    """
    if depth < 10:
        raise ValueError("depth must be >= 10")
    D = max(0, (depth - 9) // 2)
    need = 2 * D + 3
    kc, jc = Counter(), Counter()
    k_unres = j_deep = 0
    total = 1 << (depth - 1)
    cont = 0
    for C in range(1, 1 << depth, 2):
        r = _depth(C, depth)
        if r is None:
            k_unres += 1
            continue
        _, n, bits = r
        w = (n + 1) % (1 << bits)
        kk = v2(w) if w else bits
        if kk >= bits:
            k_unres += 1
            continue
        kp = kk - 1
        kc[kp] += 1
        bits2 = bits - (kp + 1)
        if kp == 0 or bits2 < need:
            continue
        cont += 1
        # n = 2^(k'+1) m' - 1, cofactor C' = 3^k' m'
        m = (w >> (kp + 1)) % (1 << bits2)
        jd, _, _ = _depth(3 ** kp * m % (1 << bits2), bits2) or (D + 1, 0, 0)
        if jd > D:
            j_deep += 1
        else:
            jc[jd] += 1
    return TransitionLaws(_distribution(kc, total, k_unres), _distribution(jc, cont, j_deep))


def gap_first_valuation(j: int, check: bool = True) -> int:
    """Valuation of the first gap step after a cascade that ends at depth j."""
    if j < 0:
        raise ValueError("j must be >= 0")
    v = 2 + v2(1 + 3 ** (j + 1))
    if check:
        # the terminal iterate n = 1 + 4 * 3^j  (t = 2 branch)
        n = 1 + 4 * 3 ** j
        if syracuse_step(n)[1] != v:
            raise ArithmeticError("closed form disagrees with direct step")
    return v


def expected_gap_first_valuation(terms: int = 64) -> Fraction:
    """E[v1] under Pr(j = d) = 3/4 4^-d; the truncated tail is added in closed form."""
    s = sum((Fraction(3, 4) / 4 ** d * gap_first_valuation(d, check=False) for d in range(terms)), Fraction(0))
    # tail: d >= terms, terms even, masses 3/4 4^-d alternate v = 4, 3
    even = Fraction(3, 4) / 4 ** terms / (1 - Fraction(1, 16))
    return s + 4 * even + 3 * even / 4


@dataclass
class Compensation:
    deficit: float
    surplus: float
    compensated: bool


def gap_compensation(j: int, L: int) -> Compensation:
    if j < 0 or L < 0:
        raise ValueError("j, L must be >= 0")
    D = L * (2 * (LOG2_3 - 1) + j * (LOG2_3 - 2))
    G = gap_first_valuation(j, check=False) - LOG2_3
    return Compensation(D, G, G >= D)


# -- cascade Markov chain ------------------------------------------------------------

CASCADE_STATES = (1, 3, 7)
CASCADE_VALUATION = {1: 2, 3: 1, 7: 1}


@dataclass
class CascadeMarkov:
    Q: RationalMatrix
    exit: list[Fraction]
    fundamental: RationalMatrix
    q3: Fraction
    q7: Fraction
    expected_S: Fraction
    rho: Fraction
    tables: dict = field(default_factory=dict)

    @property
    def q(self) -> Fraction:
        return (self.q3 + self.q7) / 2

    @property
    def burst_exit_gap_fraction(self) -> Fraction:
        """From state 1, share of non-continuing outcomes that go straight to the gap."""
        row = self.Q.rows[0]
        return self.exit[0] / (self.exit[0] + row[1] + row[2])


def cascade_transition_tables() -> dict[int, dict[int, tuple[int, int]]]:
    """state -> {input residue: (valuation, output mod 8)}, mod 32 for state 1, mod 16 else."""
    out = {}
    for s in CASCADE_STATES:
        mod = 32 if s == 1 else 16
        tab = {}
        for n in range(s, mod, 8):
            y, v = syracuse_step(n + 10 * mod)  # any representative works at this resolution
            tab[n] = (v, y % 8)
        out[s] = tab
    return out


def cascade_markov() -> CascadeMarkov:
    tabs = cascade_transition_tables()
    idx = {s: i for i, s in enumerate(CASCADE_STATES)}
    Q = [[Fraction(0)] * 3 for _ in range(3)]
    ex = [Fraction(0)] * 3
    for s, tab in tabs.items():
        w = Fraction(1, len(tab))
        for v, o in tab.values():
            if v != CASCADE_VALUATION[s]:
                raise ArithmeticError("unexpected valuation in cascade table")
            if o == 5:
                ex[idx[s]] += w
            else:
                Q[idx[s]][idx[o]] += w
    Qm = RationalMatrix(Q)
    N = (RationalMatrix.identity(3) - Qm).inverse()
    # h(s) = Pr(reach {3,7} before 5 | currently at s); h(3) = h(7) = 1
    h1 = (Q[0][1] + Q[0][2]) / (1 - Q[0][0])
    h = [h1, Fraction(1), Fraction(1)]
    q3 = sum(Q[1][c] * h[c] for c in range(3))
    q7 = sum(Q[2][c] * h[c] for c in range(3))
    vis = [(N[1, c] + N[2, c]) / 2 for c in range(3)]
    ES = sum(vis[c] * CASCADE_VALUATION[s] for c, s in enumerate(CASCADE_STATES))
    rho = perron_root(Qm).exact
    return CascadeMarkov(Qm, ex, N, q3, q7, ES, rho, tabs)


# -- generating function -----------------------------------------------------------


def cascade_pgf(z) -> Fraction:
    """G(z) = z / (4 - 2z - z^2), the PGF of the cascade valuation."""
    z = Fraction(z)
    d = 4 - 2 * z - z * z
    if d == 0:
        raise ZeroDivisionError("z is a pole of the cascade PGF")
    return z / d


def cascade_pgf_markov(z) -> Fraction:
    """Same PGF from first-step equations on the (1,3,7) chain, entry averaged over {3,7}."""
    z = Fraction(z)
    # unknowns G1, G3, G7
    a = [
        [1 - z * z / 4, -z * z / 4, -z * z / 4],
        [-z / 2, Fraction(1), Fraction(0)],
        [Fraction(0), -z / 2, 1 - z / 2],
    ]
    b = [z * z / 4, z / 2, Fraction(0)]
    G1, G3, G7 = _solve(a, b)
    return (G3 + G7) / 2


def pgf_mean() -> Fraction:
    # G = z / D, G'(1) = (D(1) - D'(1)) / D(1)^2 with D = 4 - 2z - z^2
    D1 = Fraction(1)
    dD1 = Fraction(-4)
    return (D1 - dD1) / D1 ** 2


def pgf_coefficients(n: int) -> list[Fraction]:
    """Power-series coefficients c_0..c_{n-1}: 4c_s = 2c_{s-1} + c_{s-2} + [s = 1]."""
    c = [Fraction(0)] * n
    for s in range(1, n):
        c[s] = (2 * c[s - 1] + (c[s - 2] if s >= 2 else 0) + (1 if s == 1 else 0)) / 4
    return c


@dataclass
class PGFSingularity:
    interval: tuple[Fraction, Fraction]  # contains sqrt(5) - 1
    alpha_interval: tuple[float, float]

    @property
    def alpha(self) -> float:
        return sum(self.alpha_interval) / 2


def pgf_singularity(tol=Fraction(1, 10**12)) -> PGFSingularity:
    """Smallest positive pole: root of z^2 + 2z - 4, isolated by Sturm bisection."""
    p = Polynomial([-4, 2, 1])
    lo, hi = Fraction(1), Fraction(2)
    if count_real_roots(p, lo, hi) != 1:
        raise ArithmeticError("pole not isolated in (1, 2]")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if count_real_roots(p, lo, mid) == 1:
            hi = mid
        else:
            lo = mid
    return PGFSingularity((lo, hi), (math.log2(lo), math.log2(hi)))


# -- uniform fibers ------------------------------------------------------------------------


def _follow(n: int, path: Sequence[int]) -> int | None:
    for v in path:
        n, w = syracuse_step(n)
        if w != v:
            return None
    return n


def uniform_fiber_check(path, R: int) -> bool:
    """Each odd residue mod 2^R has the same number of preimages mod 2^(S+R)."""
    gp = path if isinstance(path, GapPath) else GapPath(tuple(path))
    if R < 1:
        raise ValueError("R must be >= 1")
    if gp.S + R > 24:
        raise ValueError("S + R > 24: enumeration too large")
    e = gp.S + R
    mod = 1 << e
    counts = Counter()
    for n in range(1, mod, 2):
        # lift by mod so the integer orbit is not cut short at 1
        y = _follow(n + mod, gp.valuations)
        if y is not None:
            counts[y % (1 << R)] += 1
    if not counts:
        raise ValueError(f"path {gp.valuations} is not realizable")
    targets = range(1, 1 << R, 2)
    vals = [counts[t] for t in targets]
    return min(vals) == max(vals) > 0


def image_burst_law(path, R: int) -> Distribution:
    """Law of v2(out + 1) over the image of a gap path, read mod 2^R."""
    gp = path if isinstance(path, GapPath) else GapPath(tuple(path))
    e = gp.S + R
    mod = 1 << e
    counts, unres, total = Counter(), 0, 0
    for n in range(1, mod, 2):
        y = _follow(n + mod, gp.valuations)
        if y is None:
            continue
        total += 1
        w = (y + 1) % (1 << R)
        if w == 0:
            unres += 1
        else:
            counts[v2(w)] += 1
    return _distribution(counts, total, unres)


@dataclass
class FullCycleFiber:
    r_tau: ResidueClass
    c_tau: int
    b_tau: int
    K: int
    S: int
    multiplier_check: bool


def full_cycle_fiber(trajectory: Sequence[int], u_max: int = 64) -> FullCycleFiber:
    """n0 = r + 2^(S+1) u  ->  n_exit = c + 2 * 3^K * u, checked by simulation."""
    tau = tuple(trajectory)
    K, S = len(tau), sum(tau)
    if K == 0:
        return FullCycleFiber(ResidueClass(1, 1), 1, 0, 0, 0, True)
    if tau[0] != 1:
        raise ValueError("a full cycle opens with a burst step (v = 1)")
    cls = block_residue(tau).residue
    r = cls.value
    # realizability: cascade steps then gap steps, nothing after the gap
    x = r + (1 << (S + 1))
    seen_gap = False
    for v in tau:
        if x % 8 == 5:
            seen_gap = True
        elif seen_gap and x % 4 == 3:
            raise ValueError("trajectory re-enters a cascade before it ends")
        x, _ = syracuse_step(x)
    if not seen_gap:
        raise ValueError("trajectory has no gap phase")
    # c_tau = (3^K r + C_tau) / 2^S via the block affine map
    num, den = r, 1
    for v in tau:
        num, den = 3 * num + den, den * (1 << v)
    if num % den:
        raise ArithmeticError("class representative does not realize the path")
    c = num // den
    ok = True
    for u in range(u_max):
        n0 = r + (u << (S + 1))
        y = _follow(n0, tau) if n0 > 1 or K == 0 else None
        if y is None or y != c + 2 * 3 ** K * u:
            ok = False
            break
    return FullCycleFiber(cls, c, (c - 1) // 2, K, S, ok)


# -- fiber-averaged transition matrix -----------------------------------------------------


def next_cascade_entry(n: int) -> int:
    """From an entry iterate (3 mod 4): finish the cascade, then the gap."""
    if n % 4 != 3:
        raise ValueError("not a cascade entry")
    while n % 8 != 5:
        n, _ = syracuse_step(n)
    while n % 4 == 1:
        if n == 1:
            raise ArithmeticError("orbit reached 1 inside the cycle")
        n, _ = syracuse_step(n)
    return n


def fiber_transition_matrix(R: int, offset: int = 100003) -> RationalMatrix:
    if not 7 <= R <= 13:
        raise ValueError("R must be in [7, 13]")
    if offset < 1 << 10:
        raise ValueError("offset too small: orbits could reach 1 within a cycle")
    size = 1 << (R - 5)
    idx = {a: i for i, a in enumerate(ENTRY_CLASSES)}
    rows = []
    for a in ENTRY_CLASSES:
        cnt = [0] * 8
        for i in range(size):
            n = a + 32 * i + (offset << R)
            cnt[idx[next_cascade_entry(n) % 32]] += 1
        rows.append([Fraction(c, size) for c in cnt])
    return RationalMatrix(rows)


@dataclass
class SpectralSummary:
    T: RationalMatrix
    lambda2_bracket: tuple[Fraction, Fraction]
    gamma: float
    stationary: list[Fraction]
    tv_uniform: Fraction
    lambda2_float: complex


def fiber_spectral_summary(R: int, offset: int = 100003, tol=Fraction(1, 4000)) -> SpectralSummary:
    T = fiber_transition_matrix(R, offset)
    lo, hi = spectral_gap_modulus(T, tol)
    ev = sorted(np.linalg.eigvals(T.to_numpy()), key=abs, reverse=True)
    pi = stationary_distribution(T)
    tv = tv_distance(pi, [Fraction(1, 8)] * 8)
    return SpectralSummary(T, (lo, hi), 1 - float(lo + hi) / 2, pi, tv, complex(ev[1]))


def tv_summability_bound(B_min: int, R: int, alpha: float, C: float) -> float:
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return C * 2.0 ** (-alpha * (B_min - R)) / (1 - 2.0 ** (-2 * alpha))


# -- batch statistics -------------------------------------------------------------------------


def _corr(pairs) -> float:
    a = np.asarray(pairs, dtype=float)
    return float(np.corrcoef(a[:, 0], a[:, 1])[0, 1])


@dataclass
class Decorrelation:
    burst_corr_lag1: float
    delta_corr_lag1: float
    max_pos_run: int
    pairs: int
    feedback_mean: float  # E[delta_{i+1} | max burst_i >= 5]
    mean_delta: float


def carry_decorrelation(n_max: int, max_cycles: int = 50, batch: CascadeBatch | None = None) -> Decorrelation:
    if n_max < 10_000:
        raise ValueError("n_max must be >= 10^4")
    batch = batch or cascade_batch(n_max, max_cycles)
    bp, dp, fb = [], [], []
    longest = 0
    for cs in batch.cycles_per_orbit:
        run = 0
        for c in cs:
            run = run + 1 if c.delta > 0 else 0
            longest = max(longest, run)
        for a, b in zip(cs, cs[1:]):
            bp.append((a.max_burst, b.max_burst))
            dp.append((a.delta, b.delta))
            if a.max_burst >= 5:
                fb.append(b.delta)
    deltas = [c.delta for c in batch.cycles]
    return Decorrelation(
        _corr(bp), _corr(dp), longest, len(bp), float(np.mean(fb)) if fb else float("nan"), float(np.mean(deltas))
    )


@dataclass
class TailFit:
    alpha: float
    C: float
    cycles: int


def cycle_valuation_tail(batch: CascadeBatch, s_range: tuple[int, int] = (10, 40)) -> TailFit:
    """Least-squares fit of log2 Pr(S_cycle > s) = log2 C - alpha s."""
    S = np.array([c.s_cascade + c.s_gap for c in batch.cycles])
    ss = np.arange(s_range[0], s_range[1] + 1)
    tail = np.array([(S > s).mean() for s in ss])
    keep = tail > 0
    slope, icpt = np.polyfit(ss[keep], np.log2(tail[keep]), 1)
    return TailFit(float(-slope), float(2 ** icpt), len(S))
