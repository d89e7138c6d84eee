"""Fiber-57 return structure.

Odd iterates n = 57 (mod 64) are written n = 64q + 57. The quotient q
mod 8^r is the state tracked here. A q = 7 (mod 8) quotient returns to
the fiber in two odd steps, with q' = 9*(q // 8) + 8, so on residues the
update is the chain map q -> 9q + 8 after a digit shift. The invariant
core I_r collects the Cantor residues (octal digits 0, 3, 7) that the
chain map never pushes out.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .exact_arith import RationalMatrix, mod_inverse_pow2, perron_root, v2
from .syracuse_core import syracuse_step

CANTOR_DIGITS = (0, 3, 7)
KNOWN_GAP_CAVEAT = "does not include q = 3 (mod 8) returns with gap >= 6"


@dataclass(frozen=True, order=True)
class OctalResidue:
    value: int
    r: int

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("depth must be positive")
        if not 0 <= self.value < 8**self.r:
            raise ValueError(f"{self.value} out of range for depth {self.r}")

    @property
    def modulus(self) -> int:
        return 8**self.r

    def digits(self) -> tuple[int, ...]:
        """Octal digits, least significant first."""
        return tuple((self.value >> (3 * i)) & 7 for i in range(self.r))

    def project(self, r: int) -> "OctalResidue":
        if r > self.r:
            raise ValueError("can only project to a smaller depth")
        return OctalResidue(self.value % 8**r, r)

    def octal(self) -> str:
        return format(self.value, "o").zfill(self.r)


def chain_map(q: OctalResidue) -> OctalResidue:
    return OctalResidue((9 * q.value + 8) % q.modulus, q.r)


def cantor_residues(r: int) -> np.ndarray:
    vals = np.zeros(1, dtype=np.int64)
    for i in range(r):
        vals = (vals[:, None] + np.array(CANTOR_DIGITS, dtype=np.int64)[None, :] * 8**i).ravel()
    return np.sort(vals)


@dataclass(frozen=True)
class CoreSet:
    r: int
    elements: frozenset
    fixed_points: tuple[int, ...]
    two_cycles: tuple[tuple[int, int], ...]

    def values(self) -> list[int]:
        return sorted(e.value for e in self.elements)

    def __contains__(self, q) -> bool:
        if isinstance(q, OctalResidue):
            return q in self.elements
        return OctalResidue(q % 8**self.r, self.r) in self.elements

    def __len__(self):
        return len(self.elements)


def _core_values(r: int) -> list[int]:
    # peel off residues whose image leaves the surviving set until stable
    N = 8**r
    alive = cantor_residues(r)
    while True:
        img = (9 * alive + 8) % N
        keep = np.isin(img, alive)
        if keep.all():
            return [int(x) for x in alive]
        alive = alive[keep]


def invariant_core(r: int) -> CoreSet:
    if r < 2:
        raise ValueError("invariant core needs r >= 2")
    if r > 10:
        raise ValueError("r > 10 is beyond the enumerated range")
    vals = _core_values(r)
    N = 8**r
    img = {q: (9 * q + 8) % N for q in vals}
    fixed = tuple(q for q in vals if img[q] == q)
    cycles = tuple(sorted({tuple(sorted((q, img[q]))) for q in vals
                           if img[q] != q and img[img[q]] == q}))
    if len(vals) != 5:
        raise AssertionError(f"|I_{r}| = {len(vals)}, expected 5")
    if len(fixed) != 3 or len(cycles) != 1:
        raise AssertionError(f"I_{r} is not three fixed points plus a 2-cycle")
    expect = {k * 8 ** (r - 1) - 1 for k in (1, 4, 8)}
    if set(fixed) != expect:
        raise AssertionError(f"fixed points {fixed} differ from k*8^(r-1)-1")
    return CoreSet(r, frozenset(OctalResidue(q, r) for q in vals), fixed, cycles)


def core_closed(core: CoreSet) -> bool:
    """Zero escapes: the chain map sends I_r into itself."""
    return all(chain_map(q) in core.elements for q in core.elements)


def projective_towers(r_max: int) -> dict[int, list[int]]:
    """Elements of I_r that lift through every depth up to r_max."""
    if r_max < 3:
        raise ValueError("need at least two depths")
    cores = {r: set(_core_values(r)) for r in range(2, r_max + 1)}
    surv = {r_max: sorted(cores[r_max])}
    for r in range(r_max - 1, 1, -1):
        surv[r] = sorted({y % 8**r for y in surv[r + 1]} & cores[r])
    return surv


def tower_element(r_max: int) -> list[int]:
    """Surviving towers at depths 2..r_max-2; each must be 8^r - 1."""
    surv = projective_towers(r_max)
    out = []
    for r in range(2, r_max - 1):
        if surv[r] != [8**r - 1]:
            raise AssertionError(f"depth {r}: towers {surv[r]}")
        out.append(surv[r][0])
    return out


# ---- exact return structure ----

@dataclass(frozen=True)
class Q7Return:
    n: int
    step1: int
    step2: int
    step1_residue: int
    step2_quotient: int


def q7_return(m: int) -> Q7Return:
    if m < 0:
        raise ValueError("m must be nonnegative")
    n = 512 * m + 505
    s1, _ = syracuse_step(n)
    s2, _ = syracuse_step(s1)
    # closed forms checked against the simulation
    assert s1 == 384 * m + 379 and s1 % 64 == 59
    assert s2 == 64 * (9 * m + 8) + 57
    return Q7Return(n, s1, s2, s1 % 64, (s2 - 57) // 64)


def non_autonomy_witness(r: int = 2):
    """Two quotients equal mod 8^r whose actual returns differ mod 8^r.

    q = 63 is a chain-map fixed point mod 64, yet its two-step return is
    71 = 7 (mod 64). The lift q + 64 has the same residue but returns to 15.
    """
    N = 8**r
    q = N - 1
    a = q7_return((q - 7) // 8).step2_quotient % N
    b = q7_return((q + N - 7) // 8).step2_quotient % N
    return q, a, b


@dataclass(frozen=True)
class Q3Trace:
    n: int
    residues: tuple[int, ...]
    valuations: tuple[int, ...]
    closed_form: tuple[int, ...]


def q3_trace(m: int) -> Q3Trace:
    if m < 0:
        raise ValueError("m must be nonnegative")
    n = 512 * m + 249
    x, res, vs = n, [], []
    for _ in range(4):
        x, v = syracuse_step(x)
        res.append(x % 64)
        vs.append(v)
    cf = (59, 25, (48 * m + 19) % 64, (8 * m + 61) % 64)
    assert tuple(res) == cf, (res, cf)
    assert 57 not in res
    _, v5 = syracuse_step(x)
    return Q3Trace(n, tuple(res), tuple(vs) + (v5,), cf)


def gap4_unsolvable() -> bool:
    """48m = 38 (mod 64) has no solution since gcd(48, 64) = 16 does not divide 38."""
    return math.gcd(48, 64) == 16 and 38 % 16 != 0 and all((48 * m - 38) % 64 for m in range(64))


@dataclass(frozen=True)
class Gap5Cylinder:
    w: int
    a_w: int
    modulus: int

    @property
    def density(self) -> Fraction:
        return Fraction(1, self.modulus)


def gap5_cylinder(w: int) -> Gap5Cylinder:
    if not 0 <= w <= 40:
        raise ValueError("w must be in 0..40")
    e = w + 6
    a = ((57 * 2**w - 119) * mod_inverse_pow2(243, e)) % 2**e
    return Gap5Cylinder(w, a, 2**e)


def gap5_union_density(w_max: int) -> Fraction:
    return sum((gap5_cylinder(w).density for w in range(w_max + 1)), Fraction(0))


def gap5_returns(m: int) -> bool:
    """Direct check: n = 512m + 249 lands on fiber 57 at odd step 5."""
    x = 512 * m + 249
    for _ in range(5):
        x, _ = syracuse_step(x)
    return x % 64 == 57


def gap5_destinations(w: int, count: int = 64) -> list[int]:
    """Return quotients mod 64 for the first `count` members of cylinder w."""
    c = gap5_cylinder(w)
    out = []
    for k in range(count):
        x = 512 * (c.a_w + k * c.modulus) + 249
        for _ in range(5):
            x, _ = syracuse_step(x)
        if x % 64 != 57:
            raise AssertionError("cylinder member missed fiber 57")
        out.append((x // 64) % 64)
    return out


def gap5_disjoint(w_max: int = 10, depth: int = 16) -> bool:
    seen = np.zeros(2**depth, dtype=np.int8)
    ms = np.arange(2**depth, dtype=np.int64)
    for w in range(w_max + 1):
        c = gap5_cylinder(w)
        hit = (ms % c.modulus) == c.a_w
        if (seen[hit] > 0).any():
            return False
        seen[hit] += 1
    return True


# ---- partial kernel ----

I2 = (7, 27, 31, 59, 63)


@dataclass(frozen=True)
class KernelReport:
    matrix: RationalMatrix
    states: tuple[int, ...]
    rho: Fraction
    caveat: str = KNOWN_GAP_CAVEAT
    # withdrawn earlier estimate, kept only as a note
    consistency_note: float = field(default=abs(15 / 119 - 129 / 1024))


def partial_kernel() -> RationalMatrix:
    """Known-gap depth-2 return kernel on I_2.

    Rows with low digit 7 use the gap-2 block: the return quotient's low
    digit is uniform, so each of the three digit-matching targets gets 1/8.
    Rows with low digit 3 use the gap-5 cylinders: 1/2048 to each target.
    q = 7 has no known-gap continuation into I_2.
    """
    idx = {q: i for i, q in enumerate(I2)}
    rows = [[Fraction(0)] * 5 for _ in range(5)]
    g5 = Fraction(1, 2048)
    for q in (27, 59):
        rows[idx[q]] = [g5] * 5
    for t in (27, 59):
        rows[idx[31]][idx[t]] = Fraction(1, 8)
    for t in (7, 31, 63):
        rows[idx[63]][idx[t]] = Fraction(1, 8)
    return RationalMatrix(rows)


def kernel_report() -> KernelReport:
    m = partial_kernel()
    pr = perron_root(m)
    if pr.exact is None:
        raise ArithmeticError("partial kernel root is not rational")
    return KernelReport(m, I2, pr.exact)


def core_permutation_radius(r: int = 2) -> float:
    """Chain map restricted to I_r as a 0/1 matrix; it is a permutation."""
    core = invariant_core(r)
    vals = core.values()
    pos = {q: i for i, q in enumerate(vals)}
    P = np.zeros((5, 5))
    for q in vals:
        P[pos[q], pos[(9 * q + 8) % 8**r]] = 1
    if not ((P.sum(0) == 1).all() and (P.sum(1) == 1).all()):
        raise AssertionError("chain map is not a permutation on the core")
    return float(max(abs(np.linalg.eigvals(P))))


@dataclass(frozen=True)
class Bottleneck:
    rho: Fraction
    c0: float
    capacity: float
    deficit: float
    alpha: Fraction

    def memory_bound(self, r: int) -> float:
        return r * self.c0


def bottleneck_constants() -> Bottleneck:
    rho = kernel_report().rho
    c0 = math.log2(1 / rho)
    cap = math.log2(5)
    return Bottleneck(rho, c0, cap, c0 - cap, 5 * rho)


# ---- absorption ----

@dataclass(frozen=True)
class Absorption:
    r: int
    s: int
    offset: int
    steps: int
    revisited_core: bool
    revisits: tuple[tuple[int, int], ...]  # (odd step, quotient residue)
    final_state: int  # n mod 64 * 8^r on absorption


def absorption_run(r: int, s, offset: int = 10000, cap: int = 1000) -> Absorption:
    """Run odd steps from n0 = 64(s + 8^r offset) + 57 until n = 1 (mod 8^r).

    Revisits are fiber-57 iterates after n0 whose quotient mod 8^r lies
    in I_r. Steps are Syracuse (odd-to-odd) steps.
    """
    if not 2 <= r <= 10:
        raise ValueError("r must be in 2..10")
    if offset < 0:
        raise ValueError("offset must be nonnegative")
    sv = s.value if isinstance(s, OctalResidue) else int(s)
    core = invariant_core(r)
    if sv not in core:
        raise ValueError(f"{sv} is not in I_{r}")
    N = 8**r
    n = 64 * (sv + N * offset) + 57
    t = 0
    revs = []
    while n % N != 1:
        if t >= cap:
            raise RuntimeError(f"absorption exceeded {cap} steps (r={r}, s={sv})")
        n, _ = syracuse_step(n)
        t += 1
        if n % 64 == 57 and (n // 64) % N in core:
            revs.append((t, (n // 64) % N))
    return Absorption(r, sv, offset, t, bool(revs), tuple(revs), n % (64 * N))


def absorption_table(rs: Iterable[int] = range(2, 7), offset: int = 10000) -> list[Absorption]:
    return [absorption_run(r, s, offset) for r in rs for s in invariant_core(r).values()]


# ---- inter-chain return ratio ----

@dataclass(frozen=True)
class InterchainResult:
    r: int
    visits: int
    hits: int
    partial: bool

    @property
    def raw_fraction(self) -> float:
        return self.hits / self.visits

    @property
    def normalized_R_r(self) -> float:
        return self.raw_fraction / (5 / 8**self.r)

    @property
    def c_prime(self) -> float:
        R = self.normalized_R_r
        return math.inf if R == 0 else -math.log2(R)


def fiber57_visits(n0: int, gap: int = 5, max_steps: int = 10**6):
    """(q, inter_chain) for each fiber-57 iterate of the Collatz orbit of n0.

    A visit counts as inter-chain when more than `gap` Collatz steps
    separate it from the previous visit; the first visit always counts.
    """
    if n0 < 1:
        raise ValueError("n0 must be positive")
    n, t, last = n0, 0, None
    out = []
    while n != 1:
        if n % 64 == 57:
            out.append((n // 64, last is None or t - last > gap))
            last = t
        n = n // 2 if n % 2 == 0 else 3 * n + 1
        t += 1
        if t > max_steps:
            raise RuntimeError("orbit did not reach 1")
    return out


def _count(n0s, r, gap, visits=None, control: random.Random | None = None):
    N = 8**r
    core = set(_core_values(r))
    tot = hit = 0
    for n0 in n0s:
        for q, ic in fiber57_visits(n0, gap):
            if not ic:
                continue
            tot += 1
            q = control.randrange(N) if control is not None else q % N
            hit += q in core
            if visits is not None and tot >= visits:
                return tot, hit
    return tot, hit


def interchain_ratio(n0: int, r: int, visits: int, gap: int = 5) -> InterchainResult:
    if n0 % 2 == 0 or n0 < 1:
        raise ValueError("n0 must be an odd positive integer")
    if r < 2 or visits < 1:
        raise ValueError("need r >= 2 and visits >= 1")
    tot, hit = _count([n0], r, gap, visits)
    if tot == 0:
        raise ValueError(f"orbit of {n0} has no inter-chain fiber-57 visits")
    return InterchainResult(r, tot, hit, tot < visits)


@dataclass
class InterchainConfig:
    orbits: int = 5000
    n_max: int = 10**6  # starts drawn uniformly from odd 3..n_max
    gap: int = 5
    seed: int = 20240917


def interchain_batch(r: int, cfg: InterchainConfig | None = None, control: bool = False) -> InterchainResult:
    """Pooled ratio over a batch of random starts.

    With control=True each inter-chain visit is replaced by a uniform
    random residue, which gives the baseline R = 1 up to sampling error.
    """
    cfg = cfg or InterchainConfig()
    rng = random.Random(cfg.seed)
    n0s = [rng.randrange(3, cfg.n_max, 2) for _ in range(cfg.orbits)]
    ctl = random.Random(cfg.seed + 1) if control else None
    tot, hit = _count(n0s, r, cfg.gap, control=ctl)
    if tot == 0:
        raise ValueError("batch produced no inter-chain visits")
    return InterchainResult(r, tot, hit, False)


# ---- branch bijection ----

def path_offset(path: Sequence[int]) -> int:
    """Carry constant of the valuation path: sum 3^(k-1-j) 2^(v_1+..+v_j)."""
    k = len(path)
    d, acc = 0, 0
    for j in range(k):
        d += 3 ** (k - 1 - j) * 2**acc
        acc += path[j]
    return d


def branch_bijection_check(path: Sequence[int], q: int) -> bool:
    if sum(path) < 3:
        raise ValueError("path needs V = sum(path) >= 3")
    if q < 1:
        raise ValueError("q must be positive")
    k = len(path)
    d = path_offset(path)
    img = {(3**k * t + d) % q for t in range(q)}
    return len(img) == q


def branch_permutation(M: int, c: int = 8) -> bool:
    """m -> 9m + c is a permutation of Z/M when gcd(9, M) = 1."""
    if math.gcd(9, M) != 1:
        raise ValueError("9 must be invertible mod M")
    return len({(9 * m + c) % M for m in range(M)}) == M
