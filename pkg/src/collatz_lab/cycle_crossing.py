"""Crossing theory for run-compensate cycles.

A cycle of type (L, r) sends n to lambda*n + beta with
lambda = 3^(L+1)/2^(L+r) and beta = (3^(L+1) - 2^(L+1))/2^(L+r).
Everything here that is a threshold or a density is computed with exact
integer or rational arithmetic; floats only appear in the log-drift
moments, the Cramer rate and the Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_DOWN, Decimal, localcontext
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from .exact_arith import floor_log2_pow3, mod_inverse_pow2, v2
from .modular_laws import ResidueClass
from .syracuse_core import LOG2_3, CycleType, syracuse_step


def _lam(L: int, r: int) -> Fraction:
    return Fraction(3 ** (L + 1), 2 ** (L + r))


def _beta(L: int, r: int) -> Fraction:
    return Fraction(3 ** (L + 1) - 2 ** (L + 1), 2 ** (L + r))


def _pair(c) -> tuple[int, int]:
    if isinstance(c, CycleType):
        return c.L, c.r
    L, r = c
    return int(L), int(r)


@dataclass(frozen=True)
class Estimate:
    """A real number known to lie in [lower, upper]."""

    lower: Fraction
    upper: Fraction

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    @property
    def value(self) -> float:
        return float((self.lower + self.upper) / 2)

    def decimal(self, digits: int = 15) -> Decimal:
        with localcontext() as ctx:
            ctx.prec = digits + 5
            d = Decimal(self.lower.numerator) / Decimal(self.lower.denominator)
            return d.quantize(Decimal(1).scaleb(-digits), rounding=ROUND_DOWN)

    def __float__(self):
        return self.value


# -- single-cycle thresholds ---------------------------------------------------


@dataclass(frozen=True)
class Threshold:
    n_star: Fraction | None
    crosses_never: bool


def crossing_threshold(L: int, r: int) -> Threshold:
    """n_{L+1} < n  iff  n > n*.  No odd n crosses when lambda >= 1."""
    if L < 0 or r < 2:
        raise ValueError(f"need L >= 0, r >= 2, got ({L}, {r})")
    p3, p2 = 3 ** (L + 1), 2 ** (L + r)
    if p2 <= p3:
        return Threshold(None, True)
    return Threshold(Fraction(p3 - 2 ** (L + 1), p2 - p3), False)


def cycle_endpoint(n: int, L: int, r: int) -> int:
    """Closed form of the cycle endpoint for n in the (L, r) class."""
    num = 3 ** (L + 1) * (n + 1) - 2 ** (L + 1)
    if num % 2 ** (L + r):
        raise ValueError(f"{n} is not in the ({L}, {r}) class")
    return num // 2 ** (L + r)


def cycle_class(L: int, r: int) -> ResidueClass:
    """Odd n whose first cycle has type (L, r), as a class mod 2^(L+r+1)."""
    e = L + r + 1
    for n in range(1, 1 << e, 2):
        if v2(n + 1) == L + 1:
            m = (n + 1) >> (L + 1)
            # after L unit steps n_L = 2*3^L*m - 1; its valuation must equal r
            if v2(3 * (2 * 3 ** L * m - 1) + 1) == r:
                return ResidueClass(n, e)
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class Thresholds:
    r_min: int
    r_all: int


def thresholds(L: int) -> Thresholds:
    """Smallest r allowing any crossing, and smallest r forcing all odd n to cross.

    r_min is the least r with 2^(L+r) > 3^(L+1). r_all is the least r with
    2^(L+r) > 2*3^(L+1) - 2^(L+1), i.e. n* < 1.
    """
    if L < 0:
        raise ValueError("L must be >= 0")
    r_min = floor_log2_pow3(L + 1) - L + 1
    target = 2 * 3 ** (L + 1) - 2 ** (L + 1)
    r_all = max(2, target.bit_length() - L)
    while 2 ** (L + r_all) <= target:
        r_all += 1
    while r_all > 2 and 2 ** (L + r_all - 1) > target:
        r_all -= 1
    return Thresholds(r_min, r_all)


@dataclass(frozen=True)
class OneCycleDensities:
    p1cyc: Estimate
    p_all: Estimate
    terms: int


def one_cycle_densities(terms: int = 500) -> OneCycleDensities:
    """Density of odd starts that can cross (resp. all cross) within one cycle.

    Pr(L = l) = 2^-(l+1) and Pr(r >= k) = 2^-(k-2), so the partial sums are
    exact rationals and the tails are bounded by geometric series.
    """
    if terms < 1:
        raise ValueError("terms must be positive")
    p1 = Fraction(0)
    pa = Fraction(0)
    for L in range(terms):
        th = thresholds(L)
        p1 += Fraction(1, 2 ** (L + 1 + th.r_min - 2))
        pa += Fraction(1, 2 ** (L + th.r_all - 1))
    # remaining terms are each at most 2^-(L+1) resp. 2^-(L+2)
    return OneCycleDensities(
        Estimate(p1, p1 + Fraction(1, 2 ** terms)),
        Estimate(pa, pa + Fraction(1, 2 ** (terms + 1))),
        terms,
    )


# -- blocks -------------------------------------------------------------------


@dataclass(frozen=True)
class BlockAffine:
    lam: Fraction
    beta: Fraction

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("block slope must be positive")

    def then(self, other: "BlockAffine") -> "BlockAffine":
        """Apply self first, then other."""
        return BlockAffine(other.lam * self.lam, other.lam * self.beta + other.beta)

    def __call__(self, n):
        return self.lam * n + self.beta

    @property
    def n_star(self) -> Fraction | None:
        if self.lam >= 1:
            return None
        return self.beta / (1 - self.lam)


IDENTITY = BlockAffine(Fraction(1), Fraction(0))


@dataclass(frozen=True)
class CycleBlock:
    cycles: tuple

    def __post_init__(self):
        if not self.cycles:
            raise ValueError("a cycle block must be nonempty")
        object.__setattr__(self, "cycles", tuple(_pair(c) for c in self.cycles))


def _as_cycles(block) -> tuple:
    if isinstance(block, CycleBlock):
        return block.cycles
    return tuple(_pair(c) for c in block)


def block_compose(block) -> BlockAffine:
    out = IDENTITY
    for L, r in _as_cycles(block):
        out = out.then(BlockAffine(_lam(L, r), _beta(L, r)))
    return out


def universal_block_check(block) -> bool:
    cycles = _as_cycles(block)
    if not cycles:
        raise ValueError("empty block")
    f = block_compose(cycles)
    return f.lam < 1 and f.beta < 1 - f.lam


def block_word(block) -> tuple[int, ...]:
    word = []
    for L, r in _as_cycles(block):
        word += [1] * L + [r]
    return tuple(word)


# -- multi-cycle universal density ------------------------------------------------

DEFAULT_BUDGETS = (14, 14, 14, 12, 8)


@dataclass
class CumulativeDensity:
    k: int
    p_new: list[Estimate]
    budgets: list[int]
    warning: str | None = None

    @property
    def p_cum(self) -> Estimate:
        return Estimate(sum(e.lower for e in self.p_new), sum(e.upper for e in self.p_new))

    @property
    def value(self) -> float:
        return float(sum(e.lower for e in self.p_new))


def _types_up_to(budget: int) -> list[tuple[int, int]]:
    return [(L, s - L) for s in range(2, budget + 1) for L in range(s - 1)]


def _first_universal_mass(k: int, budget: int) -> Estimate:
    """Mass of blocks whose first universal prefix has exactly k cycles.

    Prefix states are (sum of L+1, sum of L+r, numerator of B): the block is
    Lambda = 3^a/2^b, B = N/2^b, and a prefix has weight 2^-b. Equal states
    are merged. Cycles with L+r > budget are dropped; the dropped mass bounds
    the truncation error from above.
    """
    types = _types_up_to(budget)
    # per-cycle dropped mass: sum_{s > budget} (s-1) 2^-s = budget * 2^-budget
    drop = Fraction(budget, 2 ** budget)
    states = {(0, 0, 0): 1}
    hit = Fraction(0)
    for depth in range(1, k + 1):
        nxt: dict = {}
        hit = Fraction(0)
        for (a, b, N), mult in states.items():
            for L, r in types:
                A, B = a + L + 1, b + L + r
                p3 = 3 ** (L + 1)
                NN = p3 * N + (p3 - 2 ** (L + 1)) * (1 << b)
                pw3, pw2 = 3 ** A, 1 << B
                if pw3 < pw2 and NN < pw2 - pw3:
                    if depth == k:
                        hit += Fraction(mult, pw2)
                elif depth < k:
                    key = (A, B, NN)
                    nxt[key] = nxt.get(key, 0) + mult
        states = nxt
    # any length-k block touching a dropped cycle is missing; its mass is
    # at most 1 - (1 - drop)^k
    return Estimate(hit, hit + 1 - (1 - drop) ** k)


def cumulative_universal_density(k: int, budget=None, tolerance: float = 0.002) -> CumulativeDensity:
    """P_cum(k) = sum over j <= k of the first-universal-at-j mass.

    budget None uses the per-length caps (14, 14, 14, 12, 8); an int applies
    one cap to every length.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if budget is None:
        if k > len(DEFAULT_BUDGETS):
            raise ValueError(f"no default budget beyond k={len(DEFAULT_BUDGETS)}")
        budgets = list(DEFAULT_BUDGETS[:k])
    elif isinstance(budget, int):
        budgets = [budget] * k
    else:
        budgets = list(budget)
    if len(budgets) != k or min(budgets) < 2:
        raise ValueError("bad budget")
    p_new = [_first_universal_mass(j + 1, b) for j, b in enumerate(budgets)]
    res = CumulativeDensity(k, p_new, budgets)
    if float(res.p_cum.width) > tolerance:
        res.warning = f"truncation width {float(res.p_cum.width):.4g} exceeds tolerance {tolerance}"
    return res


# -- Monte Carlo ---------------------------------------------------------------


def cycle_rng(seed: int, streams: int = 1) -> list[np.random.Generator]:
    """Philox (counter-based) generators on independent SeedSequence children."""
    ss = np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.Philox(child)) for child in ss.spawn(streams)]


def sample_cycles(rng: np.random.Generator, size) -> tuple[np.ndarray, np.ndarray]:
    """Draw (L, r) from the i.i.d. law Pr(L=l) = 2^-(l+1), Pr(r=k) = 2^-(k-1)."""
    L = rng.geometric(0.5, size) - 1
    r = rng.geometric(0.5, size) + 1
    return L, r


def _affine_arrays(L, r):
    lam = np.exp2((L + 1) * LOG2_3 - (L + r))
    beta = (np.exp2((L + 1) * LOG2_3) - np.exp2(L + 1)) / np.exp2(L + r)
    return lam, beta


@dataclass
class KestenResult:
    mass_below_1: float
    r_k_curve: list[float]
    rho0: float
    c0: float
    seed: int
    steps: int
    burn_in: int
    trials: int


def kesten_simulate(
    steps: int = 200_000,
    burn_in: int = 500,
    seed: int = 20240917,
    trials: int = 500_000,
    k_max: int = 25,
    fit_range: tuple[int, int] = (5, 25),
    shards: int = 8,
) -> KestenResult:
    """Stationary mass of X < 1 along one chain, and the survival curve R_k.

    R_k is the fraction of i.i.d. cycle sequences with no universally crossing
    prefix among the first k cycles (Lambda < 1 and B < 1 - Lambda), run on
    float64. rho0 and c0 come from a log-linear least-squares fit.
    """
    if steps < 10_000:
        raise ValueError("steps must be >= 10^4")
    if burn_in < 1 or trials < 1:
        raise ValueError("burn_in and trials must be positive")
    gens = cycle_rng(seed, shards + 1)
    L, r = sample_cycles(gens[0], steps + burn_in)
    lam, beta = _affine_arrays(L, r)
    x = 0.0
    below = 0
    for i in range(steps + burn_in):
        x = lam[i] * x + beta[i]
        if i >= burn_in and x < 1:
            below += 1

    alive_counts = np.zeros(k_max, dtype=np.int64)
    per = [trials // shards + (1 if s < trials % shards else 0) for s in range(shards)]
    for g, n in zip(gens[1:], per):
        if n == 0:
            continue
        Lam = np.ones(n)
        B = np.zeros(n)
        alive = np.ones(n, dtype=bool)
        for k in range(k_max):
            lk, bk = _affine_arrays(*sample_cycles(g, n))
            Lam = lk * Lam
            B = lk * B + bk
            alive &= ~((Lam < 1) & (B < 1 - Lam))
            alive_counts[k] += alive.sum()
    curve = (alive_counts / trials).tolist()
    lo, hi = fit_range
    ks = np.arange(lo, hi + 1)
    ys = np.array(curve[lo - 1 : hi])
    if np.any(ys <= 0):
        raise ValueError("survival curve hit zero inside the fit range; raise trials")
    slope, icpt = np.polyfit(ks, np.log(ys), 1)
    return KestenResult(below / steps, curve, float(np.exp(slope)), float(np.exp(icpt)), seed, steps, burn_in, trials)


# -- log-drift law -----------------------------------------------------------------

_C1 = LOG2_3 - 1
T_LO = -math.log(2)
T_HI = math.log(2) / _C1


@dataclass
class DriftMoments:
    mean: float
    variance: float
    mgf: Callable[[float], float]


def _check_strip(t: float):
    if not T_LO < t < T_HI:
        raise ValueError(f"t={t} outside the convergence strip ({T_LO:.6f}, {T_HI:.6f})")


def log_mgf(t: float) -> float:
    _check_strip(t)
    return t * (LOG2_3 - 2) - math.log(4) - math.log1p(-0.5 * math.exp(t * _C1)) - math.log1p(-0.5 * math.exp(-t))


def log_mgf_prime(t: float) -> float:
    _check_strip(t)
    a = 0.5 * math.exp(t * _C1)
    b = 0.5 * math.exp(-t)
    return (LOG2_3 - 2) + _C1 * a / (1 - a) - b / (1 - b)


def mgf(t: float) -> float:
    return math.exp(log_mgf(t))


def logdrift_moments() -> DriftMoments:
    """Moments of X = (L+1) log2 3 - (L+r) with L, r independent geometric."""
    # E[L] = 1, E[r] = 3, Var L = Var r = 2
    mean = 2 * LOG2_3 - 4
    var = 2 * (_C1 ** 2 + 1)
    return DriftMoments(mean, var, mgf)


def series_moments(terms: int = 80) -> tuple[float, float]:
    """Mean and variance by direct summation over (L, r); independent of the closed form."""
    m1 = m2 = 0.0
    for L in range(terms):
        for r in range(2, terms + 2):
            p = 2.0 ** -(L + 1) * 2.0 ** -(r - 1)
            x = (L + 1) * LOG2_3 - (L + r)
            m1 += p * x
            m2 += p * x * x
    return m1, m2 - m1 * m1


@dataclass
class CramerRate:
    t_star: float
    I0: float


def cramer_rate() -> CramerRate:
    """Saddle point of log M_X and I(0) = -log M_X(t*)."""
    lo, hi = 1e-9, T_HI - 1e-9
    if not (log_mgf_prime(lo) < 0 < log_mgf_prime(hi)):
        raise ArithmeticError("saddle-point bracket failed")
    t = brentq(log_mgf_prime, lo, hi, xtol=1e-14)
    return CramerRate(t, -log_mgf(t))


def iid_cycle_law_means(terms: int = 60) -> tuple[Fraction, Fraction]:
    """Truncated exact E[lambda] and E[beta] under the i.i.d. cycle law."""
    el = Fraction(0)
    eb = Fraction(0)
    for L in range(terms):
        for r in range(2, terms + 2):
            p = Fraction(1, 2 ** (L + r))
            el += p * _lam(L, r)
            eb += p * _beta(L, r)
    return el, eb


# -- per-orbit correction -----------------------------------------------------------


def first_cycle(n: int) -> tuple[int, int, int]:
    """(endpoint, L, r) of the first run-compensate cycle from odd n."""
    L = 0
    while True:
        n, v = syracuse_step(n)
        if v == 1:
            L += 1
        else:
            return n, L, v


def cycle_correction(n: int) -> float:
    if n < 3 or n % 2 == 0:
        raise ValueError("cycle_correction needs odd n >= 3")
    _, L, _ = first_cycle(n)
    c = math.log2(1 + (1 - (2 / 3) ** (L + 1)) / n)
    if not 0 < c < math.log2(1 + 1 / n):
        raise ArithmeticError(f"correction bound violated at n={n}")
    return c


def correction_criterion(n0: int, max_cycles: int = 10_000) -> int | None:
    """First m at which sum X_i < -m log2(1 + 1/n0) before any crossing.

    Returns None if the orbit crosses (or the cap is hit) first.
    """
    if n0 < 3 or n0 % 2 == 0:
        raise ValueError("needs odd n0 >= 3")
    thr = math.log2(1 + 1 / n0)
    n = n0
    a = b = 0  # sum (L+1), sum (L+r)
    for m in range(1, max_cycles + 1):
        n, L, r = first_cycle(n)
        a += L + 1
        b += L + r
        if a * LOG2_3 - b < -m * thr:
            return m
        if n < n0:
            return None
    return None


def criterion_exceptions(limit: int) -> list[int]:
    return [n for n in range(3, limit + 1, 2) if correction_criterion(n) is None]


# -- adversarial family A^a B^t --------------------------------------------------

ADV_A = (5, 2)
ADV_B = (0, 3)
ADV_RHO = math.log(729 / 128) / math.log(8 / 3)
THETA_CRIT = 1 - math.log(1202 / 3165) / math.log(3 / 8)


@dataclass
class AdversarialBlock:
    a: int
    t_min: int
    Lambda: Fraction
    B: Fraction
    universal_at_tmin: bool
    universal_at_tmin_plus_1: bool


def _t_min(a: int) -> int:
    # least t with 729^a 3^t < 128^a 8^t, exact
    t = int(a * ADV_RHO)
    while t > 0 and 729 ** a * 3 ** (t - 1) < 128 ** a * 8 ** (t - 1):
        t -= 1
    while not 729 ** a * 3 ** t < 128 ** a * 8 ** t:
        t += 1
    return t


def adversarial_block(a: int) -> AdversarialBlock:
    if a < 1:
        raise ValueError("a must be >= 1")
    t = _t_min(a)
    fa = block_compose([ADV_A] * a)
    f0 = fa
    for _ in range(t):
        f0 = f0.then(BlockAffine(_lam(*ADV_B), _beta(*ADV_B)))
    f1 = f0.then(BlockAffine(_lam(*ADV_B), _beta(*ADV_B)))
    return AdversarialBlock(
        a,
        t,
        f0.lam,
        f0.beta,
        f0.lam < 1 and f0.beta < 1 - f0.lam,
        f1.lam < 1 and f1.beta < 1 - f1.lam,
    )


def adversarial_closed_form(a: int, t: int) -> BlockAffine:
    lam = Fraction(729, 128) ** a * Fraction(3, 8) ** t
    return BlockAffine(lam, Fraction(665, 601) * lam + Fraction(1, 5) - Fraction(3926, 3005) * Fraction(3, 8) ** t)


def fragility_check(A, B) -> bool:
    """Pair-level condition beta_B^inf + lambda_B (1 + gamma_A) < 1.

    A and B may be CycleType or plain (L, r) pairs; r = 1 is accepted as a
    formal affine map so that grid counts can include it.
    """
    La, ra = _pair(A)
    Lb, rb = _pair(B)
    lam_a, lam_b = _lam(La, ra), _lam(Lb, rb)
    if not lam_a > 1:
        raise ValueError(f"A={A} is not expanding")
    if not 0 < lam_b < 1:
        raise ValueError(f"B={B} is not contracting")
    gamma_a = _beta(La, ra) / (lam_a - 1)
    beta_inf = _beta(Lb, rb) / (1 - lam_b)
    return beta_inf + lam_b * (1 + gamma_a) < 1


@dataclass
class FragilityGrid:
    expanding: int
    contracting: int
    passing: int


def fragility_grid(L_max: int = 7, r_max: int = 11, r_min: int = 1) -> FragilityGrid:
    types = [(L, r) for L in range(L_max + 1) for r in range(r_min, r_max + 1)]
    exp_ = [t for t in types if _lam(*t) > 1]
    con = [t for t in types if _lam(*t) < 1]
    ok = sum(fragility_check(a, b) for a in exp_ for b in con)
    return FragilityGrid(len(exp_), len(con), ok)


# -- Mersenne starts and weak recovery ---------------------------------------------------


def post_mersenne_valuation(k: int, simulate: bool = True) -> int:
    """Valuation of the step after the k unit steps from 2^(k+1) - 1."""
    if k < 2:
        raise ValueError("k must be >= 2")
    v = 2 if k % 2 == 0 else 3 + v2(k + 1)
    if simulate:
        n = 2 ** (k + 1) - 1
        for _ in range(k):
            n, w = syracuse_step(n)
            assert w == 1
        if syracuse_step(n)[1] != v:
            raise ArithmeticError(f"closed form disagrees with simulation at k={k}")
    return v


def weak_recovery_cylinder(k: int, j: int) -> ResidueClass:
    """Class of m with 3^k m = 1 mod 2^(2j)."""
    if k < 1 or j < 1:
        raise ValueError("k, j must be >= 1")
    return ResidueClass(mod_inverse_pow2(pow(3, k, 1 << (2 * j)), 2 * j), 2 * j)


def weak_cylinder_density(k: int, j: int) -> Fraction:
    """Fraction of odd m mod 2^(2j+4) lying in the cylinder (enumerated)."""
    cls = weak_recovery_cylinder(k, j)
    depth = 2 * j + 4
    odd = range(1, 1 << depth, 2)
    return Fraction(sum(1 for m in odd if m in cls), len(odd))


def burst_step(k: int, m: int) -> tuple[int, int]:
    """One v=1 step on n = 2^k m - 1 (k >= 2): returns (k-1, 3m)."""
    if k < 2:
        raise ValueError("k must be >= 2")
    n = (1 << k) * m - 1
    n2, v = syracuse_step(n)
    assert v == 1 and n2 == (1 << (k - 1)) * 3 * m - 1
    return k - 1, 3 * m
