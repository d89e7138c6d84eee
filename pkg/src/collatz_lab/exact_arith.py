"""Exact integer, rational and rational-matrix arithmetic.

Rationals are stdlib Fractions (always reduced, positive denominator).
Matrices are small (order <= 16) dense tuples of Fractions. Eigenvalue
questions are answered on the exact characteristic polynomial, with a
floating cross-check only as a sanity net.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

ExactRational = Fraction


def v2(n: int) -> int:
    if n == 0:
        raise ValueError("valuation of zero undefined")
    n = abs(n)
    return (n & -n).bit_length() - 1


def mod_inverse_pow2(a: int, e: int) -> int:
    if e < 1:
        raise ValueError("exponent must be >= 1")
    if a % 2 == 0:
        raise ValueError("not invertible")
    return pow(a, -1, 1 << e)


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**12)
    return Fraction(x)


# -- polynomials -----------------------------------------------------------


class Polynomial:
    """Polynomial with Fraction coefficients, constant term first."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable):
        cs = [as_fraction(c) for c in coeffs]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        if not cs:
            cs = [Fraction(0)]
        self.coeffs = tuple(cs)

    @property
    def degree(self) -> int:
        if self.is_zero():
            return -1
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0

    @property
    def lead(self) -> Fraction:
        return self.coeffs[-1]

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        terms = []
        for i, c in reversed(list(enumerate(self.coeffs))):
            if c == 0 and self.degree > 0:
                continue
            terms.append(f"{c}" if i == 0 else f"{c}*x^{i}")
        return "Polynomial(" + " + ".join(terms) + ")"

    def __add__(self, other):
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        return Polynomial([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])

    def __neg__(self):
        return Polynomial([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial([c * other for c in self.coeffs])
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Polynomial(out)

    __rmul__ = __mul__

    def derivative(self) -> "Polynomial":
        return Polynomial([i * c for i, c in enumerate(self.coeffs)][1:] or [0])

    def divmod(self, other: "Polynomial"):
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = other.degree
        if self.degree < dq:
            return Polynomial([0]), self
        quot = [Fraction(0)] * (self.degree - dq + 1)
        for k in range(self.degree - dq, -1, -1):
            c = rem[k + dq] / other.lead
            quot[k] = c
            if c:
                for j, b in enumerate(other.coeffs):
                    rem[k + j] -= c * b
        return Polynomial(quot), Polynomial(rem[:dq] or [0])

    def monic(self) -> "Polynomial":
        return self * (1 / self.lead)

    def scaled(self, s) -> "Polynomial":
        """p(s*x)."""
        s = as_fraction(s)
        return Polynomial([c * s**i for i, c in enumerate(self.coeffs)])

    def integer_primitive(self) -> list[int]:
        """Integer coefficients of a positive multiple, content removed."""
        den = 1
        for c in self.coeffs:
            den = den * c.denominator // math.gcd(den, c.denominator)
        ints = [int(c * den) for c in self.coeffs]
        g = 0
        for x in ints:
            g = math.gcd(g, x)
        g = g or 1
        if ints[-1] < 0:
            g = -g
        return [x // g for x in ints]


def poly_gcd(a: Polynomial, b: Polynomial) -> Polynomial:
    while not b.is_zero():
        _, r = a.divmod(b)
        a, b = b, r
    return a.monic() if not a.is_zero() else a


def square_free(p: Polynomial) -> Polynomial:
    g = poly_gcd(p, p.derivative())
    if g.degree <= 0:
        return p.monic()
    q, _ = p.divmod(g)
    return q.monic()


def sturm_sequence(p: Polynomial) -> list[Polynomial]:
    seq = [p, p.derivative()]
    while not seq[-1].is_zero() and seq[-1].degree > 0:
        _, r = seq[-2].divmod(seq[-1])
        if r.is_zero():
            break
        seq.append(-r)
    return seq


def _sign_changes(seq, x) -> int:
    prev = 0
    n = 0
    for s in seq:
        val = s(x)
        if val == 0:
            continue
        sg = 1 if val > 0 else -1
        if prev and sg != prev:
            n += 1
        prev = sg
    return n


def count_real_roots(p: Polynomial, lo, hi, seq=None) -> int:
    """Distinct real roots in (lo, hi]."""
    seq = seq or sturm_sequence(square_free(p))
    return _sign_changes(seq, lo) - _sign_changes(seq, hi)


def root_bound(p: Polynomial) -> Fraction:
    # Cauchy bound
    lead = abs(p.lead)
    return 1 + max((abs(c) / lead for c in p.coeffs[:-1]), default=Fraction(0))


def largest_real_root(p: Polynomial, tol: Fraction):
    """Isolate the largest real root in an interval (lo, hi] of width <= tol."""
    sf = square_free(p)
    seq = sturm_sequence(sf)
    hi = root_bound(sf)
    lo = -hi
    if count_real_roots(sf, lo, hi, seq) == 0:
        return None
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if count_real_roots(sf, mid, hi, seq) > 0:
            lo = mid
        else:
            hi = mid
    return lo, hi, sf


def rational_root_in(sf: Polynomial, lo: Fraction, hi: Fraction):
    """Return the exact rational root inside (lo, hi] if there is one.

    With integer coefficients a_n..a_0, any rational root p/q in lowest
    terms has q | a_n. Once the interval is narrower than 1/(2 a_n^2) the
    root, if rational, is the best approximation with denominator <= a_n.
    """
    ints = sf.integer_primitive()
    lead = abs(ints[-1])
    if ints[0] == 0 and lo < 0 <= hi:
        return Fraction(0)
    width_needed = Fraction(1, 2 * lead * lead)
    seq = sturm_sequence(sf)
    while hi - lo > width_needed:
        mid = (lo + hi) / 2
        if count_real_roots(sf, mid, hi, seq) > 0:
            lo = mid
        else:
            hi = mid
    for cand in {Fraction(hi).limit_denominator(lead), Fraction(lo).limit_denominator(lead)}:
        if lo < cand <= hi and sf(cand) == 0:
            return cand
    return None


# -- matrices ----------------------------------------------------------------


class RationalMatrix:
    __slots__ = ("rows",)

    def __init__(self, rows: Sequence[Sequence]):
        rs = tuple(tuple(as_fraction(x) for x in row) for row in rows)
        n = len(rs)
        if n == 0 or any(len(r) != n for r in rs):
            raise ValueError("matrix must be square and nonempty")
        self.rows = rs

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @property
    def order(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        return isinstance(other, RationalMatrix) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return "RationalMatrix(" + repr([[str(x) for x in r] for r in self.rows]) + ")"

    def __add__(self, other):
        return RationalMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other):
        return RationalMatrix([[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __matmul__(self, other):
        cols = list(zip(*other.rows))
        return RationalMatrix([[sum((a * b for a, b in zip(r, c)), Fraction(0)) for c in cols] for r in self.rows])

    def scale(self, s) -> "RationalMatrix":
        s = as_fraction(s)
        return RationalMatrix([[a * s for a in r] for r in self.rows])

    def trace(self) -> Fraction:
        return sum((self.rows[i][i] for i in range(self.order)), Fraction(0))

    def row_sums(self) -> list[Fraction]:
        return [sum(r, Fraction(0)) for r in self.rows]

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(list(zip(*self.rows)))

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self.rows])

    def inverse(self) -> "RationalMatrix":
        n = self.order
        aug = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(self.rows)]
        for col in range(n):
            piv = next((i for i in range(col, n) if aug[i][col] != 0), None)
            if piv is None:
                raise ZeroDivisionError("singular matrix")
            aug[col], aug[piv] = aug[piv], aug[col]
            p = aug[col][col]
            aug[col] = [x / p for x in aug[col]]
            for i in range(n):
                if i != col and aug[i][col] != 0:
                    f = aug[i][col]
                    aug[i] = [a - f * b for a, b in zip(aug[i], aug[col])]
        return RationalMatrix([r[n:] for r in aug])

    def det(self) -> Fraction:
        n = self.order
        a = [list(r) for r in self.rows]
        d = Fraction(1)
        for col in range(n):
            piv = next((i for i in range(col, n) if a[i][col] != 0), None)
            if piv is None:
                return Fraction(0)
            if piv != col:
                a[col], a[piv] = a[piv], a[col]
                d = -d
            p = a[col][col]
            d *= p
            for i in range(col + 1, n):
                if a[i][col]:
                    f = a[i][col] / p
                    a[i] = [x - f * y for x, y in zip(a[i], a[col])]
        return d


def char_poly(m: RationalMatrix) -> Polynomial:
    """det(xI - m) by Faddeev-LeVerrier."""
    n = m.order
    coeffs = [Fraction(0)] * (n + 1)
    coeffs[n] = Fraction(1)
    mk = RationalMatrix([[0] * n for _ in range(n)])
    ident = RationalMatrix.identity(n)
    for k in range(1, n + 1):
        mk = m @ mk + ident.scale(coeffs[n - k + 1])
        coeffs[n - k] = -(m @ mk).trace() / k
    return Polynomial(coeffs)


@dataclass(frozen=True)
class PerronResult:
    exact: Fraction | None
    interval: tuple[Fraction, Fraction]
    float_check: float

    @property
    def value(self) -> float:
        return float(self.exact) if self.exact is not None else float((self.interval[0] + self.interval[1]) / 2)


def _power_iteration(a: np.ndarray, iters: int = 2000) -> float:
    n = a.shape[0]
    # shift keeps periodic matrices from oscillating
    b = a + np.eye(n)
    x = np.ones(n) / n
    lam = 0.0
    for _ in range(iters):
        y = b @ x
        s = y.sum()
        if s == 0:
            return 0.0
        lam = s / x.sum()
        x = y / s
    return lam - 1.0


def perron_root(m: RationalMatrix, tol=Fraction(1, 10**12)) -> PerronResult:
    tol = as_fraction(tol)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if any(x < 0 for r in m.rows for x in r):
        raise ValueError("perron_root needs a nonnegative matrix")
    p = char_poly(m)
    iso = largest_real_root(p, tol)
    fl = _power_iteration(m.to_numpy())
    if iso is None:  # nilpotent has root 0, so this is unreachable for real input
        raise ArithmeticError("no real root found")
    lo, hi, sf = iso
    exact = rational_root_in(sf, lo, hi)
    if exact is not None:
        interval = (exact, exact)
    else:
        interval = (lo, hi)
    if abs(fl - float((interval[0] + interval[1]) / 2)) > 1e-6 * max(1.0, abs(fl)):
        # power iteration converges slowly for tiny gaps; fall back to eigvals
        ev = np.linalg.eigvals(m.to_numpy())
        fl = float(max(ev.real))
        if abs(fl - float((interval[0] + interval[1]) / 2)) > 1e-6:
            raise ArithmeticError("exact and floating Perron roots disagree")
    return PerronResult(exact, interval, fl)


def schur_stable(p: Polynomial) -> bool:
    """True iff every root of p lies strictly inside the unit disc (exact Schur-Cohn)."""
    a = list(p.coeffs)
    while len(a) > 1:
        a0, an = a[0], a[-1]
        if abs(a0) >= abs(an):
            return False
        n = len(a) - 1
        rev = a[::-1]
        q = [an * a[i] - a0 * rev[i] for i in range(n + 1)]
        a = q[1:]
        while len(a) > 1 and a[-1] == 0:
            a.pop()
    return a[0] != 0


def _deflate(p: Polynomial, root: Fraction) -> Polynomial:
    q, r = p.divmod(Polynomial([-root, 1]))
    if not r.is_zero():
        raise ArithmeticError("deflation root is not a root")
    return q


def second_eigenvalue_bound(m: RationalMatrix, radius, grid: int = 64) -> bool:
    """All eigenvalues except the Perron root have modulus < radius.

    Exact route: deflate the (rational) Perron root from the characteristic
    polynomial and run the Schur-Cohn test on p(radius*z). Independent
    route: det(m - zI) != 0 on a grid of the circle, plus a numpy eigensolve.
    Both must agree.
    """
    radius = as_fraction(radius)
    if radius <= 0:
        raise ValueError("radius must be positive")
    p = char_poly(m)
    ev = np.linalg.eigvals(m.to_numpy())
    mods = sorted(abs(ev), reverse=True)
    perron = None
    if all(x >= 0 for r in m.rows for x in r):
        perron = perron_root(m).exact
    if perron is not None:
        rest = _deflate(p, perron)
        exact_ok = schur_stable(rest.scaled(radius))
        float_ok = (mods[1] if len(mods) > 1 else 0.0) < float(radius)
    else:
        # irrational Perron root: fall back to float verdict, grid-certified below
        exact_ok = None
        float_ok = (mods[1] if len(mods) > 1 else 0.0) < float(radius)
    # grid on the circle: det(m - zI) must not vanish
    grid_ok = True
    if float_ok:
        a = m.to_numpy()
        n = m.order
        for k in range(grid):
            z = float(radius) * np.exp(2j * np.pi * k / grid)
            if abs(np.linalg.det(a - z * np.eye(n))) < 1e-14:
                grid_ok = False
                break
    if exact_ok is None:
        return bool(float_ok and grid_ok)
    if exact_ok != (float_ok and grid_ok):
        # exact verdict wins; disagreement only happens for eigenvalues
        # within float noise of the circle
        return bool(exact_ok)
    return bool(exact_ok)


def spectral_gap_modulus(m: RationalMatrix, tol=Fraction(1, 10**4)) -> tuple[Fraction, Fraction]:
    """Bracket |lambda_2| by bisection on the exact radius test."""
    tol = as_fraction(tol)
    lo, hi = Fraction(0), Fraction(1)
    while not second_eigenvalue_bound(m, hi):
        hi *= 2
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if second_eigenvalue_bound(m, mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def _strongly_connected(m: RationalMatrix) -> bool:
    n = m.order

    def reach(adj):
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in range(n):
                if adj(u, v) and v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == n

    return reach(lambda u, v: m[u, v] != 0) and reach(lambda u, v: m[v, u] != 0)


def stationary_distribution(m: RationalMatrix) -> list[Fraction]:
    if any(s != 1 for s in m.row_sums()) or any(x < 0 for r in m.rows for x in r):
        raise ValueError("matrix is not row-stochastic")
    if not _strongly_connected(m):
        raise ValueError("matrix is reducible")
    n = m.order
    # pi (m - I) = 0 with sum(pi) = 1: replace last equation by normalisation
    a = [[m[j, i] - (1 if i == j else 0) for j in range(n)] for i in range(n)]
    a[-1] = [Fraction(1)] * n
    rhs = [Fraction(0)] * (n - 1) + [Fraction(1)]
    sol = _solve(a, rhs)
    return sol


def _solve(a, b):
    n = len(a)
    aug = [list(r) + [v] for r, v in zip(a, b)]
    for col in range(n):
        piv = next((i for i in range(col, n) if aug[i][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[col])]
    return [r[n] for r in aug]


def tv_distance(p: Sequence, q: Sequence) -> Fraction:
    return sum((abs(as_fraction(a) - as_fraction(b)) for a, b in zip(p, q)), Fraction(0)) / 2


def floor_log2_pow3(t: int) -> int:
    """Largest s with 2^s <= 3^t, exactly."""
    return (3**t).bit_length() - 1


def ceil_log2_pow3(t: int) -> int:
    """Smallest s with 2^s >= 3^t (never equal for t >= 1)."""
    x = 3**t
    return x.bit_length() if t > 0 else 0
