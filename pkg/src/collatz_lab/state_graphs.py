"""Net-positive modular state graphs, ranking certificates and the carry-parity obstruction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exact_arith import v2
from .syracuse_core import LOG2_3

EXIT = -1


def _discretize(K: int, V: int, mode: str) -> int:
    """Integer budget change for real drift K log2 3 - V, decided by exact powers."""
    ceil = next(c for c in range(-V, K + 2) if 2 ** (V + c) >= 3**K)
    floor = ceil if 2 ** (V + ceil) == 3**K else ceil - 1
    if mode == "ceil":
        return ceil
    if mode == "away":
        # ceil for positive drift, floor for negative drift
        return ceil if 3**K > 2**V else floor
    raise ValueError(f"unknown discretization {mode!r}")


def block_transition(M: int, K: int) -> tuple[np.ndarray, np.ndarray]:
    """K-step residue map on odd r mod 2^M (representative convention) and total halvings V.

    Arrays are indexed by i = (r - 1) / 2.
    """
    mask = (1 << M) - 1
    x = np.arange(1, 1 << M, 2, dtype=np.int64)
    V = np.zeros_like(x)
    for _ in range(K):
        m = 3 * x + 1
        low = m & -m
        tz = np.log2(low.astype(np.float64)).astype(np.int64)
        V += tz
        x = (m >> tz) & mask
    return x, V


@dataclass
class StateGraph:
    """Functional graph on (r, b); succ[i, b] is a flat state index or EXIT."""

    M: int
    K: int
    B: int
    succ: np.ndarray  # shape (2^(M-1), B+1)
    residue_next: np.ndarray
    halvings: np.ndarray
    step_budget: np.ndarray  # discretized drift per residue

    @property
    def n_states(self) -> int:
        return self.succ.size

    def state(self, r: int, b: int) -> int:
        return ((r - 1) // 2) * (self.B + 1) + b

    def decode(self, s: int) -> tuple[int, int]:
        i, b = divmod(s, self.B + 1)
        return 2 * i + 1, b

    @property
    def flat(self) -> np.ndarray:
        return self.succ.reshape(-1)

    @property
    def exits(self) -> np.ndarray:
        return np.flatnonzero(self.flat == EXIT)

    def export(self, path) -> None:
        """Plain adjacency text: one line 'r b -> r2 b2' or 'r b -> EXIT'."""
        with open(path, "w") as fh:
            fh.write(f"# state graph M={self.M} K={self.K} B={self.B}\n")
            for s, t in enumerate(self.flat):
                r, b = self.decode(s)
                if t == EXIT:
                    fh.write(f"{r} {b} -> EXIT\n")
                else:
                    r2, b2 = self.decode(int(t))
                    fh.write(f"{r} {b} -> {r2} {b2}\n")


def build_state_graph(M: int, K: int = 1, B: int = 20, drift_mode: str = "away") -> StateGraph:
    if not 6 <= M <= 19:
        raise ValueError("M must lie in 6..19")
    if not 1 <= K <= 8:
        raise ValueError("K must lie in 1..8")
    if B < 1:
        raise ValueError("B must be positive")
    nxt, V = block_transition(M, K)
    table = {v: _discretize(K, v, drift_mode) for v in np.unique(V).tolist()}
    c = np.array([table[v] for v in V.tolist()], dtype=np.int64)
    b = np.arange(B + 1, dtype=np.int64)
    bp = np.minimum(b[None, :] + c[:, None], B)
    tgt = ((nxt - 1) // 2)[:, None] * (B + 1) + bp
    succ = np.where(bp >= 0, tgt, EXIT)
    return StateGraph(M, K, B, succ, nxt, V, c)


# -- acyclicity and ranking ----------------------------------------------------


def kahn_remaining(succ: np.ndarray) -> np.ndarray:
    """Vertices left after repeatedly peeling in-degree-0 vertices (functional graph)."""
    n = len(succ)
    alive = np.ones(n, dtype=bool)
    has = succ >= 0
    indeg = np.bincount(succ[has], minlength=n)
    frontier = np.flatnonzero(indeg == 0)
    while len(frontier):
        alive[frontier] = False
        t = succ[frontier]
        t = t[t >= 0]
        np.subtract.at(indeg, t, 1)
        cand = np.unique(t)
        frontier = cand[(indeg[cand] == 0) & alive[cand]]
    return np.flatnonzero(alive)


def dfs_cycle_vertices(succ: Sequence[int]) -> set[int]:
    """Colouring walk; independent of Kahn peeling."""
    n = len(succ)
    colour = [0] * n  # 0 new, 1 on current path, 2 done
    on_cycle = set()
    for s in range(n):
        if colour[s]:
            continue
        path, v = [], s
        while v >= 0 and colour[v] == 0:
            colour[v] = 1
            path.append(v)
            v = int(succ[v])
        if v >= 0 and colour[v] == 1:
            on_cycle.update(path[path.index(v):])
        for w in path:
            colour[w] = 2
    return on_cycle


@dataclass
class Ranking:
    acyclic: bool
    rank: np.ndarray | None
    cycle_states: np.ndarray  # flat state indices on cycles

    @property
    def max_rank(self) -> int | None:
        return int(self.rank.max()) if self.rank is not None and len(self.rank) else (0 if self.acyclic else None)


def dag_ranking(g, exit_edge: bool = True) -> Ranking:
    """Longest path to an exit; the exit step itself counts as an edge when exit_edge.

    Accepts a StateGraph or a flat successor array (EXIT = -1 means a sink edge).
    """
    succ = g.flat if isinstance(g, StateGraph) else np.asarray(g, dtype=np.int64)
    rem = kahn_remaining(succ)
    if len(rem):
        return Ranking(False, None, rem)
    n = len(succ)
    rank = np.full(n, -1, dtype=np.int64)
    term = succ < 0
    rank[term] = 1 if exit_edge else 0
    todo = np.flatnonzero(~term)
    while len(todo):
        t = succ[todo]
        ready = rank[t] >= 0
        rank[todo[ready]] = rank[t[ready]] + 1
        todo = todo[~ready]
    assert np.all(rank[succ[~term]] <= rank[~term] - 1)
    return Ranking(True, rank, np.array([], dtype=np.int64))


def cycle_residues(g: StateGraph, ranking: Ranking | None = None) -> list[int]:
    ranking = ranking or dag_ranking(g)
    return sorted({g.decode(int(s))[0] for s in ranking.cycle_states})


@dataclass
class CycleCertificate:
    residues: tuple[int, ...]
    M: int
    K: int
    halvings: tuple[int, ...]

    @property
    def drift(self) -> float:
        return len(self.residues) * self.K * LOG2_3 - sum(self.halvings)

    @property
    def net_positive(self) -> bool:
        return 3 ** (len(self.residues) * self.K) > 2 ** sum(self.halvings)


def residue_cycles(g: StateGraph, residues: Sequence[int] | None = None) -> list[CycleCertificate]:
    """Distinct cycles of the residue map restricted to the given residues."""
    residues = cycle_residues(g) if residues is None else residues
    pool, out = set(residues), []
    seen = set()
    for r in residues:
        if r in seen:
            continue
        path, x = [], r
        while x in pool and x not in path:
            path.append(x)
            x = int(g.residue_next[(x - 1) // 2])
        if x in path:
            cyc = path[path.index(x):]
            if not seen & set(cyc):
                seen.update(cyc)
                out.append(CycleCertificate(tuple(cyc), g.M, g.K,
                                            tuple(int(g.halvings[(y - 1) // 2]) for y in cyc)))
        seen.update(path)
    return out


def _block_mod(r: int, M: int, K: int) -> tuple[int, int]:
    """K-step map of odd r taken mod 2^M (representative convention): (image, halvings)."""
    x, V = r, 0
    for _ in range(K):
        m = 3 * x + 1
        v = v2(m)
        V += v
        x = (m >> v) % (1 << M)
    return x, V


def _check_closed(cycle: CycleCertificate, step) -> None:
    rs = cycle.residues
    for i, r in enumerate(rs):
        if step(r, cycle.M)[0] != rs[(i + 1) % len(rs)]:
            raise ValueError("open walk: not a cycle of the residue map")


def carry_parity(cycle: CycleCertificate, M: int | None = None) -> int:
    """Sum of the bit-M carries of T(r_i) computed mod 2^(M+1), mod 2."""
    M = cycle.M if M is None else M
    _check_closed(cycle, lambda r, m: _block_mod(r, m, cycle.K))
    return sum(_block_mod(r, M + 1, cycle.K)[0] >> M for r in cycle.residues) % 2


def lift_depth(cycle: CycleCertificate, M: int | None = None, K: int | None = None,
               cap: int = 4, step: Callable | None = None) -> int:
    """Largest d <= cap such that the cycle lifts to a net-positive cycle mod 2^(M+d).

    A lift is a closed orbit of the depth-(M+d) map, of length n j for
    some j <= 2^d, projecting onto the cycle step by step.
    step(r, m) -> (image, drift) overrides the Syracuse block map.
    """
    M = cycle.M if M is None else M
    K = cycle.K if K is None else K
    if step is None:
        def step(r, m):
            x, V = _block_mod(r, m, K)
            return x, K * LOG2_3 - V
    _check_closed(cycle, step)
    n = len(cycle.residues)
    best = 0
    frontier = [cycle.residues[0]]
    for d in range(1, cap + 1):
        m = M + d
        mask = (1 << M) - 1
        lifted = False
        starts = [cycle.residues[0] + (j << M) for j in range(1 << d)]
        for s in starts:
            x, drift, ok = s, 0.0, True
            for t in range(n << d):
                if x & mask != cycle.residues[t % n]:
                    ok = False
                    break
                x, dd = step(x, m)
                drift += dd
                if x == s and (t + 1) % n == 0:
                    break
            else:
                ok = False
            if ok and x == s and drift > 0:
                lifted = True
                break
        if not lifted:
            return best
        best = d
    return best


def budget_check(cycle: CycleCertificate) -> dict:
    """Drain (# valuation-1 steps) against reload (s-gain on the other steps), s = v2(r + 1)."""
    if cycle.K != 1:
        raise ValueError("budget equation is stated for single steps")
    rs = cycle.residues
    _check_closed(cycle, lambda r, m: _block_mod(r, m, 1))
    n = len(rs)
    drain = sum(1 for v in cycle.halvings if v == 1)
    reload = sum(v2(rs[(i + 1) % n] + 1) - v2(rs[i] + 1) for i in range(n) if cycle.halvings[i] >= 2)
    return {"drain": drain, "reload": reload, "balanced": drain == reload,
            "positive": drain, "negative": n - drain}


def s_invariant_check(M: int) -> dict:
    """On valuation-1 steps (r = 3 mod 4) s(T r) = s(r) - 1 exactly; longest chain in vertices."""
    if M < 3:
        raise ValueError("M must be at least 3")
    mask = (1 << M) - 1
    longest, exact = 0, True
    chain = {}
    # process in increasing s so chains below are known
    for r in sorted(range(1, 1 << M, 2), key=lambda r: v2(r + 1)):
        s = v2(r + 1) if r != mask else M
        if r % 4 == 3:
            t = ((3 * r + 1) >> 1) & mask
            st = v2(t + 1) if t != mask else M
            exact &= st == s - 1
            chain[r] = chain.get(t, 1) + 1
        else:
            chain[r] = 1
        longest = max(longest, chain[r])
    return {"acyclic": exact, "exact_decrement": exact, "longest_chain": longest}


# -- augmented return graph and exit-return reduction ----------------------------


@dataclass
class AugmentedGraph:
    graph: StateGraph
    return_edges: dict[int, int]  # exit state -> re-entry state
    exits: int
    outside_cycles: int
    limited: int
    acyclic: bool
    max_rank: int | None
    core_acyclic: bool

    @property
    def returns(self) -> int:
        return len(self.return_edges)


def _outside_walk(g: StateGraph, s: int, limit: int):
    """Follow an exit state below zero budget until re-entry, an outside cycle, or the limit.

    Outside budgets are floored at -B so that outside cycles are finite objects.
    """
    r, b = g.decode(s)
    c = int(g.step_budget[(r - 1) // 2])
    x = int(g.residue_next[(r - 1) // 2])
    bb = b + c
    seen = set()
    for _ in range(limit):
        if bb >= 0:
            return "return", g.state(x, min(bb, g.B))
        key = (x, bb)
        if key in seen:
            return "cycle", None
        seen.add(key)
        i = (x - 1) // 2
        bb = max(bb + int(g.step_budget[i]), -g.B)
        x = int(g.residue_next[i])
    return "limit", None


def augmented_graph(M: int, B: int = 15, step_limit: int | None = None, K: int = 1,
                    drift_mode: str = "away") -> AugmentedGraph:
    step_limit = 4 * M if step_limit is None else step_limit
    g = build_state_graph(M, K, B, drift_mode)
    core = dag_ranking(g)
    ret, cyc, lim = {}, 0, 0
    ex = g.exits
    for s in ex.tolist():
        kind, t = _outside_walk(g, s, step_limit)
        if kind == "return":
            ret[s] = t
        elif kind == "cycle":
            cyc += 1
        else:
            lim += 1
    aug = g.flat.copy()
    for s, t in ret.items():
        aug[s] = t
    rk = dag_ranking(aug)
    return AugmentedGraph(g, ret, len(ex), cyc, lim, rk.acyclic, rk.max_rank, core.acyclic)


@dataclass
class ExitReturn:
    H_edges: dict[int, int]
    max_L: int | None
    max_composite_V: int | None
    equivalence: bool
    D: int


def exit_return_map(M: int, B: int = 15, step_limit: int | None = None, K: int = 1,
                    aug: AugmentedGraph | None = None) -> ExitReturn:
    aug = aug or augmented_graph(M, B, step_limit, K)
    g = aug.graph
    if not aug.core_acyclic:
        raise ValueError("core graph has cycles; exit-return reduction needs an acyclic core")
    succ = g.flat
    n = len(succ)
    # exit reached from each core state and the number of core edges to it
    ex_of = np.full(n, -1, dtype=np.int64)
    dist = np.full(n, -1, dtype=np.int64)
    term = succ == EXIT
    ex_of[term] = np.flatnonzero(term)
    dist[term] = 0
    todo = np.flatnonzero(~term)
    while len(todo):
        t = succ[todo]
        ready = dist[t] >= 0
        ex_of[todo[ready]] = ex_of[t[ready]]
        dist[todo[ready]] = dist[t[ready]] + 1
        todo = todo[~ready]
    H = {e: int(ex_of[r]) for e, r in aug.return_edges.items()}
    # H is functional on exits; acyclicity by walking
    L: dict[int, int] = {}
    h_acyclic = True
    for e in H:
        path, x = [], e
        while x in H and x not in L and x not in path:
            path.append(x)
            x = H[x]
        if x in path:
            h_acyclic = False
            break
        base = L.get(x, 0)
        for y in reversed(path):
            base += 1
            L[y] = base
    equivalence = h_acyclic == aug.acyclic
    if not equivalence:
        raise AssertionError("exit-return equivalence failed")
    if not h_acyclic:
        return ExitReturn(H, None, None, True, int(dist.max()))
    D = int(dist.max())
    V = (D + 1) * np.array([L.get(int(e), 0) for e in ex_of]) + dist
    aug_succ = succ.copy()
    for s, t in aug.return_edges.items():
        aug_succ[s] = t
    has = aug_succ >= 0
    assert np.all(V[aug_succ[has]] <= V[has] - 1), "composite ranking fails on an edge"
    return ExitReturn(H, max(L.values(), default=0), int(V.max()), True, D)


# -- zone table ----------------------------------------------------------------------


@dataclass
class ZoneRow:
    M: int
    K: int
    acyclic: bool
    max_rank: int | None
    cycle_states: int


def zone_row(M: int, K: int = 1, B: int = 20, drift_mode: str = "away") -> ZoneRow:
    g = build_state_graph(M, K, B, drift_mode)
    rk = dag_ranking(g)
    return ZoneRow(M, K, rk.acyclic, rk.max_rank, len(cycle_residues(g, rk)))


def dag_zone_table(Ms=range(6, 16), Ks=(1, 5), B: int = 20) -> list[ZoneRow]:
    return [zone_row(M, K, B) for M in Ms for K in Ks]
