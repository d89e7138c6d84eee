"""Acceptance criteria 1-13.

Each criterion is a list of named sub-checks. A criterion prints PASS only
if every sub-check passes. Sub-checks that cannot be reproduced are listed
in KNOWN_RED with the reason; they still count as FAIL in the printed line
and are asserted unchanged in strict-xfail tests, so a fix shows up as XPASS.
"""

import itertools
import math
import random
import time
from fractions import Fraction
from functools import cache

import pytest

from collatz_lab import cascade_renewal as cr
from collatz_lab import cycle_crossing as cc
from collatz_lab import fiber57 as f57
from collatz_lab import modular_laws as ml
from collatz_lab import phantom_census as pc
from collatz_lab import state_graphs as sg
from collatz_lab.cli_reports import PUBLISHED_T10
from collatz_lab.syracuse_core import LOG2_3

KNOWN_RED = {
    (1, "R(3) = 4.858e-2"): "Mobius necklace sum gives R(3) = 1.062e-2; the listed per-K values are not "
                            "reproducible from the stated definition, while the 3..55 sum is",
    (1, "R(10) = 1.955e-3"): "computed 3.604e-3 (matches the phantom-family table, not the per-K table)",
    (1, "R(20) = 2.320e-5"): "computed 7.495e-4; the published per-K decay is too fast for the stated sum",
    (2, "no core revisit at offset 10000"): "10000 = 0 mod 8, so the tower element 8^r - 1 lands back on "
                                            "8^(r-1) - 1 at its first q = 7 return, for every r",
    (7, "K=1 max ranks 32,34,43,47 (M=6..9)"): "exit-edge longest path gives 24,29,37,44; the drift "
                                               "discretisation that yields the published numbers is not recoverable",
    (7, "K=1 max rank 74 at M=13"): "computed 81",
    (8, "7280 exits at M=13"): "the (r, b) model with B=15 has 4096 exit states; the published core "
                               "count 127009 implies a state space that is not described",
    (8, "2141 returns at M=13"): "computed 2449",
    (8, "max V+ = 103"): "computed 76",
    (13, "seven named phantom families"): "only ell3, ell5..ell8 have published signatures; m10, m11, m20 "
                                          "are given only by (K, m*, max delta)",
}


def _timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


@cache
def criterion(n: int):
    return CRITERIA[n]()


def c1():
    gs, dt = _timed(lambda: pc.gain_series(55))

    def sig3(x, y):
        return float(f"{x:.2e}") == float(f"{y:.2e}")

    return [
        ("R(3) = 4.858e-2", sig3(gs.R(3), 4.858e-2)),
        ("R(10) = 1.955e-3", sig3(gs.R(10), 1.955e-3)),
        ("R(20) = 2.320e-5", sig3(gs.R(20), 2.320e-5)),
        ("sum 3..55 = 0.08783 +- 5e-5", abs(gs.partial_sum - 0.08783) <= 5e-5),
        ("total bound < 0.0893", gs.total_bound < 0.0893),
        ("runtime < 10 min", dt < 600),
    ]


def c2():
    def body():
        subs = []
        kr = f57.kernel_report()
        bn = f57.bottleneck_constants()
        subs.append(("perron root = 129/1024 exact", kr.rho == Fraction(129, 1024)))
        subs.append(("c0 = 2.989 +- 1e-3", abs(bn.c0 - 2.989) <= 1e-3))
        subs.append(("alpha = 645/1024", bn.alpha == Fraction(645, 1024)))
        ok_core = True
        for r in range(2, 9):
            c = f57.invariant_core(r)
            ok_core &= len(c) == 5 and set(c.fixed_points) == {8 ** (r - 1) - 1, 4 * 8 ** (r - 1) - 1, 8**r - 1}
        subs.append(("|I_r| = 5 with fixed points, r=2..8", ok_core))
        runs = f57.absorption_table(range(2, 7), 10000)
        subs.append(("absorption within 194 steps, r=2..6", all(a.steps <= 194 and a.final_state % 8**a.r == 1
                                                                for a in runs)))
        subs.append(("no core revisit at offset 10000", not any(a.revisited_core for a in runs)))
        return subs
    subs, dt = _timed(body)
    return subs + [("runtime < 2 min", dt < 120)]


def c3():
    def body():
        tab = ml.lattice_path_table(51)
        want = {1: Fraction(1, 2), 2: Fraction(3, 8), 4: Fraction(13, 64), 7: Fraction(113, 1024),
                10: Fraction(1057, 16384)}
        subs = [(f"f({J}) = {v}", tab[J] == v) for J, v in want.items()]
        subs.append(("decay ratio <= 0.947 for J <= 50", all(tab[J + 1] / tab[J] <= Fraction(947, 1000)
                                                              for J in range(1, 51))))
        subs.append(("modular count at M=22 agrees for J <= 10",
                     all(ml.modular_survival_fraction(J, 22) == tab[J] for J in range(1, 11))))
        return subs
    subs, dt = _timed(body)
    return subs + [("runtime < 1 min", dt < 60)]


def c4():
    want = {4: Fraction(5, 8), 5: Fraction(3, 4), 8: Fraction(109, 128), 12: Fraction(1822, 2048),
            13: Fraction(3729, 4096)}
    subs, dt = _timed(lambda: [(f"f_{K} = {v}", ml.crossing_strata(K) == v) for K, v in want.items()])
    return subs + [("runtime < 5 min", dt < 300)]


def c5():
    oc = cc.one_cycle_densities()
    pcum = cc.cumulative_universal_density(2)
    return [
        ("P1cyc = 0.7137254976", str(oc.p1cyc.decimal(10)) == "0.7137254976"
         and str(cc.Estimate(oc.p1cyc.upper, oc.p1cyc.upper).decimal(10)) == "0.7137254976"),
        ("P_all = 0.4193627488", str(oc.p_all.decimal(10)) == "0.4193627488"
         and str(cc.Estimate(oc.p_all.upper, oc.p_all.upper).decimal(10)) == "0.4193627488"),
        ("P_cum(2) = 0.6116 +- 0.002", abs(pcum.value - 0.6116) <= 0.002),
    ]


def c6():
    m = cc.logdrift_moments()
    m1, var = cc.series_moments()
    cz = cc.cramer_rate()
    return [
        ("E[X] closed form within 1e-6", abs(m1 - (2 * LOG2_3 - 4)) < 1e-6 and abs(m.mean - m1) < 1e-6),
        ("Var closed form", abs(var - 2 * ((LOG2_3 - 1) ** 2 + 1)) < 1e-6 and abs(m.variance - var) < 1e-6),
        ("I(0) = 0.1465 +- 5e-4", abs(cz.I0 - 0.1465) <= 5e-4),
        ("t* = 0.363 +- 5e-3", abs(cz.t_star - 0.363) <= 5e-3),
    ]


def c7():
    def body():
        rows = {(r.M, r.K): r for r in sg.dag_zone_table(range(6, 19), (1,))}
        pattern = all(rows[(M, 1)].acyclic == (not 10 <= M <= 12) for M in range(6, 19))
        counts = [rows[(M, 1)].cycle_states for M in (10, 11, 12)] == [26, 25, 13]
        ranks = [rows[(M, 1)].max_rank for M in (6, 7, 8, 9)] == [32, 34, 43, 47]
        r13 = rows[(13, 1)].max_rank == 74
        cert = True
        for M in (10, 11, 12):
            for cyc in sg.residue_cycles(sg.build_state_graph(M)):
                cert &= cyc.net_positive and sg.carry_parity(cyc) == 1 and sg.lift_depth(cyc) == 0
        return [
            ("acyclicity pattern M=6..18", pattern),
            ("cycle states (26, 25, 13)", counts),
            ("K=1 max ranks 32,34,43,47 (M=6..9)", ranks),
            ("K=1 max rank 74 at M=13", r13),
            ("cycles: odd carry parity, lift depth 0", cert),
        ]
    subs, dt = _timed(body)
    return subs + [("runtime < 15 min", dt < 900)]


def c8():
    aug = sg.augmented_graph(13, 15)
    er = sg.exit_return_map(13, 15, aug=aug)
    return [
        ("7280 exits at M=13", aug.exits == 7280),
        ("2141 returns at M=13", aug.returns == 2141),
        ("augmented graph acyclic", aug.acyclic),
        ("max V+ = 103", aug.max_rank == 103),
        ("exit-return equivalence", er.equivalence),
    ]


def c9():
    def body():
        cm = cr.cascade_markov()
        ps = cr.pgf_singularity()
        ss = cr.fiber_spectral_summary(10)
        # G'(1) by a symmetric exact difference quotient on the rational PGF
        h = Fraction(1, 10**9)
        d = (cr.cascade_pgf(1 + h) - cr.cascade_pgf(1 - h)) / (2 * h)
        return [
            ("rho(Q) = 3/4", cm.rho == Fraction(3, 4)),
            ("N row sums (4,3,5)", [x for x in cm.fundamental.row_sums()] == [4, 3, 5]),
            ("q3 = 1/3", cm.q3 == Fraction(1, 3)),
            ("E[S] = 5", cm.expected_S == 5),
            ("G(1) = 1", cr.cascade_pgf(1) == 1),
            ("G'(1) = 5", cr.pgf_mean() == 5 and abs(float(d) - 5) < 1e-6),
            ("alpha = log2(sqrt5 - 1) = 0.30576", abs(ps.alpha - math.log2(math.sqrt(5) - 1)) < 1e-5
             and abs(ps.alpha - 0.30576) <= 1e-5),
            ("T10 entries", [list(r) for r in ss.T.rows] == [[Fraction(x, 32) for x in row] for row in PUBLISHED_T10]),
            ("gamma10 = 0.8549 +- 5e-4", abs(ss.gamma - 0.8549) <= 5e-4),
            ("TV = 0.0425 +- 5e-4", abs(float(ss.tv_uniform) - 0.0425) <= 5e-4),
        ]
    subs, dt = _timed(body)
    return subs + [("runtime < 5 min", dt < 300)]


def c10():
    gap = ml.modular_census("gap", 20)
    val = ml.modular_census("valuation", 16)
    q = ml.modular_census("quarter", 16)
    rl = ml.modular_census("reload", 16)
    pbs = {k: ml.modular_census("post_burst", 16, k) for k in (3, 5, 10)}
    return [
        ("gap law 2^-g, g <= 9", all(gap[g] == Fraction(1, 2**g) for g in range(1, 10))),
        ("valuation law 2^-(j-1)", all(val[j] == Fraction(1, 2 ** (j - 1)) for j in range(2, 12))),
        ("quarter law 1/4", all(m * len(q.support) == Fraction(1, 4) for m in q.mass)),
        ("reload law 2^-j", all(rl[j] == Fraction(1, 2**j) for j in range(1, 10))),
        ("post-burst law 2^(1-j), k in {3,5,10}",
         all(pb[j] == Fraction(2, 2**j) for pb in pbs.values() for j in range(2, 12))),
    ]


def c11():
    q7 = [f57.q7_return(m) for m in range(64)]
    q7_ok = all(r.step1_residue == 59 and r.step2 % 64 == 57 for r in q7)
    uniform = sorted(r.step2_quotient % 8 for r in q7) == sorted(list(range(8)) * 8)
    q3_ok = all(57 not in f57.q3_trace(m).residues for m in range(1 << 10))
    dens = f57.gap5_union_density(20) == Fraction(1, 32) - Fraction(1, 2**26)
    sim = all(f57.gap5_returns(f57.gap5_cylinder(w).a_w) for w in range(12))
    return [
        ("q=7 return residues 59 then 57", q7_ok),
        ("q=7 destination uniform mod 8", uniform),
        ("q=3 no return at steps 1..4 (2^10 sweep)", q3_ok),
        ("gap-5 density 1/32 - tail", dens and sim),
    ]


def c12():
    k = cc.kesten_simulate(seed=20240917)
    cfg = f57.InterchainConfig(orbits=5000, seed=20240917)
    ic = f57.interchain_batch(2, cfg)
    return [
        ("Kesten mass below 1 = 0.465 +- 0.015", abs(k.mass_below_1 - 0.465) <= 0.015),
        ("rho0 = 0.839 +- 0.02", abs(k.rho0 - 0.839) <= 0.02),
        ("inter-chain R_2 <= 0.85 over >= 500 orbits", cfg.orbits >= 500 and ic.normalized_R_r <= 0.85),
    ]


def _scramble_ok():
    rng = random.Random(5)
    for _ in range(64):
        e = rng.randint(4, 12)
        a = ml.ResidueClass(rng.randrange(1, 1 << e, 2), e)
        ml.scramble_decompose(a, rng.randint(1, 6))  # raises on any failed lift
    return True


def _block_law_ok():
    for V in range(1, 11):
        for k in range(1, V + 1):
            for cut in itertools.combinations(range(1, V), k - 1):
                word = tuple(b - a for a, b in zip((0,) + cut, cut + (V,)))
                wc = ml.block_residue(word)
                hits = [n for n in range(1, 1 << (V + 1), 2) if ml.valuation_word(n, len(word)) == word]
                if hits != [wc.residue.value]:
                    return False
    return True


def _known_zone_ok():
    M = 10
    for a in range(1, 1 << M, 2):
        Z = ml.known_zone_trace(ml.ResidueClass(a, M), 12).Z
        if any(z1 > max(0, z0 - 2) for z0, z1 in zip(Z, Z[1:])):
            return False
    return True


def c13():
    fams = pc.FAMILIES
    end_ratio = all(pc.census_bruteforce(s, s.ell, a, L=12) == 1 for s in fams.values() for a in (1, 3, 6))
    return [
        ("scrambling affine identity, 64 classes", _scramble_ok()),
        ("block-law residue uniqueness, sum b <= 10", _block_law_ok()),
        ("known-zone decay at M=10", _known_zone_ok()),
        ("extension binomial fibers (5,3), (8,3)",
         all(pc.structural_checks(K, s).suffix_binomial for K, s in ((5, 3), (8, 3)))),
        ("coding injectivity K <= 14", all(pc.coding_injective(K) for K in range(1, 15))),
        ("census end-of-cycle ratio 1 (published families)", end_ratio),
        ("seven named phantom families", len(fams) >= 7),
        ("s-invariant exact decrement M <= 18", all(sg.s_invariant_check(M)["exact_decrement"] for M in range(3, 19))),
    ]


CRITERIA = {1: c1, 2: c2, 3: c3, 4: c4, 5: c5, 6: c6, 7: c7, 8: c8, 9: c9, 10: c10, 11: c11, 12: c12, 13: c13}


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, acceptance_log):
    subs = criterion(n)
    acceptance_log(n, subs)
    unexpected = [name for name, ok in subs if not ok and (n, name) not in KNOWN_RED]
    assert not unexpected, f"criterion {n} failing sub-checks: {unexpected}"


@pytest.mark.parametrize("key", sorted(KNOWN_RED), ids=lambda k: f"c{k[0]}-{k[1]}")
def test_known_red(key, request):
    n, name = key
    subs = dict(criterion(n))
    if name not in subs:
        pytest.fail(f"unknown sub-check {name!r}")
    request.applymarker(pytest.mark.xfail(strict=True, reason=KNOWN_RED[key]))
    assert subs[name]
