"""Verification suites, table emission and orbit inspection.

Each suite returns a SuiteReport of named checks. Check ids read
module.operation.detail so a failing line points at the code that
produced it.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable

from . import __version__

DEFAULT_SEED = 20240917


@dataclass
class SuiteConfig:
    seed: int = DEFAULT_SEED
    depth_cap: int = 16  # census depth for modular enumerations
    mc_steps: int = 200_000  # Kesten chain length
    orbits: int = 5000  # inter-chain batch size


@dataclass
class Check:
    id: str
    expected: str
    computed: str
    passed: bool
    tolerance: str | None = None
    lo: float | None = None
    hi: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Check":
        d = dict(d)
        d["passed"] = d.pop("pass")
        return cls(**d)


@dataclass
class SuiteReport:
    suite: str
    seed: int
    checks: list[Check]
    version: str = __version__
    wall_time: float | None = field(default=None, compare=False)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self, timing: bool = False) -> dict:
        d = {
            "suite": self.suite,
            "version": self.version,
            "seed": self.seed,
            "pass": self.passed,
            "checks": [c.to_dict() for c in sorted(self.checks, key=lambda c: c.id)],
        }
        if timing:
            d["wall_time"] = self.wall_time
        return d

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "SuiteReport":
        d = json.loads(s)
        return cls(d["suite"], d["seed"], [Check.from_dict(c) for c in d["checks"]],
                   d["version"], d.get("wall_time"))


def fmt(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(fmt(y) for y in x) + "]"
    return str(x)


def exact(id: str, expected, computed) -> Check:
    return Check(id, fmt(expected), fmt(computed), expected == computed)


def approx(id: str, expected: float, computed: float, tol: float) -> Check:
    lo, hi = expected - tol, expected + tol
    return Check(id, fmt(expected), fmt(float(computed)), lo <= computed <= hi, fmt(tol), lo, hi)


def sig_digits(id: str, expected: float, computed: float, digits: int = 3) -> Check:
    """Agreement after rounding both to `digits` significant figures."""
    def rnd(x):
        return float(f"{x:.{digits - 1}e}")
    return Check(id, f"{expected:.{digits - 1}e}", f"{computed:.{digits - 1}e}",
                 rnd(expected) == rnd(computed), f"{digits} significant digits")


def decimals(id: str, expected: str, est) -> Check:
    """Both ends of a certified interval truncate to the expected decimal string."""
    digits = len(expected.split(".")[1])
    lo = str(est.decimal(digits))
    hi = str(type(est)(est.upper, est.upper).decimal(digits))
    return Check(id, expected, lo, lo == hi == expected, f"{digits} decimals (truncated)",
                 float(est.lower), float(est.upper))


def upper(id: str, computed: float, bound: float, strict: bool = False) -> Check:
    ok = computed < bound if strict else computed <= bound
    return Check(id, ("< " if strict else "<= ") + fmt(bound), fmt(computed), ok, None, None, bound)


def truth(id: str, computed: bool, expected: str = "True") -> Check:
    return Check(id, expected, str(bool(computed)), bool(computed))


# ---- suites ----

def suite_modular_laws(cfg: SuiteConfig) -> list[Check]:
    from .modular_laws import modular_census

    d = cfg.depth_cap
    out = []
    gap = modular_census("gap", max(d, 20))
    for g in range(1, 10):
        out.append(exact(f"modular_laws.gap_census.g{g}", Fraction(1, 2**g), gap[g]))
    val = modular_census("valuation", d)
    for j in range(2, 10):
        out.append(exact(f"modular_laws.valuation_census.j{j}", Fraction(1, 2 ** (j - 1)), val[j]))
    q = modular_census("quarter", d)
    n = len(q.support)
    for st, m in zip(q.support, q.mass):
        out.append(exact(f"modular_laws.quarter_census.k{st[0]}mu{st[1]}", Fraction(1, 4), m * n))
    rl = modular_census("reload", d)
    for j in range(1, 9):
        out.append(exact(f"modular_laws.reload_census.j{j}", Fraction(1, 2**j), rl[j]))
    for k in (3, 5, 10):
        pb = modular_census("post_burst", d, k)
        for j in range(2, 9):
            out.append(exact(f"modular_laws.post_burst_census.k{k}.j{j}", Fraction(2, 2**j), pb[j]))
    return out


def suite_gain_series(cfg: SuiteConfig) -> list[Check]:
    from .phantom_census import D_STAR, gain_series

    gs = gain_series(55)
    out = [
        sig_digits("phantom_census.gain_series.R3", 4.858e-2, gs.R(3)),
        sig_digits("phantom_census.gain_series.R10", 1.955e-3, gs.R(10)),
        sig_digits("phantom_census.gain_series.R20", 2.320e-5, gs.R(20)),
        approx("phantom_census.gain_series.sum_3_55", 0.08783, gs.partial_sum, 5e-5),
        upper("phantom_census.gain_series.total_bound", gs.total_bound, 0.0893, strict=True),
        upper("phantom_census.gain_series.max_ratio_K15", gs.max_ratio, 0.979),
        approx("phantom_census.chernoff.D_star", 0.05004, D_STAR, 5e-5),
    ]
    return out


def suite_crossing_densities(cfg: SuiteConfig) -> list[Check]:
    from .cycle_crossing import (cramer_rate, cumulative_universal_density, logdrift_moments,
                                 one_cycle_densities, series_moments)
    from .syracuse_core import LOG2_3

    oc = one_cycle_densities()
    mom = logdrift_moments()
    m1, var = series_moments()
    cr = cramer_rate()
    return [
        decimals("cycle_crossing.one_cycle_densities.p1cyc", "0.7137254976", oc.p1cyc),
        decimals("cycle_crossing.one_cycle_densities.p_all", "0.4193627488", oc.p_all),
        approx("cycle_crossing.cumulative_universal_density.k2", 0.6116,
               cumulative_universal_density(2).value, 0.002),
        approx("cycle_crossing.logdrift_moments.mean", 2 * LOG2_3 - 4, mom.mean, 1e-6),
        approx("cycle_crossing.logdrift_moments.mean_series", mom.mean, m1, 1e-6),
        approx("cycle_crossing.logdrift_moments.variance", 2 * ((LOG2_3 - 1) ** 2 + 1), var, 1e-6),
        approx("cycle_crossing.cramer_rate.I0", 0.1465, cr.I0, 5e-4),
        approx("cycle_crossing.cramer_rate.t_star", 0.363, cr.t_star, 5e-3),
    ]


PUBLISHED_RANKS = {  # (M, K) -> max V
    (6, 1): 32, (7, 1): 34, (8, 1): 43, (9, 1): 47, (13, 1): 74, (14, 1): 85, (15, 1): 85,
    (6, 5): 8, (7, 5): 8, (8, 5): 10, (9, 5): 11, (13, 5): 17, (14, 5): 18, (15, 5): 18,
}
PUBLISHED_CYCLE_STATES = {10: 26, 11: 25, 12: 13}


def suite_dag_zones(cfg: SuiteConfig) -> list[Check]:
    from .state_graphs import (augmented_graph, build_state_graph, carry_parity, dag_zone_table,
                               exit_return_map, lift_depth, residue_cycles)

    out = []
    for row in dag_zone_table(range(6, 16), (1, 5)):
        tag = f"state_graphs.dag_ranking.M{row.M}.K{row.K}"
        out.append(exact(tag + ".acyclic", not 10 <= row.M <= 12, row.acyclic))
        if row.M in PUBLISHED_CYCLE_STATES:
            out.append(exact(tag + ".cycle_states", PUBLISHED_CYCLE_STATES[row.M], row.cycle_states))
        if (row.M, row.K) in PUBLISHED_RANKS:
            out.append(exact(tag + ".max_rank", PUBLISHED_RANKS[(row.M, row.K)], row.max_rank))
    for M in (10, 11, 12):
        for i, cyc in enumerate(residue_cycles(build_state_graph(M))):
            tag = f"state_graphs.residue_cycles.M{M}.c{i}"
            out.append(truth(tag + ".net_positive", cyc.net_positive))
            out.append(exact(tag + ".carry_parity", 1, carry_parity(cyc)))
            out.append(exact(tag + ".lift_depth", 0, lift_depth(cyc)))
    aug = augmented_graph(13, 15)
    out += [
        exact("state_graphs.augmented_graph.M13.exits", 7280, aug.exits),
        exact("state_graphs.augmented_graph.M13.returns", 2141, aug.returns),
        truth("state_graphs.augmented_graph.M13.acyclic", aug.acyclic),
        exact("state_graphs.augmented_graph.M13.max_rank", 103, aug.max_rank),
    ]
    er = exit_return_map(13, 15, aug=aug)
    out.append(truth("state_graphs.exit_return_map.M13.equivalence", er.equivalence))
    return out


PUBLISHED_T10 = (
    (6, 4, 4, 6, 4, 1, 2, 5),
    (6, 3, 3, 5, 4, 6, 3, 2),
    (2, 4, 5, 6, 5, 3, 3, 4),
    (8, 4, 3, 2, 4, 3, 3, 5),
    (4, 3, 3, 4, 5, 5, 5, 3),
    (5, 3, 5, 4, 3, 5, 5, 2),
    (6, 5, 2, 3, 4, 1, 8, 3),
    (4, 1, 7, 3, 2, 8, 3, 4),
)  # numerators over 32, entry classes 3, 7, ..., 31 mod 32


def suite_cascade_kernels(cfg: SuiteConfig) -> list[Check]:
    from .cascade_renewal import (cascade_markov, cascade_pgf, fiber_spectral_summary, pgf_mean,
                                  pgf_singularity)

    cm = cascade_markov()
    ss = fiber_spectral_summary(10)
    return [
        exact("cascade_renewal.cascade_markov.rho", Fraction(3, 4), cm.rho),
        exact("cascade_renewal.cascade_markov.row_sums", [4, 3, 5], [int(x) for x in cm.fundamental.row_sums()]),
        exact("cascade_renewal.cascade_markov.q3", Fraction(1, 3), cm.q3),
        exact("cascade_renewal.cascade_markov.expected_S", Fraction(5), cm.expected_S),
        exact("cascade_renewal.cascade_pgf.G1", Fraction(1), cascade_pgf(1)),
        exact("cascade_renewal.pgf_mean", Fraction(5), pgf_mean()),
        approx("cascade_renewal.pgf_singularity.alpha", math.log2(math.sqrt(5) - 1), pgf_singularity().alpha, 1e-5),
        approx("cascade_renewal.pgf_singularity.alpha_published", 0.30576, pgf_singularity().alpha, 1e-5),
        exact("cascade_renewal.fiber_transition_matrix.R10.entries",
              [[Fraction(x, 32) for x in row] for row in PUBLISHED_T10], [list(r) for r in ss.T.rows]),
        approx("cascade_renewal.fiber_spectral_summary.R10.gamma", 0.8549, ss.gamma, 5e-4),
        approx("cascade_renewal.fiber_spectral_summary.R10.tv", 0.0425, float(ss.tv_uniform), 5e-4),
    ]


def suite_fiber57(cfg: SuiteConfig) -> list[Check]:
    from . import fiber57 as f

    kr = f.kernel_report()
    bn = f.bottleneck_constants()
    out = [
        exact("fiber57.partial_kernel.perron", Fraction(129, 1024), kr.rho),
        approx("fiber57.bottleneck_constants.c0", 2.989, bn.c0, 1e-3),
        approx("fiber57.bottleneck_constants.deficit", 0.667, bn.deficit, 1e-3),
        exact("fiber57.bottleneck_constants.alpha", Fraction(645, 1024), bn.alpha),
    ]
    for r in range(2, 9):
        c = f.invariant_core(r)
        out.append(exact(f"fiber57.invariant_core.r{r}.fixed_points",
                         sorted({8 ** (r - 1) - 1, 4 * 8 ** (r - 1) - 1, 8**r - 1}), sorted(c.fixed_points)))
        out.append(exact(f"fiber57.invariant_core.r{r}.size", 5, len(c)))
    for a in f.absorption_table(range(2, 7), 10000):
        tag = f"fiber57.absorption_run.r{a.r}.s{a.s}"
        out.append(upper(tag + ".steps", a.steps, 194))
        out.append(exact(tag + ".revisited_core", False, a.revisited_core))
    out.append(truth("fiber57.q7_return.uniform_mod8",
                     sorted(f.q7_return(m).step2_quotient % 8 for m in range(64)) == sorted(list(range(8)) * 8)))
    out.append(truth("fiber57.q3_trace.no_return_steps_1_4", all(57 not in f.q3_trace(m).residues for m in range(1024))))
    out.append(exact("fiber57.gap5_union_density.w20", Fraction(1, 32) - Fraction(1, 2**26), f.gap5_union_density(20)))
    ic = f.interchain_batch(2, f.InterchainConfig(orbits=cfg.orbits, seed=cfg.seed))
    out.append(upper("fiber57.interchain_batch.r2", ic.normalized_R_r, 0.85))
    return out


def suite_lattice_path(cfg: SuiteConfig) -> list[Check]:
    from .modular_laws import lattice_path_table, modular_survival_fraction

    tab = lattice_path_table(51)
    known = {1: Fraction(1, 2), 2: Fraction(3, 8), 4: Fraction(13, 64), 7: Fraction(113, 1024),
             10: Fraction(1057, 16384)}
    out = [exact(f"modular_laws.lattice_path_f.J{J}", v, tab[J]) for J, v in known.items()]
    worst = max(tab[J + 1] / tab[J] for J in range(1, 51))
    out.append(upper("modular_laws.lattice_path_f.decay_ratio", float(worst), 0.947))
    M = min(22, max(cfg.depth_cap, 22))
    for J in range(1, 11):
        out.append(exact(f"modular_laws.modular_survival_fraction.M{M}.J{J}", tab[J], modular_survival_fraction(J, M)))
    return out


def suite_strata(cfg: SuiteConfig) -> list[Check]:
    from .modular_laws import crossing_strata

    known = {4: Fraction(5, 8), 5: Fraction(3, 4), 8: Fraction(109, 128), 12: Fraction(1822, 2048),
             13: Fraction(3729, 4096)}
    return [exact(f"modular_laws.crossing_strata.K{K}", v, crossing_strata(K)) for K, v in known.items()]


def suite_kesten(cfg: SuiteConfig) -> list[Check]:
    from .cycle_crossing import kesten_simulate

    k = kesten_simulate(steps=cfg.mc_steps, seed=cfg.seed)
    return [
        approx("cycle_crossing.kesten_simulate.mass_below_1", 0.465, k.mass_below_1, 0.015),
        approx("cycle_crossing.kesten_simulate.rho0", 0.839, k.rho0, 0.02),
    ]


SUITES: dict[str, Callable[[SuiteConfig], list[Check]]] = {
    "modular-laws": suite_modular_laws,
    "gain-series": suite_gain_series,
    "crossing-densities": suite_crossing_densities,
    "dag-zones": suite_dag_zones,
    "cascade-kernels": suite_cascade_kernels,
    "fiber57": suite_fiber57,
    "lattice-path": suite_lattice_path,
    "strata": suite_strata,
    "kesten": suite_kesten,
}


def run_suite(name: str, config: SuiteConfig | dict | None = None) -> SuiteReport:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; known: {', '.join(sorted(SUITES))}")
    if isinstance(config, dict):
        config = SuiteConfig(**config)
    cfg = config or SuiteConfig()
    t = time.perf_counter()
    checks = SUITES[name](cfg)
    return SuiteReport(name, cfg.seed, checks, wall_time=time.perf_counter() - t)


# ---- tables ----

def _rk_values():
    from .phantom_census import gain_series

    gs = gain_series(20)
    return ["K", "R_K"], [[K, f"{gs.R(K):.6e}"] for K in range(3, 21)]


def _dag_zones():
    from .state_graphs import zone_row

    rows = []
    for M in range(6, 20):
        a, b = zone_row(M, 1), zone_row(M, 5)
        cyc = a.cycle_states if not a.acyclic else ""
        rows.append([M, "Yes" if a.acyclic else "No", a.max_rank if a.acyclic else "",
                     "Yes" if b.acyclic else "No", b.max_rank if b.acyclic else "", cyc])
    return ["M", "K1_dag", "K1_max_V", "K5_dag", "K5_max_V", "cycle_states"], rows


def _exit_return():
    from .state_graphs import augmented_graph, exit_return_map

    rows = []
    for M in range(13, 18):
        aug = augmented_graph(M, 15)
        er = exit_return_map(M, 15, aug=aug)
        core = 2 ** (M - 1) * (15 + 1)
        rows.append([M, core, aug.exits, aug.returns, len(er.H_edges), er.max_L, er.max_composite_V,
                     f"{100 * len(er.H_edges) / core:.1f}%"])
    return ["M", "core_states", "exits", "returns", "H_edges", "max_L", "max_V", "compress"], rows


def _f_strata():
    from .modular_laws import crossing_strata

    return ["K", "f_K", "decimal"], [[K, fmt(crossing_strata(K)), f"{float(crossing_strata(K)):.6f}"]
                                     for K in range(4, 14)]


def _t10():
    from .cascade_renewal import fiber_transition_matrix

    T = fiber_transition_matrix(10)
    n = T.order
    return ["row"] + [f"c{j}" for j in range(n)], [[i] + [fmt(T.rows[i][j]) for j in range(n)] for i in range(n)]


TABLES = {
    "rk-values": _rk_values,
    "dag-zones": _dag_zones,
    "exit-return": _exit_return,
    "f-strata": _f_strata,
    "T10": _t10,
}


def emit_table(name: str, format: str = "json") -> str:
    if name not in TABLES:
        raise KeyError(f"unknown table {name!r}; known: {', '.join(sorted(TABLES))}")
    cols, rows = TABLES[name]()
    if format == "json":
        return json.dumps({"table": name, "columns": cols, "rows": rows}, indent=2)
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        w.writerows(rows)
        return buf.getvalue()
    raise ValueError(f"unknown format {format!r}")


# ---- orbit ----

def orbit_summary(n: int, max_steps: int = 10_000) -> dict:
    from .syracuse_core import cycle_types, orbit, sigma_crossing

    if n < 1:
        raise ValueError("n must be positive")
    start = n
    halvings = 0
    while n % 2 == 0:
        n //= 2
        halvings += 1
    tr = orbit(n, max_steps)
    cs = cycle_types(tr) if len(tr) else None
    return {
        "n": start,
        "odd_start": n,
        "leading_halvings": halvings,
        "odd_steps": len(tr),
        "reached_one": tr.reached_one,
        "peak": max(tr.values),
        "valuation_sum": sum(tr.valuations),
        "valuations_head": list(tr.valuations[:32]),
        "cycles": len(cs.cycles) if cs else 0,
        "below_start_step": sigma_crossing(n, max_steps) if n >= 3 else None,
        "fiber57_visits": sum(1 for x in tr.values if x % 64 == 57),
    }
