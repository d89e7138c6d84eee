"""Command line: python -m collatz_lab {verify,table,orbit} ..."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .cli_reports import SUITES, TABLES, SuiteConfig, emit_table, orbit_summary, run_suite

OUT_ENV = "COLLATZ_LAB_OUT"


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="collatz-lab")
    sub = p.add_subparsers(dest="cmd", required=True)

    v = sub.add_parser("verify", help="run a named verification suite")
    v.add_argument("suite", nargs="?", help="one of: " + ", ".join(sorted(SUITES)))
    v.add_argument("--suite", dest="suite_opt", help="same as the positional suite")
    v.add_argument("--seed", type=int, default=SuiteConfig.seed, help="RNG seed for Monte Carlo checks")
    v.add_argument("--depth-cap", type=int, default=SuiteConfig.depth_cap, help="enumeration depth cap")
    v.add_argument("--mc-steps", type=int, default=SuiteConfig.mc_steps, help="Monte Carlo sample count")
    v.add_argument("--format", choices=["json", "text"], default="text")
    v.add_argument("--out", help="write the JSON report here")

    t = sub.add_parser("table", help="emit a table")
    t.add_argument("name", nargs="?", help="one of: " + ", ".join(sorted(TABLES)))
    t.add_argument("--table", dest="table_opt")
    t.add_argument("--format", choices=["json", "csv"], default="csv")
    t.add_argument("--out", help="write the table here")

    o = sub.add_parser("orbit", help="summarise the orbit of n")
    o.add_argument("n", type=int)
    o.add_argument("--max-steps", type=int, default=10_000)
    return p


def _write(text: str, out: str | None, default_name: str) -> None:
    if out is None and os.environ.get(OUT_ENV):
        out = str(Path(os.environ[OUT_ENV]) / default_name)
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    Path(out).write_text(text if text.endswith("\n") else text + "\n")


def main(argv=None) -> int:
    p = _parser()
    try:
        a = p.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if a.cmd == "verify":
        name = a.suite or a.suite_opt
        if name not in SUITES:
            print(f"unknown suite {name!r}; known: {', '.join(sorted(SUITES))}", file=sys.stderr)
            return 2
        cfg = SuiteConfig(seed=a.seed, depth_cap=a.depth_cap, mc_steps=a.mc_steps)
        rep = run_suite(name, cfg)
        if a.format == "json":
            text = rep.to_json()
        else:
            lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.id}  expected={c.expected}  computed={c.computed}"
                     for c in sorted(rep.checks, key=lambda c: c.id)]
            lines.append(f"{name}: {'PASS' if rep.passed else 'FAIL'} "
                         f"({sum(c.passed for c in rep.checks)}/{len(rep.checks)})")
            text = "\n".join(lines)
        _write(text, a.out, f"{name}.{'json' if a.format == 'json' else 'txt'}")
        return 0 if rep.passed else 1

    if a.cmd == "table":
        name = a.name or a.table_opt
        if name not in TABLES:
            print(f"unknown table {name!r}; known: {', '.join(sorted(TABLES))}", file=sys.stderr)
            return 2
        _write(emit_table(name, a.format), a.out, f"{name}.{a.format}")
        return 0

    if a.n < 1 or a.max_steps < 1:
        print("n and --max-steps must be positive", file=sys.stderr)
        return 2
    print(json.dumps(orbit_summary(a.n, a.max_steps), indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
