import json

import pytest

from collatz_lab.__main__ import main
from collatz_lab.cli_reports import SUITES, SuiteReport, emit_table, orbit_summary, run_suite


def test_registry():
    assert set(SUITES) == {"modular-laws", "gain-series", "crossing-densities", "dag-zones", "cascade-kernels",
                           "fiber57", "lattice-path", "strata", "kesten"}
    with pytest.raises(KeyError):
        run_suite("nope")


def test_report_roundtrip_and_determinism():
    a = run_suite("strata")
    b = run_suite("strata")
    assert a.to_json() == b.to_json()
    back = SuiteReport.from_json(a.to_json())
    assert back.to_json() == a.to_json()
    assert a.passed


def test_gain_suite_contents():
    rep = run_suite("gain-series")
    ids = {c.id: c for c in rep.checks}
    assert ids["phantom_census.gain_series.sum_3_55"].passed
    assert not rep.passed  # per-K published values do not reproduce


def test_fiber_suite_perron():
    rep = run_suite("fiber57", {"orbits": 500})
    c = {c.id: c for c in rep.checks}["fiber57.partial_kernel.perron"]
    assert c.passed and c.computed == "129/1024"


def test_tables():
    rows = emit_table("rk-values", "csv").strip().splitlines()
    assert rows[0] == "K,R_K" and len(rows) == 19
    doc = json.loads(emit_table("dag-zones", "json"))
    assert [r[0] for r in doc["rows"]] == list(range(6, 20))
    strata = emit_table("f-strata", "csv").splitlines()
    assert strata[1].startswith("4,5/8") and strata[-1].startswith("13,3729/4096")
    with pytest.raises(KeyError):
        emit_table("nope")


def test_orbit_summary():
    s = orbit_summary(27)
    assert s["odd_steps"] == 41 and s["peak"] == 3077
    assert orbit_summary(8)["leading_halvings"] == 3


def test_exit_codes(capsys, tmp_path):
    assert main(["verify", "strata"]) == 0
    assert main(["verify", "gain-series"]) == 1
    assert main(["verify", "nope"]) == 2
    assert main(["table", "nope"]) == 2
    assert main(["bogus"]) == 2
    out = tmp_path / "s.json"
    assert main(["verify", "--suite", "strata", "--format", "json", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["suite"] == "strata"
    assert main(["orbit", "27"]) == 0
    capsys.readouterr()
