import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("ci", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance_log():
    def log(n: int, subs):
        bad = [s for s in subs if not s[1]]
        status = "PASS" if not bad else "FAIL"
        detail = f"{len(subs) - len(bad)}/{len(subs)} sub-checks"
        if bad:
            detail += "; red: " + ", ".join(s[0] for s in bad)
        line = f"CRITERION {n:2d}: {status} ({detail})"
        _LINES[n] = line
        print(line)
    return log


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_LINES):
        terminalreporter.write_line(_LINES[n])
