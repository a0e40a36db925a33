import pytest

ACCEPTANCE_TITLES = {
    1: "CPTP trajectory suite",
    2: "thermal fixed point",
    3: "work-definition equivalence",
    4: "quasistatic Otto efficiency",
    5: "Carnot bound and Carnot >= Otto",
    6: "monotonicity in wall speed",
    7: "bath-target contrast",
    8: "asymmetry surface shape",
    9: "eigenbasis cross-check",
    10: "integrator convergence",
}

_results: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)`` for the end-of-run summary."""

    def record(number: int, passed: bool, detail: str):
        _results[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    ran = [n for n in ACCEPTANCE_TITLES if n in _results]
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in ACCEPTANCE_TITLES.items():
        if n in _results:
            ok, detail = _results[n]
            status = "PASS" if ok else "FAIL"
        else:
            status, detail = "----", "not run in this session"
        terminalreporter.write_line(f"criterion {n:>2} {status}  {title}: {detail}")
