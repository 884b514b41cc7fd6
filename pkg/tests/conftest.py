import time

import pytest

from dirsmooth import sim_bench

_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def desk_study():
    """Desk-scale study (20 simulations, N in {200, 400}, all orders) and its runtime."""
    start = time.perf_counter()
    result = sim_bench.run_study(sim_bench.StudyConfig())
    return result, time.perf_counter() - start


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")

    def key(name):
        return int(name.split("_")[2])

    for name in sorted(_ACCEPTANCE, key=key):
        status = "PASS" if _ACCEPTANCE[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {key(name):>2}: {status}  {name}")
