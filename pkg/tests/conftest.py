import warnings

import pytest


def pytest_configure(config):
    config._acceptance = {}


@pytest.fixture
def acceptance(request):
    """Record one criterion outcome, then assert it."""
    store = request.config._acceptance

    def report(number: int, passed: bool, detail: str) -> None:
        store[number] = (bool(passed), detail)
        assert passed, f"criterion {number}: {detail}"

    return report


@pytest.fixture(autouse=True)
def _quiet_hypothesis_readings():
    # the two fast-hypothesis readings disagree for some connectives by design
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*readings of the fast-convergence hypothesis.*")
        yield


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = getattr(config, "_acceptance", {})
    if not store:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(store):
        passed, detail = store[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {number:2d}: {detail}")
