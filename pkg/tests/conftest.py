import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

CRITERIA = pytest.StashKey[list]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, summary): numbered acceptance criterion")
    config.stash[CRITERIA] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    number, summary = mark.args
    status = "PASS" if rep.passed else "FAIL"
    item.config.stash[CRITERIA].append((number, f"criterion {number:>2}: {status}  {summary}"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = sorted(config.stash.get(CRITERIA, []))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
