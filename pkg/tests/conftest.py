import pytest

from helpers import DATA

from delexi.annotation import read_tagged


@pytest.fixture(scope="session")
def sq_pairs():
    with open(DATA / "sq_a380.jsonl", encoding="utf-8") as fh:
        return {p.id: p for p in read_tagged(fh)}


@pytest.fixture
def sq_pair(sq_pairs):
    return sq_pairs["sq-a380"]


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    results = item.config._criteria
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
        results[number] = (status, title)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config._criteria
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        status, title = results[number]
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}")
