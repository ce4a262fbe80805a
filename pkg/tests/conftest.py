import pytest

_acceptance = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        detail = getattr(item, "criterion_detail", "")
        _acceptance.append((marker.args[0], marker.args[1], rep.outcome, detail))


@pytest.fixture
def detail(request):
    """Attach a measured-values string to the acceptance line of the running test."""
    def record(text):
        request.node.criterion_detail = text
    return record


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    words = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}
    for number, title, outcome, detail in sorted(_acceptance, key=lambda r: (r[0], r[1])):
        line = f"[{words.get(outcome, outcome.upper())}] {number} {title}"
        terminalreporter.write_line(line + (f": {detail}" if detail else ""))
