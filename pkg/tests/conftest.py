import pytest

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, label): acceptance criterion id")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, label = marker.args
    failed = report.failed
    if report.when == "call" or failed:
        prev = _outcomes.get(number, (label, True, ""))
        detail = getattr(item, "criterion_detail", "")
        _outcomes[number] = (label, prev[1] and not failed and not report.skipped, detail)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        label, ok, detail = _outcomes[number]
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {label}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
