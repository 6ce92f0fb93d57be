import pytest

_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or report.failed:
        prev = _acceptance.get(number, (title, True, 0.0))
        _acceptance[number] = (title, prev[1] and report.passed, prev[2] + report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, ok, seconds = _acceptance[number]
        terminalreporter.write_line(
            f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}  ({seconds:.2f} s)")
