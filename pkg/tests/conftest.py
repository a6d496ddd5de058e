import pytest

_criteria = {}


def pytest_runtest_logreport(report):
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number = getattr(report, "criterion", None)
        if number is not None:
            title, failed, duration = _criteria.get(number, (report.criterion_title, False, 0.0))
            # a parametrized criterion passes only if every case passes
            _criteria[number] = (title, failed or report.outcome != "passed",
                                 duration + report.duration)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report.criterion, report.criterion_title = marker.args


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, failed, duration = _criteria[number]
        status = "FAIL" if failed else "PASS"
        terminalreporter.write_line(f"criterion {number}: {status}  {title}  ({duration:.1f}s)")
