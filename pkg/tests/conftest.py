import re

_CRITERION = re.compile(r"test_criterion_(\d+[a-z]?)_")
_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance criterion check")


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if not match:
        return
    if report.when == "call" or report.outcome == "failed":
        key = match.group(1)
        ok = _results.get(key, True) and report.outcome == "passed"
        _results[key] = ok


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_results, key=lambda k: (int(re.match(r"\d+", k).group()), k)):
        terminalreporter.write_line(f"criterion {key}: {'PASS' if _results[key] else 'FAIL'}")
