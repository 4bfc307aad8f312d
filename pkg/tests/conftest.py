import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

# criterion number -> {"title": str, "outcomes": [bool], "details": [str]}
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (report.when != "call" and not report.failed):
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "outcomes": [], "details": []})
    entry["outcomes"].append(report.passed)
    entry["details"].extend(str(v) for k, v in report.user_properties if k == "detail")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        ok = all(entry["outcomes"])
        checks = f"{sum(entry['outcomes'])}/{len(entry['outcomes'])} checks"
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {entry['title']} ({checks})"
        if entry["details"]:
            line += "  " + "; ".join(entry["details"])
        terminalreporter.write_line(line)
