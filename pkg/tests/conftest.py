"""Collects outcomes of tests marked ``criterion`` and prints one line per criterion."""

import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, title = mark.args
            _CRITERIA[item.nodeid] = {"number": number, "title": title, "outcome": "NOT RUN", "detail": ""}


def pytest_runtest_logreport(report):
    entry = _CRITERIA.get(report.nodeid)
    if entry is None:
        return
    details = [v for k, v in report.user_properties if k == "detail"]
    if details:
        entry["detail"] = "; ".join(details)
    if report.failed:
        entry["outcome"] = "FAIL"
    elif report.when == "call" and entry["outcome"] != "FAIL":
        entry["outcome"] = "SKIP" if report.skipped else "PASS"
    elif report.skipped and entry["outcome"] == "NOT RUN":
        entry["outcome"] = "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for entry in sorted(_CRITERIA.values(), key=lambda e: e["number"]):
        line = f"[{entry['outcome']}] criterion {entry['number']:>2}: {entry['title']}"
        if entry["detail"]:
            line += f"  ({entry['detail']})"
        tr.write_line(line)
    passed = sum(e["outcome"] == "PASS" for e in _CRITERIA.values())
    tr.write_line(f"{passed}/{len(_CRITERIA)} acceptance criteria passed")


@pytest.fixture
def detail(record_property):
    """``detail("...")`` attaches a measured value to the criterion summary line."""
    return lambda text: record_property("detail", text)
