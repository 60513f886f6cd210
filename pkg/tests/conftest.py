"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_criteria: dict[str, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(cid, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    cid, title = marker.args
    entry = _criteria.setdefault(cid, {"title": title, "passed": True, "detail": ""})
    entry["passed"] &= report.passed
    detail = dict(item.user_properties).get("measured")
    if detail:
        entry["detail"] = detail


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_criteria):
        e = _criteria[cid]
        status = "PASS" if e["passed"] else "FAIL"
        line = f"{status}  {cid}  {e['title']}"
        if e["detail"]:
            line += f"  [{e['detail']}]"
        terminalreporter.write_line(line)
