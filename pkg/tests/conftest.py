import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n, title = marker.args
    status = _criteria.setdefault(n, [title, "PASS", []])
    if rep.failed:
        status[1] = "FAIL"
        if hasattr(rep.longrepr, "reprcrash"):
            status[2].append(rep.longrepr.reprcrash.message.splitlines()[0])
    if rep.when == "call" and not rep.failed:
        status[2].extend(v for k, v in item.user_properties if k == "detail")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, status, detail = _criteria[n]
        line = f"[{status}] criterion {n}: {title}"
        if detail:
            line += " -- " + "; ".join(detail)
        terminalreporter.write_line(line)
