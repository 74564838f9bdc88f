import pytest
from hypothesis import settings

settings.register_profile("ci", deadline=None, print_blob=True)
settings.load_profile("ci")

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed and not rep.skipped):
        return
    n, title = mark.args
    ok = rep.passed and not hasattr(rep, "wasxfail")
    if rep.skipped and not hasattr(rep, "wasxfail"):
        status = "SKIP"
    else:
        status = "PASS" if ok else "FAIL"
    prev = _results.get((n, title))
    if prev in ("FAIL", "SKIP") and status == "PASS":
        return
    _results[(n, title)] = status


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for (n, title), status in sorted(_results.items()):
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {title}")
