"""Acceptance summary: one PASS/FAIL line per criterion.

A criterion passes when every test carrying its marker passed.  An expected
failure (strict xfail) counts as FAIL.
"""

import pytest

_RESULTS = {}
_TITLES = {}


def pytest_runtest_logreport(report):
    if not hasattr(report, "criterion"):
        return
    num, title = report.criterion
    _TITLES[num] = title
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        if hasattr(report, "wasxfail"):
            outcome = "xfailed" if report.skipped else "xpassed"
        else:
            outcome = report.outcome
        _RESULTS.setdefault(num, []).append((report.nodeid.split("::")[-1], outcome))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    rep = (yield).get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_RESULTS):
        parts = _RESULTS[num]
        ok = all(o == "passed" for _, o in parts)
        tr.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {_TITLES[num]}")
        if not ok:
            for name, o in parts:
                if o != "passed":
                    tr.write_line(f"              {o}: {name}")
