"""Per-criterion PASS/FAIL report for the acceptance suite.

Tests marked ``@pytest.mark.criterion(n)`` are grouped by ``n``; a criterion
passes when every test in its group passes. Values recorded with
``record_property`` are echoed next to the verdict.
"""

from collections import defaultdict

_results = defaultdict(list)
_details = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            item.user_properties.append(("criterion", marker.args[0]))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    n = props["criterion"]
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _results[n].append(report.passed)
        _details[n].extend(f"{k}={v}" for k, v in report.user_properties if k != "criterion")


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        verdict = "PASS" if all(_results[n]) else "FAIL"
        extra = " ".join(_details[n])
        terminalreporter.write_line(f"criterion {n}: {verdict}" + (f"  {extra}" if extra else ""))
