"""Collects acceptance-criterion outcomes and prints one line per criterion at the end of the run."""

import pytest

CRITERIA = {
    1: "reference table reproduction",
    2: "mean photon conservation",
    3: "analytic and Fock Q routes agree",
    4: "Q normalization by quadrature",
    5: "exact marginal identity",
    6: "Bell violation for m = 3 and m = 5",
    7: "separable bound for product coherent states",
    8: "vacuum anchors",
    9: "robustness to detector and transmission loss",
    10: "violation half-width in the displacement phase",
    11: "photon distribution concentrated on the edges",
    12: "transmission loss equals the Gaussian integral",
}

_results: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number): test belongs to the numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not marker.args:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        details = [v for k, v in item.user_properties if k == "detail"]
        _results.setdefault(marker.args[0], []).append((item.name, report.outcome, details))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number, title in CRITERIA.items():
        runs = _results.get(number)
        if not runs:
            tr.write_line(f"criterion {number:2d} NOT RUN  {title}")
            continue
        failed = [name for name, outcome, _ in runs if outcome == "failed"]
        skipped = all(outcome == "skipped" for _, outcome, _ in runs)
        status = "SKIP" if skipped else ("FAIL" if failed else "PASS")
        notes = "; ".join(dict.fromkeys(d for _, _, details in runs for d in details))
        line = f"criterion {number:2d} {status:8s} {title}"
        if failed:
            line += f" | failing: {', '.join(failed)}"
        if notes:
            line += f" | {notes}"
        tr.write_line(line)
