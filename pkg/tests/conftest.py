from collections import defaultdict

import pytest

CRITERIA = {
    1: "Ber/G/1 peak and average vs simulation, 12 stable specs",
    2: "Ber/G/1 with vacations: peak, A_ave <= A_p, unit vacation, published bounds",
    3: "vacation-law sweep: ordering and monotonicity in the mean, under 60 s",
    4: "preemptive LCFS vs simulation, 8 specs, unit-service identity",
    5: "infinite-server drop time vs Monte Carlo, average vs simulation, closed case",
    6: "zero trace-invariant violations on every simulated trace",
    7: "byte-identical sweep CSV on rerun",
}

_outcomes = defaultdict(list)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _outcomes[marker.args[0]].append((item.name, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_outcomes):
        results = _outcomes[n]
        failed = [name for name, ok in results if not ok]
        verdict = "FAIL" if failed else "PASS"
        line = f"{verdict} criterion {n}: {CRITERIA.get(n, '')} ({len(results) - len(failed)}/{len(results)} checks)"
        if failed:
            line += " failed: " + ", ".join(failed)
        tr.write_line(line)
