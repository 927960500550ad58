import os

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

_results = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        cid, title = marker.args
        detail = dict(item.user_properties).get("detail", "")
        _results[cid] = (title, "PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_results, key=lambda c: int(c[1:])):
        title, status, detail = _results[cid]
        terminalreporter.write_line(f"{cid:<4}{status}  {title}" + (f"  [{detail}]" if detail else ""))
    out = os.environ.get("BBMB_TTCD_ACCEPTANCE_LOG")
    if out:
        with open(out, "w") as fh:
            for cid in sorted(_results, key=lambda c: int(c[1:])):
                title, status, detail = _results[cid]
                fh.write(f"{cid} {status} {title} {detail}\n")
