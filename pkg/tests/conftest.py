import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion id -> [outcome, detail]; filled by test_acceptance.py and the report hook
ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(cid): test implements one acceptance criterion")


@pytest.fixture
def detail(request):
    """Record a one-line detail string for the current acceptance criterion."""
    cid = request.node.get_closest_marker("acceptance").args[0]
    ACCEPTANCE.setdefault(cid, ["FAIL", ""])

    def note(text):
        ACCEPTANCE[cid][1] = text
    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when != "call":
        return
    entry = ACCEPTANCE.setdefault(mark.args[0], ["FAIL", ""])
    entry[0] = "PASS" if rep.passed else "FAIL"
    if rep.failed and not entry[1]:
        entry[1] = str(call.excinfo.value).splitlines()[0][:160] if call.excinfo else "error"


def _key(cid):
    num = "".join(ch for ch in cid if ch.isdigit())
    return int(num), cid


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=_key):
        outcome, text = ACCEPTANCE[cid]
        terminalreporter.write_line(f"ACCEPTANCE {cid} {outcome} {text}")
