import sys
from pathlib import Path

# tests import the reference oracles as a plain module
sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion number and summary")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, text = mark.args
    prev = _CRITERIA.get(n, (text, True))
    if call.excinfo is not None and call.when in ("setup", "call"):
        _CRITERIA[n] = (text, False)
    else:
        _CRITERIA.setdefault(n, prev)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        text, ok = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {text}")
