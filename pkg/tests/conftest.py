import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> list of (passed, test id, detail lines)
_RESULTS: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion covered by the test")


@pytest.fixture
def report(request):
    """Attach a detail line to the acceptance summary for this test."""

    def add(text: str) -> None:
        request.node.user_properties.append(("detail", text))

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        details = [v for k, v in item.user_properties if k == "detail"]
        _RESULTS.setdefault(marker.args[0], []).append((rep.passed, item.name, details))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_RESULTS):
        runs = _RESULTS[num]
        ok = all(p for p, _, _ in runs)
        failed = [name for p, name, _ in runs if not p]
        details = "; ".join(d for _, _, ds in runs for d in ds)
        line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += f"  failing: {', '.join(failed)}"
        if details:
            line += f"  [{details}]"
        terminalreporter.write_line(line)
