import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_criteria: dict[int, tuple[str, list[str], list[str]]] = {}


@pytest.fixture
def note(request):
    """Attach an observed value to the criterion summary line."""
    def add(text: str) -> None:
        request.node.user_properties.append(("note", text))
    return add


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, text = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        entry = _criteria.setdefault(number, (text, [], []))
        entry[1].append(rep.outcome)
        entry[2].extend(v for k, v in item.user_properties if k == "note")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        text, outcomes, notes = _criteria[number]
        ok = outcomes and all(o == "passed" for o in outcomes)
        detail = f" [{'; '.join(notes)}]" if notes else ""
        terminalreporter.write_line(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {text}{detail}")
