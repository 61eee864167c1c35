import pytest
from hypothesis import settings

# timings are meaningless next to long numba runs on a shared CPU
settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one pass/fail line for an acceptance criterion and return whether it passed."""

    def record(label: str, passed: bool, detail: str = "") -> bool:
        line = f"{'PASS' if passed else 'FAIL'}  {label}" + (f"  [{detail}]" if detail else "")
        _CRITERIA.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
