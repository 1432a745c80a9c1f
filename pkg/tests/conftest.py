import pytest

from sudlercert.ffamily import FULL_PARAMS, build_family

_CRITERIA = {}


def record(n: int, ok: bool, detail: str) -> None:
    """Print and remember one acceptance line."""
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    _CRITERIA[n] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[n])


@pytest.fixture(scope="session")
def full_family():
    """F_c for all 3^9 patterns at (20, 10000, 40); about ten seconds."""
    return build_family(params=FULL_PARAMS)
