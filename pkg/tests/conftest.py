import logging

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    derandomize=True,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)`` for the closing summary."""

    def record(num: int, passed: bool, detail: str) -> None:
        _ACCEPTANCE[num] = (bool(passed), detail)
        print(f"criterion {num}: {'PASS' if passed else 'FAIL'} - {detail}")

    return record


@pytest.fixture(autouse=True)
def _quiet_logs():
    logging.getLogger("lanetopo").setLevel(logging.CRITICAL)
    yield
    logging.getLogger("lanetopo").setLevel(logging.NOTSET)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
