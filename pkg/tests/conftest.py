import contextlib
import time

import pytest

_ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


class _Criterion:
    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.detail = ""


@pytest.fixture
def criterion():
    """Context manager recording a PASS/FAIL line for an acceptance criterion."""

    @contextlib.contextmanager
    def _record(number: int, title: str):
        c = _Criterion(number, title)
        t0 = time.perf_counter()
        try:
            yield c
        except BaseException as exc:
            detail = c.detail or f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
            _ACCEPTANCE[number] = ("FAIL", title, f"{detail} [{time.perf_counter() - t0:.2f}s]")
            raise
        _ACCEPTANCE[number] = ("PASS", title, f"{c.detail} [{time.perf_counter() - t0:.2f}s]")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        status, title, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2} {status}: {title} -- {detail}")
