import contextlib

import pytest

_ACCEPTANCE: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance criterion as pass/fail for the terminal summary."""

    @contextlib.contextmanager
    def record(number: int, title: str):
        info = {"detail": ""}
        try:
            yield info
        except BaseException:
            _ACCEPTANCE.append((number, title, False, info["detail"]))
            print(f"criterion {number:2d} FAIL  {title}  {info['detail']}")
            raise
        _ACCEPTANCE.append((number, title, True, info["detail"]))
        print(f"criterion {number:2d} PASS  {title}  {info['detail']}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"{number:2d}. {'PASS' if ok else 'FAIL'}  {title}  {detail}")
