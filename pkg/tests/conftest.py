import pytest

# criterion number -> (title, passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}")


@pytest.fixture
def record():
    def _record(n, title, ok, detail):
        ACCEPTANCE[n] = (title, bool(ok), detail)
        print(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}")
        return bool(ok)

    return _record
