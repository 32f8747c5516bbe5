import pytest

_LINES: list[str] = []


@pytest.fixture
def record():
    """Print and keep one PASS/FAIL line; returns the verdict."""

    def _record(label, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}"
        print(line)
        _LINES.append(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=_order):
            terminalreporter.write_line(line)


def _order(line: str):
    label = line.split("criterion ", 1)[1].split(":", 1)[0]
    head = label.split()[0]
    return (int(head) if head.isdigit() else 99, label)
