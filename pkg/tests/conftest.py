import pytest

_ACCEPTANCE: dict[int, str] = {}


class Recorder:
    def __call__(self, number: int, title: str, ok: bool, detail: str = "") -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {title}: {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return ok


@pytest.fixture
def record():
    return Recorder()


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
