import pytest

ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture
def record_criterion():
    def record(cid: str, ok: bool, detail: str) -> bool:
        line = f"criterion {cid}: {'PASS' if ok else 'FAIL'} {detail}"
        ACCEPTANCE.append(line)
        print(line)
        return ok

    return record
