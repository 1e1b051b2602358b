import pytest

# filled by test_acceptance; one (name, passed, detail) tuple per criterion
ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion(request):
    """Record a criterion's verdict, then assert it."""

    def record(name: str, passed: bool, detail: str = ""):
        ACCEPTANCE.append((name, bool(passed), detail))
        assert passed, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
