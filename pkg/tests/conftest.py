import pytest

from markovup import ExampleLaw, audit

ACCEPTANCE = []


def record(criterion: str, ok: bool, detail: str = "") -> bool:
    ACCEPTANCE.append((criterion, ok, detail))
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {criterion}  {detail}")


@pytest.fixture(scope="session")
def example_law():
    return ExampleLaw()


@pytest.fixture(scope="session")
def example_profile(example_law):
    return audit(example_law)


@pytest.fixture(scope="session")
def truncated_law():
    return ExampleLaw(ceiling=6)


@pytest.fixture(scope="session")
def truncated_profile(truncated_law):
    return audit(truncated_law)
