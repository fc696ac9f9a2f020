import pathlib
import sys

import pytest

TESTS_DIR = pathlib.Path(__file__).parent
FIXTURES = TESTS_DIR / "fixtures"

sys.path.insert(0, str(TESTS_DIR))


@pytest.fixture(scope="session")
def fixtures_dir() -> pathlib.Path:
    return FIXTURES


def load_fixture(relpath: str) -> str:
    return (FIXTURES / relpath).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def load():
    return load_fixture


def pytest_terminal_summary(terminalreporter):
    """Echo the release-gate verdict lines past output capture."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "_VERDICTS", None)
    if lines:
        terminalreporter.section("release gate")
        for line in lines:
            terminalreporter.write_line(line)
