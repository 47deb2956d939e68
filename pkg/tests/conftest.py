import pytest
from hypothesis import settings

from pmg.lexicon import load_lexicon

settings.register_profile("ci", deadline=None, max_examples=100)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def lex():
    return load_lexicon("fixture")


@pytest.fixture(scope="session")
def lex3():
    return load_lexicon("lexicon3")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
