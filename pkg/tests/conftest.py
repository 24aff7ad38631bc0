import pytest

from momentaudit.lexicon import VerbLexicon
from momentaudit.synthetic import BiasedCorpusSpec, make_biased_corpus

_acceptance_results = []


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "setup" and report.skipped:
        _acceptance_results.append((name, "SKIP"))
    elif report.when == "call":
        if report.skipped:
            outcome = "SKIP"
        else:
            outcome = "PASS" if report.passed else "FAIL"
        _acceptance_results.append((name, outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance_results:
        terminalreporter.write_line(f"{outcome}: {name}")


@pytest.fixture(scope="session")
def lex():
    return VerbLexicon.load()


@pytest.fixture(scope="session")
def synth_corpus():
    """The bundled synthetic verb-biased corpus at acceptance scale."""
    return make_biased_corpus(BiasedCorpusSpec(n_train=2000, n_test=500, rng_seed=0))


@pytest.fixture(scope="session")
def small_synth_corpus():
    """A smaller split for unit tests that do not need acceptance scale."""
    return make_biased_corpus(BiasedCorpusSpec(n_train=400, n_test=100, rng_seed=7))
