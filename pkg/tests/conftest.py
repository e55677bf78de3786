import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_corpus():
    from strokekit.synth import make_corpus

    return make_corpus(30, n_users=6, seed=11)


@pytest.fixture(scope="session")
def bundle(small_corpus):
    from strokekit.pipeline import train_bundle

    return train_bundle(small_corpus, augment=False)


# -- acceptance reporting ------------------------------------------------------

_CRITERIA: list[str] = []


class _Criterion:
    def __init__(self, number, title):
        self.number, self.title = number, title
        self.details: list[str] = []

    def note(self, text):
        self.details.append(str(text))

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        detail = f" [{'; '.join(self.details)}]" if self.details else ""
        line = f"{status} criterion {self.number}: {self.title}{detail}"
        _CRITERIA.append(line)
        print(line)
        return False


@pytest.fixture
def criterion():
    """``with criterion(n, title) as c:`` records one PASS/FAIL line for criterion ``n``."""
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
