import sys
from pathlib import Path

import pytest

from codiag.generate import random_corpus
from codiag.models import blind_spot_plant, complementary_sites_plant

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parents[1]
MODELS = ROOT / "models"
CORPUS_SIZE = 200

_acceptance_lines = []


@pytest.fixture(scope="session")
def plant1():
    return complementary_sites_plant()


@pytest.fixture(scope="session")
def plant4():
    return blind_spot_plant()


@pytest.fixture(scope="session")
def corpus_one_site():
    return random_corpus(CORPUS_SIZE, sites=1, seed=101)


@pytest.fixture(scope="session")
def corpus_two_sites():
    return random_corpus(CORPUS_SIZE, sites=2, seed=202)


@pytest.fixture(scope="session")
def acceptance_log():
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
