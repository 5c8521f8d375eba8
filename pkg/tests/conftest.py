from pathlib import Path

import pytest

from litaug import MockGateway, load_corpus, load_dataset, load_vocabulary
from litaug.config import load_config

FIXTURES = Path(__file__).parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def pipeline_config():
    return load_config(FIXTURES / "config.toml")


@pytest.fixture(scope="session")
def fixture_vocab():
    return load_vocabulary(FIXTURES / "vocab.tsv")


@pytest.fixture(scope="session")
def fixture_dataset():
    return load_dataset(FIXTURES / "dataset.csv")


@pytest.fixture()
def fixture_corpus():
    return load_corpus(FIXTURES / "corpus.jsonl")


@pytest.fixture(scope="session")
def mock_gateway():
    return MockGateway(seed=7, embedding_dim=24)
