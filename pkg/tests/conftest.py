import pytest

from matcare.emr.schema import default_schema
from matcare.lexicon import default_lexicon
from matcare.llm.backend import MockLlmBackend
from matcare.retrieval import default_corpus, index_corpus
from matcare.rules import default_rules


@pytest.fixture(scope="session")
def schema():
    return default_schema()


@pytest.fixture(scope="session")
def lexicon():
    return default_lexicon()


@pytest.fixture(scope="session")
def rules():
    return default_rules()


@pytest.fixture(scope="session")
def guideline_index():
    return index_corpus(default_corpus())


@pytest.fixture()
def mock_backend(schema, lexicon):
    return MockLlmBackend.with_default_fixtures(schema, lexicon)
