import numpy as np
import pytest

from textcgr.config import RunConfig
from textcgr.corpus import build_images
from textcgr.synthetic import federalist_like_corpus, held_out_author_fixture


@pytest.fixture(scope="session")
def fed_corpus():
    return federalist_like_corpus(seed=7)


@pytest.fixture(scope="session")
def small_config():
    return RunConfig(k=5, chunk_size=600, seed=42).validate()


@pytest.fixture(scope="session")
def fed_images(fed_corpus, small_config):
    return build_images(fed_corpus, small_config)


@pytest.fixture(scope="session")
def heldout_fixture():
    return held_out_author_fixture(seed=11)


def write_tree(root, corpus):
    """Materialize an in-memory corpus as an author-per-subdirectory tree."""
    for doc in corpus.documents:
        author, _, name = doc.doc_id.partition("/")
        d = root / author
        d.mkdir(exist_ok=True, parents=True)
        (d / name).write_text(doc.text, encoding="utf-8")
    return root


@pytest.fixture()
def rng():
    return np.random.default_rng(20240810)
