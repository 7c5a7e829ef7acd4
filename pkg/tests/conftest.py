import io
from importlib import resources

import pytest

from textatlas.corpus import Corpus, TokenizerConfig, ingest_corpus


def demo_corpus_text() -> str:
    ref = resources.files("textatlas.data").joinpath("demo_corpus.jsonl")
    return ref.read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def demo_corpus() -> Corpus:
    return ingest_corpus(io.StringIO(demo_corpus_text()), TokenizerConfig())


@pytest.fixture(scope="session")
def tiny_corpus() -> Corpus:
    lines = [
        '{"id": "d1", "title": "Apples", "body": "Apple apple pear. The apple pie."}',
        '{"id": "d2", "title": "Pears", "body": "Pear tart with pear syrup and honey."}',
        '{"id": "d3", "title": "Mixed", "body": "Apple pear honey cake, honey cake."}',
    ]
    return ingest_corpus(lines, TokenizerConfig())
