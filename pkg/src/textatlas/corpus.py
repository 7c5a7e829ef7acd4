"""Corpus ingestion: tokenization, vocabulary building, and corpus statistics.

Input is line-delimited JSON, one record per line, with fields ``id``,
``title``, ``body``, and optionally ``tokens`` (a list of already-normalized
token strings from an external pipeline, which bypasses the built-in
tokenizer). Ingestion is deterministic for identical input and config.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import IngestError
from .stem import stem

_TOKEN_RE = re.compile(r"\w+(?:'\w+)*")


def _load_stopword_file(path: Path | str) -> frozenset[str]:
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


def default_stopwords() -> frozenset[str]:
    ref = resources.files("textatlas.data").joinpath("stopwords.txt")
    words = set()
    for line in ref.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


@dataclass(frozen=True)
class TokenizerConfig:
    """Normalization knobs: stopword file, minimum token length, stemmer toggle."""

    stopwords_path: str | None = None
    min_token_len: int = 2
    stemmer: bool = True

    def stopwords(self) -> frozenset[str]:
        if self.stopwords_path is None:
            return default_stopwords()
        return _load_stopword_file(self.stopwords_path)

    def digest(self) -> dict:
        return {
            "stopwords_path": self.stopwords_path,
            "min_token_len": self.min_token_len,
            "stemmer": self.stemmer,
        }


def tokenize(body: str, config: TokenizerConfig,
             stopwords: frozenset[str] | None = None) -> list[tuple[str, int, int]]:
    """Split ``body`` into lowercased word tokens with [start, end) offsets.

    Stopwords, pure-digit tokens, and tokens shorter than the configured
    minimum are removed. Offsets index Unicode scalar values of the original
    body, so ``body[start:end].lower() == token`` for every returned token.
    """
    if stopwords is None:
        stopwords = config.stopwords()
    out = []
    for m in _TOKEN_RE.finditer(body):
        token = m.group(0).lower()
        if len(token) < config.min_token_len:
            continue
        if token.isdigit():
            continue
        if token in stopwords:
            continue
        out.append((token, m.start(), m.end()))
    return out


@dataclass
class Document:
    """One corpus record: raw text plus its normalized token sequence.

    ``tokens`` holds vocabulary ids in reading order. ``token_spans`` aligns
    1:1 with ``tokens`` and indexes the original body; it is None for records
    ingested with pre-supplied tokens (offsets unknown). Documents whose token
    sequence is empty after filtering stay readable but are excluded from the
    text layer of the model.
    """

    id: str
    title: str
    body: str
    tokens: list[int] = field(default_factory=list)
    token_spans: list[tuple[int, int]] | None = None

    @property
    def in_model(self) -> bool:
        return len(self.tokens) > 0

    def __len__(self) -> int:
        return len(self.tokens)


class Vocabulary:
    """Ordered set of normalized terms with corpus frequencies."""

    def __init__(self, terms: list[str], frequency: list[int]):
        if len(terms) != len(frequency):
            raise ValueError("terms and frequency length mismatch")
        self.terms = terms
        self.frequency = frequency
        self.index: dict[str, int] = {t: i for i, t in enumerate(terms)}
        if len(self.index) != len(terms):
            raise ValueError("vocabulary terms must be unique")
        self._stem_index: dict[str, list[int]] | None = None

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index

    def id_of(self, term: str) -> int:
        return self.index[term]

    def stem_index(self) -> dict[str, list[int]]:
        """stem -> sorted vocabulary ids whose term maps to that stem."""
        if self._stem_index is None:
            idx: dict[str, list[int]] = {}
            for word_id, term in enumerate(self.terms):
                idx.setdefault(stem(term), []).append(word_id)
            self._stem_index = idx
        return self._stem_index

    def to_json(self) -> dict:
        return {"terms": self.terms, "frequency": self.frequency}

    @classmethod
    def from_json(cls, payload: dict) -> "Vocabulary":
        return cls(list(payload["terms"]), list(payload["frequency"]))


@dataclass(frozen=True)
class CorpusStats:
    n_documents: int
    n_words: int
    n_text_edges: int
    mean_doc_length: float

    def to_json(self) -> dict:
        return {
            "n_documents": self.n_documents,
            "n_words": self.n_words,
            "n_text_edges": self.n_text_edges,
            "mean_doc_length": self.mean_doc_length,
        }


@dataclass
class Corpus:
    """Ingestion result: vocabulary, documents in input order, and stats."""

    vocabulary: Vocabulary
    documents: list[Document]
    stats: CorpusStats

    def __post_init__(self):
        self.by_id: dict[str, Document] = {d.id: d for d in self.documents}

    def document(self, doc_id: str) -> Document:
        return self.by_id[doc_id]

    @property
    def model_documents(self) -> list[Document]:
        return [d for d in self.documents if d.in_model]


def _iter_lines(source: str | Path | IO[str] | Iterable[str]) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from fh
    else:
        yield from source


def ingest_corpus(source: str | Path | IO[str] | Iterable[str],
                  config: TokenizerConfig | None = None) -> Corpus:
    """Read line-delimited records, tokenize, and build vocabulary and stats.

    Records carrying a ``tokens`` array bypass the tokenizer: the supplied
    strings are interned verbatim (no offsets). Raises IngestError on a
    duplicate id (naming the id) or a malformed line (naming the line number).
    """
    config = config or TokenizerConfig()
    stopwords = config.stopwords()

    terms: list[str] = []
    index: dict[str, int] = {}
    frequency: list[int] = []
    documents: list[Document] = []
    seen_ids: set[str] = set()

    def intern(term: str) -> int:
        word_id = index.get(term)
        if word_id is None:
            word_id = len(terms)
            index[term] = word_id
            terms.append(term)
            frequency.append(0)
        frequency[word_id] += 1
        return word_id

    for lineno, line in enumerate(_iter_lines(source), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(record, dict):
            raise IngestError(f"line {lineno}: record must be an object")
        try:
            doc_id = record["id"]
            body = record["body"]
        except KeyError as exc:
            raise IngestError(f"line {lineno}: missing field {exc.args[0]!r}") from exc
        title = record.get("title", "")
        if not isinstance(doc_id, str) or not doc_id:
            raise IngestError(f"line {lineno}: id must be a non-empty string")
        if not isinstance(title, str) or not isinstance(body, str):
            raise IngestError(f"line {lineno}: title and body must be strings")
        if doc_id in seen_ids:
            raise IngestError(f"duplicate document id {doc_id!r} (line {lineno})")
        seen_ids.add(doc_id)

        pre_tokens = record.get("tokens")
        if pre_tokens is not None:
            if not isinstance(pre_tokens, list) or not all(
                isinstance(t, str) and t for t in pre_tokens
            ):
                raise IngestError(
                    f"line {lineno}: tokens must be a list of non-empty strings"
                )
            token_ids = [intern(t) for t in pre_tokens]
            spans = None
        else:
            tokenized = tokenize(body, config, stopwords)
            token_ids = [intern(t) for t, _, _ in tokenized]
            spans = [(s, e) for _, s, e in tokenized]
        documents.append(Document(doc_id, title, body, token_ids, spans))

    n_text_edges = sum(len(d.tokens) for d in documents)
    n_documents = len(documents)
    stats = CorpusStats(
        n_documents=n_documents,
        n_words=len(terms),
        n_text_edges=n_text_edges,
        mean_doc_length=(n_text_edges / n_documents) if n_documents else 0.0,
    )
    assert sum(frequency) == n_text_edges
    return Corpus(Vocabulary(terms, frequency), documents, stats)


@dataclass(frozen=True)
class StemCandidate:
    """One keyword candidate: a stem, the surface forms that produced it in
    the passage, and every vocabulary id whose term shares the stem."""

    stem: str
    surface_forms: tuple[str, ...]
    word_ids: tuple[int, ...]


def stem_candidates(passage: str, config: TokenizerConfig,
                    vocabulary: Vocabulary) -> list[StemCandidate]:
    """Keyword candidates for a highlighted passage.

    Tokenizes the passage, stems each surviving token, and collapses
    duplicates preserving first occurrence. Each candidate carries the
    vocabulary ids whose terms stem to the same value (computed by stemming
    the vocabulary once); the list may be empty for stems the corpus never
    produced.
    """
    stem_to_ids = vocabulary.stem_index() if config.stemmer else None
    order: list[str] = []
    surfaces: dict[str, list[str]] = {}
    for token, _, _ in tokenize(passage, config):
        key = stem(token) if config.stemmer else token
        if key not in surfaces:
            surfaces[key] = []
            order.append(key)
        if token not in surfaces[key]:
            surfaces[key].append(token)
    out = []
    for key in order:
        if stem_to_ids is not None:
            ids = tuple(stem_to_ids.get(key, ()))
        else:
            ids = (vocabulary.index[key],) if key in vocabulary.index else ()
        out.append(StemCandidate(key, tuple(surfaces[key]), ids))
    return out


def save_corpus(corpus: Corpus, directory: str | Path) -> None:
    """Write documents.jsonl and vocabulary.json under ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "documents.jsonl", "w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            record = {
                "id": doc.id,
                "title": doc.title,
                "body": doc.body,
                "tokens": doc.tokens,
                "token_spans": doc.token_spans,
            }
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
    payload = {"vocabulary": corpus.vocabulary.to_json(), "stats": corpus.stats.to_json()}
    with open(directory / "vocabulary.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, sort_keys=True, indent=1)


def load_corpus(directory: str | Path) -> Corpus:
    directory = Path(directory)
    with open(directory / "vocabulary.json", "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    vocabulary = Vocabulary.from_json(payload["vocabulary"])
    documents = []
    with open(directory / "documents.jsonl", "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            spans = rec["token_spans"]
            documents.append(Document(
                rec["id"], rec["title"], rec["body"], rec["tokens"],
                [tuple(s) for s in spans] if spans is not None else None,
            ))
    stats = CorpusStats(**payload["stats"])
    return Corpus(vocabulary, documents, stats)
