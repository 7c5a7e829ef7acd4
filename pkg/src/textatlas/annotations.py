"""The analyst's annotation store: highlights, codes, categories, memos.

Single source of truth for model constraints and UI overlays. One writer:
every mutation runs under the store lock, bumps the version by exactly one,
and keeps the keyword-ownership map consistent (each vocabulary id belongs
to at most one user code; everything else implicitly belongs to the reserved
``non-keyword`` code).
"""

from __future__ import annotations

import csv
import io
import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

from .corpus import Corpus, TokenizerConfig, stem_candidates, tokenize
from .errors import (
    KeywordConflict,
    NotFound,
    OverlappingHighlight,
    ReservedCode,
    SpanOutOfRange,
)
from .stem import stem

NON_KEYWORD_CODE_ID = "non-keyword"

# Fixed qualitative palette; categories index it by color_index mod 8.
CATEGORY_PALETTE = (
    "#66c2a5", "#fc8d62", "#8da0cb", "#e78ac3",
    "#a6d854", "#ffd92f", "#e5c494", "#b3b3b3",
)


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


@dataclass
class Code:
    id: str
    label: str
    category_id: str | None = None
    keyword_word_ids: set[int] = field(default_factory=set)
    created_at: str = ""

    @property
    def reserved(self) -> bool:
        return self.id == NON_KEYWORD_CODE_ID


@dataclass
class Category:
    id: str
    label: str
    color_index: int

    @property
    def color(self) -> str:
        return CATEGORY_PALETTE[self.color_index % len(CATEGORY_PALETTE)]


@dataclass
class Highlight:
    id: str
    doc_id: str
    start: int
    end: int
    code_id: str
    keywords: set[int] = field(default_factory=set)
    memo: str = ""
    created_at: str = ""
    updated_at: str = ""


@dataclass
class Passage:
    """A coded passage prepared for display: text plus keyword emphasis."""

    doc_id: str
    doc_title: str
    start: int
    end: int
    text: str
    keyword_spans: list[tuple[int, int]]  # absolute offsets into the body
    memo: str
    highlight_id: str


class AnnotationStore:
    """Versioned store of codes, categories, and highlights over one corpus."""

    def __init__(self, corpus: Corpus, config: TokenizerConfig | None = None,
                 clock: Callable[[], str] | None = None):
        self.corpus = corpus
        self.config = config or TokenizerConfig()
        self._clock = clock or _utc_now
        self._lock = threading.RLock()
        self.version = 0
        self.codes: dict[str, Code] = {}
        self.categories: dict[str, Category] = {}
        self.highlights: dict[str, Highlight] = {}
        self._owner: dict[int, str] = {}  # word id -> owning user code id
        self._next_code = 1
        self._next_category = 1
        self._next_highlight = 1
        self.codes[NON_KEYWORD_CODE_ID] = Code(
            id=NON_KEYWORD_CODE_ID, label=NON_KEYWORD_CODE_ID, created_at=self._clock()
        )

    # -- lookups -------------------------------------------------------------

    def owner_of(self, word_id: int) -> str:
        """Owning code id for a vocabulary word (non-keyword when uncoded)."""
        return self._owner.get(word_id, NON_KEYWORD_CODE_ID)

    def code_by_label(self, label: str) -> Code | None:
        needle = label.strip().lower()
        for code in self.codes.values():
            if code.label.lower() == needle:
                return code
        return None

    def category_by_label(self, label: str) -> Category | None:
        needle = label.strip().lower()
        for cat in self.categories.values():
            if cat.label.lower() == needle:
                return cat
        return None

    def highlights_for_doc(self, doc_id: str) -> list[Highlight]:
        out = [h for h in self.highlights.values() if h.doc_id == doc_id]
        out.sort(key=lambda h: h.start)
        return out

    def user_codes(self) -> list[Code]:
        return [c for c in self.codes.values() if not c.reserved]

    def allowed_keyword_ids(self, doc_id: str, start: int, end: int) -> set[int]:
        """Vocabulary ids selectable as keywords for a span (via the stem map)."""
        doc = self.corpus.by_id[doc_id]
        passage = doc.body[start:end]
        allowed: set[int] = set()
        for cand in stem_candidates(passage, self.config, self.corpus.vocabulary):
            allowed.update(cand.word_ids)
        return allowed

    # -- internal helpers ------------------------------------------------------

    def _validate_span(self, doc_id: str, start: int, end: int,
                       ignore_highlight: str | None = None) -> None:
        doc = self.corpus.by_id.get(doc_id)
        if doc is None:
            raise NotFound(f"unknown document {doc_id!r}")
        if not (0 <= start < end <= len(doc.body)):
            raise SpanOutOfRange(
                f"span [{start}, {end}) outside document {doc_id!r} of length {len(doc.body)}"
            )
        for other in self.highlights.values():
            if other.doc_id != doc_id or other.id == ignore_highlight:
                continue
            if start < other.end and other.start < end:
                raise OverlappingHighlight(
                    f"span [{start}, {end}) overlaps highlight {other.id} "
                    f"[{other.start}, {other.end})"
                )

    def _validate_keywords(self, keywords: set[int], code_id: str,
                           doc_id: str, start: int, end: int) -> None:
        allowed = self.allowed_keyword_ids(doc_id, start, end)
        bad = keywords - allowed
        if bad:
            raise SpanOutOfRange(
                f"keywords {sorted(bad)} do not occur in the highlighted span"
            )
        for wid in keywords:
            owner = self._owner.get(wid)
            if owner is not None and owner != code_id:
                term = self.corpus.vocabulary.terms[wid]
                raise KeywordConflict(
                    f"keyword {term!r} already belongs to code "
                    f"{self.codes[owner].label!r}",
                    owner_code_id=owner,
                )

    def _recompute_code_keywords(self, code_id: str) -> None:
        """Code keyword set is the union over its highlights' keywords."""
        code = self.codes[code_id]
        if code.reserved:
            return
        owned: set[int] = set()
        for h in self.highlights.values():
            if h.code_id == code_id:
                owned |= h.keywords
        for wid in code.keyword_word_ids - owned:
            if self._owner.get(wid) == code_id:
                del self._owner[wid]
        for wid in owned:
            self._owner[wid] = code_id
        code.keyword_word_ids = owned

    def _resolve_code(self, code_label: str) -> Code:
        label = code_label.strip()
        if not label:
            raise ValueError("code label must be non-empty")
        existing = self.code_by_label(label)
        if existing is not None:
            return existing
        code = Code(id=f"c{self._next_code}", label=label, created_at=self._clock())
        self._next_code += 1
        self.codes[code.id] = code
        return code

    # -- mutations -----------------------------------------------------------

    def create_highlight(self, doc_id: str, span: tuple[int, int], code_label: str,
                         keywords: Iterable[int] = (), memo: str = "") -> Highlight:
        with self._lock:
            start, end = span
            self._validate_span(doc_id, start, end)
            code = self._resolve_code(code_label)
            kw = set(keywords)
            self._validate_keywords(kw, code.id, doc_id, start, end)
            now = self._clock()
            h = Highlight(
                id=f"h{self._next_highlight}", doc_id=doc_id, start=start, end=end,
                code_id=code.id, keywords=kw, memo=memo,
                created_at=now, updated_at=now,
            )
            self._next_highlight += 1
            self.highlights[h.id] = h
            self._recompute_code_keywords(code.id)
            self.version += 1
            return h

    def update_highlight(self, highlight_id: str, *, span: tuple[int, int] | None = None,
                         code_label: str | None = None,
                         keywords: Iterable[int] | None = None,
                         memo: str | None = None) -> Highlight:
        with self._lock:
            h = self.highlights.get(highlight_id)
            if h is None:
                raise NotFound(f"unknown highlight {highlight_id!r}")
            new_start, new_end = span if span is not None else (h.start, h.end)
            if span is not None:
                self._validate_span(h.doc_id, new_start, new_end, ignore_highlight=h.id)
            old_code = h.code_id
            code = self._resolve_code(code_label) if code_label is not None else self.codes[old_code]
            new_kw = set(keywords) if keywords is not None else set(h.keywords)
            staged_owner = {w: c for w, c in self._owner.items()}
            for wid in h.keywords:
                if staged_owner.get(wid) == old_code:
                    used_elsewhere = any(
                        o.id != h.id and o.code_id == old_code and wid in o.keywords
                        for o in self.highlights.values()
                    )
                    if not used_elsewhere:
                        del staged_owner[wid]
            for wid in new_kw:
                owner = staged_owner.get(wid)
                if owner is not None and owner != code.id:
                    term = self.corpus.vocabulary.terms[wid]
                    raise KeywordConflict(
                        f"keyword {term!r} already belongs to code "
                        f"{self.codes[owner].label!r}",
                        owner_code_id=owner,
                    )
            allowed = self.allowed_keyword_ids(h.doc_id, new_start, new_end)
            bad = new_kw - allowed
            if bad:
                raise SpanOutOfRange(
                    f"keywords {sorted(bad)} do not occur in the highlighted span"
                )
            h.start, h.end = new_start, new_end
            h.code_id = code.id
            h.keywords = new_kw
            if memo is not None:
                h.memo = memo
            h.updated_at = self._clock()
            self._recompute_code_keywords(old_code)
            if code.id != old_code:
                self._recompute_code_keywords(code.id)
            self.version += 1
            return h

    def delete_highlight(self, highlight_id: str) -> None:
        with self._lock:
            h = self.highlights.pop(highlight_id, None)
            if h is None:
                raise NotFound(f"unknown highlight {highlight_id!r}")
            self._recompute_code_keywords(h.code_id)
            self.version += 1

    def assign_category(self, code_id: str, category_label: str) -> Category:
        with self._lock:
            code = self.codes.get(code_id)
            if code is None:
                raise NotFound(f"unknown code {code_id!r}")
            if code.reserved:
                raise ReservedCode("the non-keyword code cannot be categorized")
            label = category_label.strip()
            if not label:
                raise ValueError("category label must be non-empty")
            category = self.category_by_label(label)
            if category is None:
                category = Category(
                    id=f"t{self._next_category}", label=label,
                    color_index=len(self.categories),
                )
                self._next_category += 1
                self.categories[category.id] = category
            code.category_id = category.id
            self.version += 1
            return category

    # -- summaries and export --------------------------------------------------

    def code_summary(self, code_ids: Iterable[str]) -> list[dict]:
        out = []
        for code_id in code_ids:
            code = self.codes.get(code_id)
            if code is None:
                raise NotFound(f"unknown code {code_id!r}")
            passages = []
            memos = []
            for h in sorted(self.highlights.values(), key=lambda h: (h.doc_id, h.start)):
                if h.code_id != code_id:
                    continue
                doc = self.corpus.by_id[h.doc_id]
                text = doc.body[h.start:h.end]
                kw_spans = []
                for token, s, e in tokenize(text, self.config):
                    wid = self.corpus.vocabulary.index.get(token)
                    if wid is not None and wid in h.keywords:
                        kw_spans.append((h.start + s, h.start + e))
                passages.append(Passage(
                    doc_id=h.doc_id, doc_title=doc.title, start=h.start, end=h.end,
                    text=text, keyword_spans=kw_spans, memo=h.memo, highlight_id=h.id,
                ))
                if h.memo:
                    memos.append(h.memo)
            category = self.categories.get(code.category_id) if code.category_id else None
            out.append({
                "code_id": code.id,
                "label": code.label,
                "category": category.label if category else None,
                "memos": memos,
                "passages": passages,
            })
        return out

    def keyword_stems(self, word_ids: Iterable[int]) -> list[str]:
        return sorted({stem(self.corpus.vocabulary.terms[w]) for w in word_ids})

    def export_csv(self) -> str:
        """All highlights as RFC-4180 CSV (one row per highlight)."""
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow([
            "doc_id", "title", "start", "end", "passage_text", "code_label",
            "category_label", "keywords", "memo", "created_at", "updated_at",
        ])
        for h in sorted(self.highlights.values(), key=lambda h: (h.doc_id, h.start)):
            doc = self.corpus.by_id[h.doc_id]
            code = self.codes[h.code_id]
            category = self.categories.get(code.category_id) if code.category_id else None
            writer.writerow([
                h.doc_id, doc.title, h.start, h.end, doc.body[h.start:h.end],
                code.label, category.label if category else "",
                ";".join(self.keyword_stems(h.keywords)), h.memo,
                h.created_at, h.updated_at,
            ])
        return buf.getvalue()

    # -- persistence -------------------------------------------------------------

    def to_json(self) -> dict:
        with self._lock:
            return {
                "version": self.version,
                "codes": [
                    {
                        "id": c.id,
                        "label": c.label,
                        "category_id": c.category_id,
                        "keywords": sorted(c.keyword_word_ids),
                    }
                    for c in sorted(self.codes.values(), key=lambda c: (c.reserved, c.id))
                ],
                "categories": [
                    {"id": t.id, "label": t.label, "color_index": t.color_index}
                    for t in sorted(self.categories.values(), key=lambda t: t.color_index)
                ],
                "highlights": [
                    {
                        "id": h.id,
                        "doc_id": h.doc_id,
                        "start": h.start,
                        "end": h.end,
                        "code_id": h.code_id,
                        "keywords": sorted(h.keywords),
                        "memo": h.memo,
                        "created_at": h.created_at,
                        "updated_at": h.updated_at,
                    }
                    for h in sorted(self.highlights.values(), key=lambda h: h.id)
                ],
            }

    def canonical_json(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, ensure_ascii=False, indent=1)

    def save(self, path: str | Path) -> None:
        """Atomic write: temp file then rename."""
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(self.canonical_json() + "\n", encoding="utf-8")
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | Path, corpus: Corpus,
             config: TokenizerConfig | None = None,
             clock: Callable[[], str] | None = None) -> "AnnotationStore":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_json(payload, corpus, config, clock)

    @classmethod
    def from_json(cls, payload: dict, corpus: Corpus,
                  config: TokenizerConfig | None = None,
                  clock: Callable[[], str] | None = None) -> "AnnotationStore":
        store = cls(corpus, config, clock)
        store.version = payload["version"]
        store.codes = {}
        for c in payload["codes"]:
            code = Code(
                id=c["id"], label=c["label"], category_id=c.get("category_id"),
                keyword_word_ids=set(c.get("keywords", ())),
            )
            store.codes[code.id] = code
            if not code.reserved:
                for wid in code.keyword_word_ids:
                    store._owner[wid] = code.id
        if NON_KEYWORD_CODE_ID not in store.codes:
            store.codes[NON_KEYWORD_CODE_ID] = Code(
                id=NON_KEYWORD_CODE_ID, label=NON_KEYWORD_CODE_ID,
            )
        for t in payload["categories"]:
            store.categories[t["id"]] = Category(
                id=t["id"], label=t["label"], color_index=t["color_index"]
            )
        for hrec in payload["highlights"]:
            h = Highlight(
                id=hrec["id"], doc_id=hrec["doc_id"], start=hrec["start"],
                end=hrec["end"], code_id=hrec["code_id"],
                keywords=set(hrec.get("keywords", ())), memo=hrec.get("memo", ""),
                created_at=hrec.get("created_at", ""),
                updated_at=hrec.get("updated_at", ""),
            )
            store.highlights[h.id] = h
        store._next_code = 1 + max(
            (int(c[1:]) for c in store.codes if c.startswith("c") and c[1:].isdigit()),
            default=0,
        )
        store._next_category = 1 + max(
            (int(t[1:]) for t in store.categories if t.startswith("t") and t[1:].isdigit()),
            default=0,
        )
        store._next_highlight = 1 + max(
            (int(h[1:]) for h in store.highlights if h.startswith("h") and h[1:].isdigit()),
            default=0,
        )
        return store

    # -- integrity ---------------------------------------------------------------

    def check_invariants(self) -> None:
        """Full-scan assertions: single ownership and pairwise-disjoint spans."""
        owners: dict[int, str] = {}
        for code in self.user_codes():
            for wid in code.keyword_word_ids:
                assert wid not in owners, (
                    f"word {wid} owned by both {owners[wid]} and {code.id}"
                )
                owners[wid] = code.id
        assert owners == self._owner
        by_doc: dict[str, list[Highlight]] = {}
        for h in self.highlights.values():
            by_doc.setdefault(h.doc_id, []).append(h)
        for doc_id, hs in by_doc.items():
            hs.sort(key=lambda h: h.start)
            for a, b in zip(hs, hs[1:]):
                assert a.end <= b.start, f"overlap in {doc_id}: {a.id}/{b.id}"
