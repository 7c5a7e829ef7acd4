import csv
import io
import random

import pytest

from textatlas.annotations import (
    CATEGORY_PALETTE,
    NON_KEYWORD_CODE_ID,
    AnnotationStore,
    Category,
)
from textatlas.corpus import TokenizerConfig, stem_candidates
from textatlas.errors import (
    KeywordConflict,
    NotFound,
    OverlappingHighlight,
    ReservedCode,
    SpanOutOfRange,
)

CFG = TokenizerConfig()


def make_store(corpus) -> AnnotationStore:
    tick = iter(range(10**6))
    return AnnotationStore(corpus, CFG, clock=lambda: f"2026-01-01T00:00:{next(tick):02d}Z")


def candidate_ids(store, doc_id, start, end, limit=2):
    doc = store.corpus.by_id[doc_id]
    out = []
    for cand in stem_candidates(doc.body[start:end], CFG, store.corpus.vocabulary):
        for wid in cand.word_ids:
            if store.owner_of(wid) == NON_KEYWORD_CODE_ID and wid not in out:
                out.append(wid)
    return out[:limit]


def test_create_highlight_new_code_and_keyword_transfer(demo_corpus):
    store = make_store(demo_corpus)
    doc = demo_corpus.documents[0]
    kws = candidate_ids(store, doc.id, 0, len(doc.body), limit=2)
    assert len(kws) == 2
    n_codes = len(store.codes)
    h = store.create_highlight(doc.id, (0, 40), "meat-lovers", keywords=kws)
    assert len(store.codes) == n_codes + 1
    for wid in kws:
        assert store.owner_of(wid) == h.code_id
    assert store.codes[h.code_id].keyword_word_ids == set(kws)
    store.check_invariants()


def test_create_highlight_memo_only_leaves_constraints_unchanged(demo_corpus):
    store = make_store(demo_corpus)
    doc = demo_corpus.documents[0]
    before = dict(store._owner)
    h = store.create_highlight(doc.id, (0, 25), "texture", memo="interesting texture talk")
    assert store._owner == before
    assert store.highlights[h.id].memo == "interesting texture talk"


def test_keyword_conflict_names_owning_code(demo_corpus):
    store = make_store(demo_corpus)
    doc_a, doc_b = demo_corpus.documents[0], demo_corpus.documents[8]
    shared = sorted(
        store.allowed_keyword_ids(doc_a.id, 0, len(doc_a.body))
        & store.allowed_keyword_ids(doc_b.id, 0, len(doc_b.body))
    )
    assert shared, "fixture docs should share vocabulary"
    kws = shared[:1]
    store.create_highlight(doc_a.id, (0, len(doc_a.body)), "first-code", keywords=kws)
    with pytest.raises(KeywordConflict) as exc:
        store.create_highlight(doc_b.id, (0, len(doc_b.body)), "second-code", keywords=kws)
    assert store.codes[exc.value.owner_code_id].label == "first-code"


def test_overlapping_highlight_rejected(demo_corpus):
    store = make_store(demo_corpus)
    doc = demo_corpus.documents[0]
    store.create_highlight(doc.id, (10, 50), "a")
    with pytest.raises(OverlappingHighlight):
        store.create_highlight(doc.id, (49, 80), "b")
    # touching spans are fine: [10,50) then [50,60)
    store.create_highlight(doc.id, (50, 60), "b")


def test_span_out_of_range(demo_corpus):
    store = make_store(demo_corpus)
    doc = demo_corpus.documents[0]
    with pytest.raises(SpanOutOfRange):
        store.create_highlight(doc.id, (0, len(doc.body) + 5), "a")
    with pytest.raises(SpanOutOfRange):
        store.create_highlight(doc.id, (12, 12), "a")


def test_update_removes_keyword_reverts_ownership(demo_corpus):
    store = make_store(demo_corpus)
    doc = demo_corpus.documents[0]
    kws = candidate_ids(store, doc.id, 0, len(doc.body), limit=2)
    h = store.create_highlight(doc.id, (0, len(doc.body)), "flavors", keywords=kws)
    store.update_highlight(h.id, keywords=[kws[0]])
    assert store.owner_of(kws[0]) == h.code_id
    assert store.owner_of(kws[1]) == NON_KEYWORD_CODE_ID
    store.check_invariants()


def test_update_memo_leaves_keywords(demo_corpus):
    store = make_store(demo_corpus)
    doc = demo_corpus.documents[0]
    kws = candidate_ids(store, doc.id, 0, len(doc.body), limit=1)
    h = store.create_highlight(doc.id, (0, 60), "flavors", keywords=kws)
    before = set(store.highlights[h.id].keywords)
    store.update_highlight(h.id, memo="second thoughts")
    assert store.highlights[h.id].keywords == before
    assert store.highlights[h.id].memo == "second thoughts"


def test_delete_highlight_keeps_code_empties_keywords(demo_corpus):
    store = make_store(demo_corpus)
    doc = demo_corpus.documents[0]
    kws = candidate_ids(store, doc.id, 0, len(doc.body), limit=1)
    h = store.create_highlight(doc.id, (0, 60), "flavors", keywords=kws)
    code_id = h.code_id
    v = store.version
    store.delete_highlight(h.id)
    assert h.id not in store.highlights
    assert store.version == v + 1
    assert code_id in store.codes
    assert store.codes[code_id].keyword_word_ids == set()
    assert store.owner_of(kws[0]) == NON_KEYWORD_CODE_ID
    with pytest.raises(NotFound):
        store.delete_highlight(h.id)


def test_assign_category_grouping_and_palette(demo_corpus):
    store = make_store(demo_corpus)
    doc = demo_corpus.documents[0]
    store.create_highlight(doc.id, (0, 10), "code-a")
    store.create_highlight(doc.id, (10, 20), "code-b")
    a = store.code_by_label("code-a")
    b = store.code_by_label("code-b")
    cat1 = store.assign_category(a.id, "family stories")
    cat2 = store.assign_category(b.id, "family stories")
    assert cat1.id == cat2.id
    assert store.codes[a.id].category_id == store.codes[b.id].category_id
    n_before = len(store.categories)
    store.assign_category(a.id, "family stories")
    assert len(store.categories) == n_before


def test_ninth_category_repeats_palette():
    cats = [Category(id=f"t{i}", label=f"cat{i}", color_index=i) for i in range(9)]
    assert cats[8].color_index == 8
    assert cats[8].color == cats[0].color == CATEGORY_PALETTE[0]


def test_assign_category_reserved_code_rejected(demo_corpus):
    store = make_store(demo_corpus)
    with pytest.raises(ReservedCode):
        store.assign_category(NON_KEYWORD_CODE_ID, "anything")


def test_code_summary_passages(demo_corpus):
    store = make_store(demo_corpus)
    docs = demo_corpus.documents
    store.create_highlight(docs[0].id, (0, 30), "themes", memo="m1")
    store.create_highlight(docs[1].id, (5, 45), "themes")
    store.create_highlight(docs[2].id, (0, 20), "themes", memo="m3")
    code = store.code_by_label("themes")
    (summary,) = store.code_summary([code.id])
    assert summary["label"] == "themes"
    assert len(summary["passages"]) == 3
    for p in summary["passages"]:
        doc = demo_corpus.by_id[p.doc_id]
        assert p.text == doc.body[p.start:p.end]
    assert summary["memos"] == ["m1", "m3"]

    empty = store.create_highlight(docs[3].id, (0, 10), "lonely")
    store.delete_highlight(empty.id)
    (s2,) = store.code_summary([store.code_by_label("lonely").id])
    assert s2["passages"] == []
    assert s2["label"] == "lonely"


def test_code_summary_marks_keywords(demo_corpus):
    store = make_store(demo_corpus)
    doc = demo_corpus.documents[0]
    kws = candidate_ids(store, doc.id, 0, len(doc.body), limit=1)
    h = store.create_highlight(doc.id, (0, len(doc.body)), "flavors", keywords=kws)
    (summary,) = store.code_summary([h.code_id])
    passage = summary["passages"][0]
    assert passage.keyword_spans, "expected at least one keyword emphasis span"
    term_ids = set()
    for s, e in passage.keyword_spans:
        token = doc.body[s:e].lower()
        term_ids.add(store.corpus.vocabulary.index[token])
    assert term_ids <= store.codes[h.code_id].keyword_word_ids


def test_export_csv_round_trip(demo_corpus):
    store = make_store(demo_corpus)
    doc = demo_corpus.documents[0]
    kws = candidate_ids(store, doc.id, 0, len(doc.body), limit=2)
    store.create_highlight(doc.id, (0, 50), "tricky", keywords=kws,
                           memo='has, commas and\n"quotes" and newlines')
    store.create_highlight(doc.id, (60, 100), "plain")
    text = store.export_csv()
    rows = list(csv.reader(io.StringIO(text)))
    assert len(rows) == 3
    header = rows[0]
    idx = {name: i for i, name in enumerate(header)}
    for row in rows[1:]:
        d = demo_corpus.by_id[row[idx["doc_id"]]]
        start, end = int(row[idx["start"]]), int(row[idx["end"]])
        assert row[idx["passage_text"]] == d.body[start:end]
    memo_row = next(r for r in rows[1:] if r[idx["code_label"]] == "tricky")
    assert memo_row[idx["memo"]] == 'has, commas and\n"quotes" and newlines'
    assert ";" in memo_row[idx["keywords"]] or memo_row[idx["keywords"]]


def test_persistence_round_trip(tmp_path, demo_corpus):
    store = make_store(demo_corpus)
    docs = demo_corpus.documents
    kws = candidate_ids(store, docs[0].id, 0, len(docs[0].body), limit=2)
    store.create_highlight(docs[0].id, (0, 80), "alpha", keywords=kws, memo="note")
    store.create_highlight(docs[1].id, (3, 33), "beta")
    store.assign_category(store.code_by_label("alpha").id, "cat-one")
    path = tmp_path / "annotations.json"
    store.save(path)
    loaded = AnnotationStore.load(path, demo_corpus, CFG)
    assert loaded.canonical_json() == store.canonical_json()
    loaded.save(tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()
    loaded.check_invariants()


def test_monotone_versioning_random_script(demo_corpus):
    rng = random.Random(77)
    store = make_store(demo_corpus)
    docs = [d for d in demo_corpus.documents[:20]]
    for step in range(150):
        v = store.version
        op = rng.random()
        try:
            if op < 0.5 or not store.highlights:
                doc = rng.choice(docs)
                start = rng.randrange(0, max(1, len(doc.body) - 30))
                end = start + rng.randrange(5, 30)
                kws = candidate_ids(store, doc.id, start, min(end, len(doc.body)),
                                    limit=rng.randrange(0, 3))
                store.create_highlight(doc.id, (start, min(end, len(doc.body))),
                                       f"code-{rng.randrange(6)}", keywords=kws)
            elif op < 0.7:
                h = rng.choice(list(store.highlights.values()))
                store.update_highlight(h.id, memo=f"memo {step}")
            elif op < 0.85:
                h = rng.choice(list(store.highlights.values()))
                store.delete_highlight(h.id)
            else:
                codes = store.user_codes()
                if codes:
                    store.assign_category(rng.choice(codes).id, f"cat-{rng.randrange(4)}")
        except (OverlappingHighlight, KeywordConflict, SpanOutOfRange):
            assert store.version == v
            continue
        assert store.version == v + 1
        store.check_invariants()
