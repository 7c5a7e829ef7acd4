"""Multilayer network construction and must-link contraction.

Two layers over typed nodes: the text layer is a word-document multigraph
(multiplicity = occurrence count); the metadata layer is a word-code-category
tripartite graph encoding the analyst's schema. Keywords of one code are
contracted into a single atom so they can never be separated downstream.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable

from .annotations import NON_KEYWORD_CODE_ID, AnnotationStore
from .corpus import Corpus
from .errors import IntegrityError

WORD, DOC, CODE, CATEGORY = 0, 1, 2, 3
TYPE_NAMES = ("word", "doc", "code", "category")
TEXT, META = 0, 1
LAYER_NAMES = ("text", "meta")

UNCATEGORIZED_ID = "uncategorized"


@dataclass(frozen=True)
class NetworkConfig:
    """Metadata edge weight and whether non-keyword edges enter the likelihood."""

    omega: float = 1.0
    include_non_keyword: bool = True


@dataclass
class MultilayerNetwork:
    n_words: int
    doc_ids: list[str]
    code_ids: list[str]
    category_ids: list[str]
    text_edges: dict[tuple[int, int], int]        # (word, doc index) -> count
    word_code_edges: dict[tuple[int, int], float]  # (word, code index) -> weight
    code_category_edges: dict[tuple[int, int], float]  # (code idx, cat idx) -> weight

    def __post_init__(self):
        self.doc_index = {d: i for i, d in enumerate(self.doc_ids)}
        self.code_index = {c: i for i, c in enumerate(self.code_ids)}
        self.category_index = {t: i for i, t in enumerate(self.category_ids)}

    @property
    def total_text(self) -> float:
        return sum(self.text_edges.values())

    @property
    def total_meta(self) -> float:
        return sum(self.word_code_edges.values()) + sum(self.code_category_edges.values())

    def word_degrees_by_doc(self) -> dict[int, Counter]:
        by_doc: dict[int, Counter] = {}
        for (w, d), m in self.text_edges.items():
            by_doc.setdefault(d, Counter())[w] = m
        return by_doc


def build_network(corpus: Corpus, store: AnnotationStore,
                  config: NetworkConfig | None = None) -> MultilayerNetwork:
    """Assemble both layers from the corpus and the current annotations."""
    config = config or NetworkConfig()
    vocab_size = len(corpus.vocabulary)

    offenders = []
    for h in store.highlights.values():
        if h.doc_id not in corpus.by_id:
            offenders.append(f"highlight {h.id}: unknown document {h.doc_id!r}")
        for wid in h.keywords:
            if not (0 <= wid < vocab_size):
                offenders.append(f"highlight {h.id}: word id {wid} out of range")
    for code in store.codes.values():
        for wid in code.keyword_word_ids:
            if not (0 <= wid < vocab_size):
                offenders.append(f"code {code.id}: word id {wid} out of range")
    if offenders:
        raise IntegrityError("annotations reference unknown entities", offenders)

    doc_ids = [d.id for d in corpus.model_documents]
    doc_index = {d: i for i, d in enumerate(doc_ids)}
    text_edges: dict[tuple[int, int], int] = {}
    for doc in corpus.model_documents:
        di = doc_index[doc.id]
        for wid, count in Counter(doc.tokens).items():
            text_edges[(wid, di)] = count

    code_ids = sorted(store.codes, key=lambda c: (c != NON_KEYWORD_CODE_ID, c))
    code_index = {c: i for i, c in enumerate(code_ids)}

    # keyword selection counts: how many highlights of the owning code picked it
    selection_counts: Counter = Counter()
    for h in store.highlights.values():
        for wid in h.keywords:
            selection_counts[(wid, h.code_id)] += 1

    word_code_edges: dict[tuple[int, int], float] = {}
    for code in store.codes.values():
        if code.reserved:
            continue
        ci = code_index[code.id]
        for wid in code.keyword_word_ids:
            count = max(1, selection_counts[(wid, code.id)])
            word_code_edges[(wid, ci)] = config.omega * count
    if config.include_non_keyword:
        nk = code_index[NON_KEYWORD_CODE_ID]
        for wid in range(vocab_size):
            if store.owner_of(wid) == NON_KEYWORD_CODE_ID:
                word_code_edges[(wid, nk)] = 1.0

    category_ids = [UNCATEGORIZED_ID] + sorted(
        store.categories, key=lambda t: store.categories[t].color_index
    )
    category_index = {t: i for i, t in enumerate(category_ids)}
    code_category_edges: dict[tuple[int, int], float] = {}
    for code_id in code_ids:
        code = store.codes[code_id]
        cat = code.category_id if code.category_id in store.categories else None
        ti = category_index[cat] if cat else category_index[UNCATEGORIZED_ID]
        code_category_edges[(code_index[code_id], ti)] = 1.0

    return MultilayerNetwork(
        n_words=vocab_size,
        doc_ids=doc_ids,
        code_ids=code_ids,
        category_ids=category_ids,
        text_edges=text_edges,
        word_code_edges=word_code_edges,
        code_category_edges=code_category_edges,
    )


@dataclass
class ContractedNetwork:
    """Typed node graph after must-link contraction of same-code keywords.

    Node indices run atoms, then documents, then codes, then categories.
    Adjacency is stored symmetrically per layer as (neighbor, weight) lists.
    """

    atoms: list[tuple[int, ...]]             # atom index -> member word ids
    doc_ids: list[str]
    code_ids: list[str]
    category_ids: list[str]
    adjacency: list[list[list[tuple[int, float]]]] = field(default_factory=list)
    node_type: list[int] = field(default_factory=list)
    totals: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        self.n_atoms = len(self.atoms)
        self.n_docs = len(self.doc_ids)
        self.n_codes = len(self.code_ids)
        self.n_categories = len(self.category_ids)
        self.n_nodes = self.n_atoms + self.n_docs + self.n_codes + self.n_categories
        self.atom_of: dict[int, int] = {}
        for ai, members in enumerate(self.atoms):
            for wid in members:
                self.atom_of[wid] = ai
        self.doc_node = {d: self.n_atoms + i for i, d in enumerate(self.doc_ids)}

    def type_counts(self) -> dict[int, int]:
        return {
            WORD: self.n_atoms, DOC: self.n_docs,
            CODE: self.n_codes, CATEGORY: self.n_categories,
        }

    @classmethod
    def assemble(cls, atoms: list[tuple[int, ...]], doc_ids: list[str],
                 code_ids: list[str], category_ids: list[str],
                 text_edges: dict[tuple[int, int], float],
                 meta_edges: dict[tuple[int, int], float]) -> "ContractedNetwork":
        """Build adjacency from edge dicts keyed by contracted node indices."""
        net = cls(atoms, doc_ids, code_ids, category_ids)
        n = net.n_nodes
        net.node_type = (
            [WORD] * net.n_atoms + [DOC] * net.n_docs
            + [CODE] * net.n_codes + [CATEGORY] * net.n_categories
        )
        net.adjacency = [[[], []] for _ in range(n)]
        for layer, edges in ((TEXT, text_edges), (META, meta_edges)):
            for (u, v), w in sorted(edges.items()):
                net.adjacency[u][layer].append((v, w))
                net.adjacency[v][layer].append((u, w))
        net.totals = (sum(text_edges.values()), sum(meta_edges.values()))
        return net

    @classmethod
    def from_text_edges(cls, n_words: int, n_docs: int,
                        edges: dict[tuple[int, int], float]) -> "ContractedNetwork":
        """Synthetic text-only network: singleton atoms, no metadata layer."""
        atoms = [(w,) for w in range(n_words)]
        doc_ids = [f"d{i}" for i in range(n_docs)]
        text = {(w, n_words + d): float(m) for (w, d), m in edges.items()}
        return cls.assemble(atoms, doc_ids, [], [], text, {})

    def expand_text_multiplicities(self) -> dict[tuple[int, int], float]:
        """(atom, doc index) -> aggregated weight, for conservation checks."""
        out: dict[tuple[int, int], float] = {}
        for ai in range(self.n_atoms):
            for nbr, w in self.adjacency[ai][TEXT]:
                out[(ai, nbr - self.n_atoms)] = out.get((ai, nbr - self.n_atoms), 0.0) + w
        return out


def contract_atoms(network: MultilayerNetwork,
                   code_keywords: dict[str, Iterable[int]] | None = None) -> ContractedNetwork:
    """Contract each user code's keyword set into one must-link atom.

    ``code_keywords`` defaults to deriving ownership from the metadata layer:
    every word adjacent to a user code joins that code's atom; all remaining
    words become singleton atoms.
    """
    if code_keywords is None:
        code_keywords = {}
        for (wid, ci), _ in network.word_code_edges.items():
            code_id = network.code_ids[ci]
            if code_id != NON_KEYWORD_CODE_ID:
                code_keywords.setdefault(code_id, []).append(wid)

    assigned: dict[int, int] = {}
    atoms: list[tuple[int, ...]] = []
    for code_id in sorted(code_keywords):
        members = sorted(set(code_keywords[code_id]))
        if not members:
            continue
        ai = len(atoms)
        atoms.append(tuple(members))
        for wid in members:
            if wid in assigned:
                raise IntegrityError(
                    f"word {wid} is a keyword of more than one code", [wid]
                )
            assigned[wid] = ai
    for wid in range(network.n_words):
        if wid not in assigned:
            assigned[wid] = len(atoms)
            atoms.append((wid,))

    n_atoms = len(atoms)
    doc_base = n_atoms
    code_base = doc_base + len(network.doc_ids)
    cat_base = code_base + len(network.code_ids)

    text: dict[tuple[int, int], float] = {}
    for (w, d), m in network.text_edges.items():
        key = (assigned[w], doc_base + d)
        text[key] = text.get(key, 0.0) + m
    meta: dict[tuple[int, int], float] = {}
    for (w, c), m in network.word_code_edges.items():
        key = (assigned[w], code_base + c)
        meta[key] = meta.get(key, 0.0) + m
    for (c, t), m in network.code_category_edges.items():
        key = (code_base + c, cat_base + t)
        meta[key] = meta.get(key, 0.0) + m

    return ContractedNetwork.assemble(
        atoms, list(network.doc_ids), list(network.code_ids),
        list(network.category_ids), text, meta,
    )


def write_debug_dump(network: MultilayerNetwork, out: IO[str]) -> None:
    """Edge list, one `layer src dst multiplicity` line per edge."""
    for (w, d), m in sorted(network.text_edges.items()):
        out.write(f"text w{w} d:{network.doc_ids[d]} {m}\n")
    for (w, c), m in sorted(network.word_code_edges.items()):
        out.write(f"meta w{w} c:{network.code_ids[c]} {m}\n")
    for (c, t), m in sorted(network.code_category_edges.items()):
        out.write(f"meta c:{network.code_ids[c]} g:{network.category_ids[t]} {m}\n")
