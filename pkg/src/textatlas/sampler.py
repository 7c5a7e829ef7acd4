"""Document sampling and the pruned word-cluster tree.

Random sampling is uniform without replacement and deterministic per seed.
Cluster-driven sampling ranks documents by the fraction of their tokens that
fall inside the chosen word cluster, descending, ties broken by ascending
document id; zero-probability documents never appear.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable

from .blockmodel import Partition, doc_cluster_prob
from .corpus import Vocabulary
from .errors import NotFound, SampleTooLarge
from .network import WORD, ContractedNetwork


def random_sample(doc_ids: Iterable[str], n: int, seed: int,
                  exclude: set[str] | None = None) -> list[str]:
    pool = sorted(set(doc_ids) - (exclude or set()))
    if not (1 <= n <= len(pool)):
        raise SampleTooLarge(
            f"cannot sample {n} of {len(pool)} available documents"
        )
    return random.Random(seed).sample(pool, n)


def sample_by_word_cluster(network: ContractedNetwork, partition: Partition,
                           cluster_id: int, level: int,
                           k: int = 30) -> list[tuple[str, float]]:
    """Top-k documents by cluster probability, descending, id ascending."""
    if not (0 <= level < partition.height):
        raise NotFound(f"level {level} not in the hierarchy")
    clusters = set(partition.clusters_at(WORD, level))
    if cluster_id not in clusters:
        raise NotFound(f"word cluster {cluster_id} not at level {level}")
    ranked = []
    for doc_id in network.doc_ids:
        p = doc_cluster_prob(network, partition, doc_id, cluster_id, level)
        if p > 0.0:
            ranked.append((doc_id, p))
    ranked.sort(key=lambda item: (-item[1], item[0]))
    return ranked[:k]


@dataclass
class WordTreeNode:
    """One cluster in the pruned hierarchy of word clusters."""

    level: int
    cluster_id: int
    keywords: list[int]      # selected-code keywords inside, by frequency desc
    top_words: list[int]     # ten highest-frequency member words
    children: list["WordTreeNode"] = field(default_factory=list)

    def to_json(self, vocabulary: Vocabulary) -> dict:
        return {
            "level": self.level,
            "cluster_id": self.cluster_id,
            "keywords": [
                {"word_id": w, "term": vocabulary.terms[w]} for w in self.keywords
            ],
            "top_words": [
                {"word_id": w, "term": vocabulary.terms[w]} for w in self.top_words
            ],
            "children": [c.to_json(vocabulary) for c in self.children],
        }


def pruned_word_tree(partition: Partition, vocabulary: Vocabulary,
                     selected_keywords: Iterable[int],
                     top_n: int = 10) -> list[WordTreeNode]:
    """Roots of the word-cluster tree pruned to clusters holding keywords.

    ``partition`` must be expanded (level-0 entities are vocabulary ids). A
    cluster appears iff its subtree contains at least one selected keyword;
    keyword lists and hover words are sorted by corpus frequency, descending,
    word id ascending on ties.
    """
    selected = set(selected_keywords)
    if not selected:
        return []
    height = partition.height
    freq = vocabulary.frequency

    def freq_key(wid: int):
        return (-freq[wid], wid)

    # composed cluster id per word per level
    by_level = [partition.clusters_at(WORD, level) for level in range(height)]
    members: list[dict[int, list[int]]] = []
    for level in range(height):
        groups: dict[int, list[int]] = {}
        for wid, cluster in enumerate(by_level[level]):
            groups.setdefault(cluster, []).append(wid)
        members.append(groups)

    def build(level: int, cluster_id: int) -> WordTreeNode | None:
        words = members[level][cluster_id]
        inside = [w for w in words if w in selected]
        if not inside:
            return None
        node = WordTreeNode(
            level=level,
            cluster_id=cluster_id,
            keywords=sorted(inside, key=freq_key),
            top_words=sorted(words, key=freq_key)[:top_n],
        )
        if level > 0:
            child_ids = sorted({
                by_level[level - 1][w] for w in words
            })
            for cid in child_ids:
                child = build(level - 1, cid)
                if child is not None:
                    node.children.append(child)
        return node

    roots = []
    for cluster_id in sorted(members[height - 1]):
        node = build(height - 1, cluster_id)
        if node is not None:
            roots.append(node)
    return roots
