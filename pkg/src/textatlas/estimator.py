"""Scikit-learn style co-clustering estimator over the blockmodel engine.

``HierarchicalBlockClustering`` consumes a documents-by-words count matrix
(dense or CSR) and simultaneously clusters rows and columns by minimizing the
hierarchy description length. ``labels_`` carries document clusters so the
estimator drops into pipelines expecting a clusterer; word clusters and the
full hierarchies ride along as fitted attributes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .blockmodel import Partition, description_length
from .inference import InferenceConfig, fit_hierarchy
from .network import DOC, WORD, ContractedNetwork


def _network_from_matrix(X, must_link) -> ContractedNetwork:
    n_docs, n_words = X.shape
    groups = [tuple(sorted(set(int(w) for w in g))) for g in (must_link or [])]
    seen: set[int] = set()
    for g in groups:
        if not g:
            raise ValueError("must_link groups must be non-empty")
        for w in g:
            if not 0 <= w < n_words:
                raise ValueError(f"must_link word index {w} outside 0..{n_words - 1}")
            if w in seen:
                raise ValueError(f"word index {w} appears in two must_link groups")
            seen.add(w)
    atoms = [g for g in groups if g]
    atoms += [(w,) for w in range(n_words) if w not in seen]
    atom_of = {}
    for ai, members in enumerate(atoms):
        for w in members:
            atom_of[w] = ai
    n_atoms = len(atoms)

    text: dict[tuple[int, int], float] = {}
    if hasattr(X, "tocoo"):
        coo = X.tocoo()
        rows, cols, vals = coo.row, coo.col, coo.data
    else:
        rows, cols = np.nonzero(X)
        vals = np.asarray(X)[rows, cols]
    for d, w, v in zip(rows, cols, vals):
        if v < 0:
            raise ValueError("counts must be non-negative")
        if v == 0:
            continue
        key = (atom_of[int(w)], n_atoms + int(d))
        text[key] = text.get(key, 0.0) + float(v)
    doc_ids = [str(d) for d in range(n_docs)]
    return ContractedNetwork.assemble(atoms, doc_ids, [], [], text, {})


class HierarchicalBlockClustering(ClusterMixin, BaseEstimator):
    """Joint hierarchical clustering of documents and words.

    Parameters mirror the inference engine: seeded restarts of agglomerative
    initialization plus annealed single-node sweeps, hierarchy depth capped at
    ``max_levels``. ``must_link`` freezes groups of word columns into atoms
    that always share a cluster.

    Attributes (after ``fit``): ``labels_`` and ``document_labels_`` (level-0
    document clusters), ``word_labels_``, ``document_hierarchy_`` and
    ``word_hierarchy_`` (per-level composed labels), ``objective_``,
    ``n_levels_``.
    """

    def __init__(self, seed: int = 0, restarts: int = 5, sweeps: int = 100,
                 max_levels: int = 5, min_levels: int = 3,
                 merge_candidates: int = 20,
                 must_link: list[tuple[int, ...]] | None = None):
        self.seed = seed
        self.restarts = restarts
        self.sweeps = sweeps
        self.max_levels = max_levels
        self.min_levels = min_levels
        self.merge_candidates = merge_candidates
        self.must_link = must_link

    def fit(self, X, y=None):
        X = check_array(X, accept_sparse="csr", dtype=None)
        network = _network_from_matrix(X, self.must_link)
        config = InferenceConfig(
            seed=self.seed,
            restarts=self.restarts,
            sweeps_per_level=self.sweeps,
            agglomerate_candidates=self.merge_candidates,
            max_levels=self.max_levels,
            min_levels=self.min_levels,
        )
        report = fit_hierarchy(network, config)
        part = report.partition
        n_words = X.shape[1]
        word_levels = []
        doc_levels = []
        for level in range(part.height):
            atom_clusters = part.clusters_at(WORD, level)
            word_levels.append(
                np.array([atom_clusters[network.atom_of[w]] for w in range(n_words)])
            )
            doc_levels.append(np.array(part.clusters_at(DOC, level)))
        self.word_hierarchy_ = word_levels
        self.document_hierarchy_ = doc_levels
        self.word_labels_ = word_levels[0]
        self.document_labels_ = doc_levels[0]
        self.labels_ = self.document_labels_
        self.objective_ = report.objective.total
        self.n_levels_ = part.height
        self._partition = part
        self._network = network
        return self

    def score(self, X=None, y=None) -> float:
        """Negative description length (higher is better)."""
        check_is_fitted(self, "labels_")
        return -self.objective_

    def refit_objective(self) -> float:
        check_is_fitted(self, "labels_")
        return description_length(self._network, self._partition).total
