"""Machine-in-the-loop workbench for inductive text analysis.

Corpus ingestion, passage coding with keyword constraints, hierarchical
word/document co-clustering under a description-length objective, a
Gosper-curve corpus map, ranked cluster sampling, and an HTTP service
driving the analyst-facing UI.
"""

from .annotations import AnnotationStore, Category, Code, Highlight
from .blockmodel import (
    ObjectiveValue,
    Partition,
    delta_dl,
    description_length,
    doc_cluster_of,
    doc_cluster_prob,
    expand_partition,
    word_cluster_of,
)
from .corpus import (
    Corpus,
    CorpusStats,
    Document,
    TokenizerConfig,
    Vocabulary,
    ingest_corpus,
    stem_candidates,
    tokenize,
)
from .estimator import HierarchicalBlockClustering
from .inference import FitReport, InferenceConfig, fit_hierarchy
from .layout import GosperLayout, gosper_curve, layout_documents, pin_overlay, region_boundaries
from .network import (
    ContractedNetwork,
    MultilayerNetwork,
    NetworkConfig,
    build_network,
    contract_atoms,
)
from .project import ModelSnapshot, Project, UpdateJob
from .sampler import pruned_word_tree, random_sample, sample_by_word_cluster

__version__ = "0.1.0"

__all__ = [
    "AnnotationStore", "Category", "Code", "Highlight",
    "ObjectiveValue", "Partition", "delta_dl", "description_length",
    "doc_cluster_of", "doc_cluster_prob", "expand_partition", "word_cluster_of",
    "Corpus", "CorpusStats", "Document", "TokenizerConfig", "Vocabulary",
    "ingest_corpus", "stem_candidates", "tokenize",
    "HierarchicalBlockClustering",
    "FitReport", "InferenceConfig", "fit_hierarchy",
    "GosperLayout", "gosper_curve", "layout_documents", "pin_overlay",
    "region_boundaries",
    "ContractedNetwork", "MultilayerNetwork", "NetworkConfig",
    "build_network", "contract_atoms",
    "ModelSnapshot", "Project", "UpdateJob",
    "pruned_word_tree", "random_sample", "sample_by_word_cluster",
    "__version__",
]
