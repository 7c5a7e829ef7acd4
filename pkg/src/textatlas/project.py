"""Project lifecycle: corpus and annotation persistence, model snapshots,
and on-demand asynchronous updates.

A project directory holds::

    project.json         tokenizer settings and metadata
    documents.jsonl      normalized corpus
    vocabulary.json      terms, frequencies, stats
    annotations.json     the analyst's store (atomic writes)
    snapshots/<id>.json  immutable fitted models, ids strictly increasing

One background worker runs at most one update job; the job snapshots its
inputs at submission, so the analyst keeps editing annotations while it runs.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from .annotations import AnnotationStore
from .blockmodel import (
    N_TYPES,
    ObjectiveValue,
    Partition,
    expand_partition,
)
from .corpus import Corpus, TokenizerConfig, ingest_corpus, load_corpus, save_corpus
from .errors import Busy, NotFound, TextAtlasError
from .inference import InferenceConfig, fit_hierarchy
from .layout import GosperLayout, layout_documents
from .network import NetworkConfig, ContractedNetwork, build_network, contract_atoms


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def config_digest(tokenizer: TokenizerConfig, inference: InferenceConfig,
                  network: NetworkConfig) -> str:
    blob = json.dumps(
        {
            "tokenizer": tokenizer.digest(),
            "inference": inference.digest(),
            "network": {"omega": network.omega,
                        "include_non_keyword": network.include_non_keyword},
        },
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class ModelSnapshot:
    """One immutable fitted model with provenance."""

    snapshot_id: int
    created_at: str
    annotation_version: int
    objective: ObjectiveValue
    partition: Partition          # expanded: level-0 words are vocabulary ids
    node_order: dict[str, list]
    duration_s: float
    config_digest: str

    def to_json(self) -> dict:
        return {
            "snapshot_id": self.snapshot_id,
            "created_at": self.created_at,
            "annotation_version": self.annotation_version,
            "objective": self.objective.to_json(),
            "levels": self.partition.to_levels_json(),
            "node_order": self.node_order,
            "duration_s": self.duration_s,
            "config_digest": self.config_digest,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ModelSnapshot":
        order = payload["node_order"]
        sizes = [len(order["words"]), len(order["docs"]),
                 len(order["codes"]), len(order["categories"])]
        levels = []
        for flat in payload["levels"]:
            split: list[list[int]] = []
            cursor = 0
            for t in range(N_TYPES):
                split.append(list(flat[cursor:cursor + sizes[t]]))
                cursor += sizes[t]
            levels.append(split)
            sizes = [(1 + max(a)) if a else 0 for a in split]
        objective = ObjectiveValue(
            total=payload["objective"]["total"],
            breakdown=payload["objective"]["breakdown"],
        )
        return cls(
            snapshot_id=payload["snapshot_id"],
            created_at=payload["created_at"],
            annotation_version=payload["annotation_version"],
            objective=objective,
            partition=Partition(levels),
            node_order=order,
            duration_s=payload["duration_s"],
            config_digest=payload["config_digest"],
        )

    def meta(self) -> dict:
        return {
            "snapshot_id": self.snapshot_id,
            "created_at": self.created_at,
            "annotation_version": self.annotation_version,
            "dl_total": self.objective.total,
            "n_levels": self.partition.height,
            "duration_s": self.duration_s,
            "config_digest": self.config_digest,
        }


@dataclass
class UpdateJob:
    job_id: str
    state: str = "queued"            # queued | running | done | failed
    progress: float = 0.0
    snapshot_id: int | None = None
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "job_id": self.job_id,
            "state": self.state,
            "progress": self.progress,
            "snapshot_id": self.snapshot_id,
            "error": self.error,
        }

    def advance(self, fraction: float) -> None:
        # progress only moves forward
        if fraction > self.progress:
            self.progress = fraction


class Project:
    """A single-analyst workspace rooted at a directory."""

    def __init__(self, directory: str | Path,
                 clock: Callable[[], str] | None = None):
        self.directory = Path(directory)
        self.clock = clock or _utc_now
        meta_path = self.directory / "project.json"
        if not meta_path.exists():
            raise NotFound(f"no project at {self.directory} (run init first)")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        self.tokenizer_config = TokenizerConfig(**meta.get("tokenizer", {}))
        self._corpus: Corpus | None = None
        self._store: AnnotationStore | None = None
        self._query_net: ContractedNetwork | None = None
        self._snapshots: dict[int, ModelSnapshot] = {}
        self._layouts: dict[int, GosperLayout] = {}
        self._job_lock = threading.Lock()
        self._jobs: dict[str, UpdateJob] = {}
        self._active_job: UpdateJob | None = None
        self._next_job = 1
        self._snapshot_lock = threading.Lock()
        (self.directory / "snapshots").mkdir(exist_ok=True)

    # -- setup ------------------------------------------------------------------

    @classmethod
    def init(cls, directory: str | Path,
             tokenizer: TokenizerConfig | None = None) -> "Project":
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        meta_path = directory / "project.json"
        if meta_path.exists():
            raise TextAtlasError(f"project already exists at {directory}")
        tokenizer = tokenizer or TokenizerConfig()
        meta = {"created_at": _utc_now(), "tokenizer": tokenizer.digest()}
        meta_path.write_text(
            json.dumps(meta, indent=1, sort_keys=True) + "\n", encoding="utf-8"
        )
        (directory / "snapshots").mkdir(exist_ok=True)
        return cls(directory)

    def ingest(self, source) -> Corpus:
        corpus = ingest_corpus(source, self.tokenizer_config)
        save_corpus(corpus, self.directory)
        self._corpus = corpus
        self._query_net = None
        self._store = AnnotationStore(corpus, self.tokenizer_config, self.clock)
        self.save_annotations()
        return corpus

    # -- loaded state ----------------------------------------------------------------

    @property
    def corpus(self) -> Corpus:
        if self._corpus is None:
            if not (self.directory / "vocabulary.json").exists():
                raise NotFound("corpus not ingested yet")
            self._corpus = load_corpus(self.directory)
        return self._corpus

    @property
    def store(self) -> AnnotationStore:
        if self._store is None:
            path = self.directory / "annotations.json"
            if path.exists():
                self._store = AnnotationStore.load(
                    path, self.corpus, self.tokenizer_config, self.clock
                )
            else:
                self._store = AnnotationStore(
                    self.corpus, self.tokenizer_config, self.clock
                )
        return self._store

    def save_annotations(self) -> None:
        self.store.save(self.directory / "annotations.json")

    @property
    def query_network(self) -> ContractedNetwork:
        """Text-layer network with singleton atoms, for snapshot queries."""
        if self._query_net is None:
            corpus = self.corpus
            atoms = [(w,) for w in range(len(corpus.vocabulary))]
            doc_ids = [d.id for d in corpus.model_documents]
            doc_pos = {d: i for i, d in enumerate(doc_ids)}
            text = {}
            for doc in corpus.model_documents:
                base = len(atoms) + doc_pos[doc.id]
                for wid in doc.tokens:
                    key = (wid, base)
                    text[key] = text.get(key, 0.0) + 1.0
            self._query_net = ContractedNetwork.assemble(
                atoms, doc_ids, [], [], text, {}
            )
        return self._query_net

    # -- snapshots ----------------------------------------------------------------------

    def snapshot_path(self, snapshot_id: int) -> Path:
        return self.directory / "snapshots" / f"{snapshot_id}.json"

    def snapshot_ids(self) -> list[int]:
        out = []
        for p in (self.directory / "snapshots").glob("*.json"):
            try:
                out.append(int(p.stem))
            except ValueError:
                continue
        return sorted(out)

    def snapshot(self, snapshot_id: int) -> ModelSnapshot:
        if snapshot_id not in self._snapshots:
            path = self.snapshot_path(snapshot_id)
            if not path.exists():
                raise NotFound(f"no snapshot {snapshot_id}")
            self._snapshots[snapshot_id] = ModelSnapshot.from_json(
                json.loads(path.read_text(encoding="utf-8"))
            )
        return self._snapshots[snapshot_id]

    def latest_snapshot_id(self) -> int | None:
        ids = self.snapshot_ids()
        return ids[-1] if ids else None

    def list_snapshots(self) -> list[dict]:
        return [self.snapshot(i).meta() for i in self.snapshot_ids()]

    def layout_for(self, snapshot_id: int) -> GosperLayout:
        if snapshot_id not in self._layouts:
            snap = self.snapshot(snapshot_id)
            self._layouts[snapshot_id] = layout_documents(
                snap.partition, list(snap.node_order["docs"])
            )
        return self._layouts[snapshot_id]

    # -- fitting ---------------------------------------------------------------------------

    def fit(self, config: InferenceConfig | None = None,
            network_config: NetworkConfig | None = None,
            store_snapshot: dict | None = None,
            progress: Callable[[float], None] | None = None) -> ModelSnapshot:
        """Synchronous fit over the current (or given) annotation state."""
        config = config or InferenceConfig()
        network_config = network_config or NetworkConfig(omega=config.omega)
        corpus = self.corpus
        if store_snapshot is None:
            store_snapshot = self.store.to_json()
        frozen = AnnotationStore.from_json(store_snapshot, corpus,
                                           self.tokenizer_config, self.clock)
        started = time.monotonic()
        network = build_network(corpus, frozen, network_config)
        contracted = contract_atoms(network)
        report = fit_hierarchy(contracted, config, progress=progress)
        expanded = expand_partition(report.partition, contracted)
        duration = time.monotonic() - started
        node_order = {
            "words": list(range(len(corpus.vocabulary))),
            "docs": list(network.doc_ids),
            "codes": list(network.code_ids),
            "categories": list(network.category_ids),
        }
        with self._snapshot_lock:
            ids = self.snapshot_ids()
            snapshot_id = (ids[-1] + 1) if ids else 0
            snap = ModelSnapshot(
                snapshot_id=snapshot_id,
                created_at=self.clock(),
                annotation_version=store_snapshot["version"],
                objective=report.objective,
                partition=expanded,
                node_order=node_order,
                duration_s=round(duration, 3),
                config_digest=config_digest(self.tokenizer_config, config,
                                            network_config),
            )
            path = self.snapshot_path(snapshot_id)
            tmp = path.with_suffix(".json.tmp")
            tmp.write_text(
                json.dumps(snap.to_json(), sort_keys=True) + "\n", encoding="utf-8"
            )
            os.replace(tmp, path)
            self._snapshots[snapshot_id] = snap
        self.layout_for(snapshot_id)
        return snap

    def ensure_initial_snapshot(self, config: InferenceConfig | None = None) -> int:
        latest = self.latest_snapshot_id()
        if latest is not None:
            return latest
        return self.fit(config).snapshot_id

    # -- background updates -------------------------------------------------------------------

    def request_update(self, config: InferenceConfig | None = None,
                       network_config: NetworkConfig | None = None) -> UpdateJob:
        with self._job_lock:
            if self._active_job is not None and self._active_job.state in (
                "queued", "running"
            ):
                raise Busy(f"job {self._active_job.job_id} is still active")
            job = UpdateJob(job_id=f"job-{self._next_job}")
            self._next_job += 1
            self._jobs[job.job_id] = job
            self._active_job = job
            store_snapshot = self.store.to_json()

        def run() -> None:
            job.state = "running"
            try:
                snap = self.fit(
                    config, network_config, store_snapshot=store_snapshot,
                    progress=lambda f: job.advance(0.05 + 0.9 * f),
                )
                job.snapshot_id = snap.snapshot_id
                job.advance(1.0)
                job.state = "done"
            except Exception as exc:  # noqa: BLE001 - job boundary
                job.error = str(exc)
                job.state = "failed"

        thread = threading.Thread(target=run, name=job.job_id, daemon=True)
        thread.start()
        return job

    def job_status(self, job_id: str) -> UpdateJob:
        job = self._jobs.get(job_id)
        if job is None:
            raise NotFound(f"unknown job {job_id!r}")
        return job
