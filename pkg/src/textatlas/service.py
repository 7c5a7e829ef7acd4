"""HTTP facade over a project: corpus, map, documents, annotations, sampling,
word tree, model updates, snapshots, and CSV export.

All JSON responses are canonical (sorted keys, compact separators), so a
snapshot-qualified read returns byte-identical payloads for identical
queries. Errors carry a machine-readable code and message.
"""

from __future__ import annotations

import json
import random
import time
from typing import Any

from fastapi import FastAPI, Request, Response
from pydantic import BaseModel, Field

from . import errors
from .corpus import stem_candidates
from .inference import InferenceConfig
from .layout import axial_to_plane, pin_overlay, region_boundaries
from .network import NetworkConfig
from .project import Project
from .sampler import pruned_word_tree, random_sample, sample_by_word_cluster
from .stem import stem as stem_word

_STATUS = {
    errors.NotFound: 404,
    errors.Busy: 409,
    errors.OverlappingHighlight: 409,
    errors.KeywordConflict: 409,
    errors.ReservedCode: 400,
    errors.SpanOutOfRange: 400,
    errors.SampleTooLarge: 400,
    errors.OrderTooLarge: 400,
    errors.InvalidLevel: 404,
    errors.InvalidMove: 400,
    errors.IngestError: 400,
    errors.EmptyDocument: 400,
}


class CanonicalJSONResponse(Response):
    media_type = "application/json"

    def render(self, content: Any) -> bytes:
        return json.dumps(
            content, sort_keys=True, separators=(",", ":"), ensure_ascii=False
        ).encode("utf-8")


class HighlightIn(BaseModel):
    doc_id: str
    start: int
    end: int
    code_label: str
    keywords: list[str] = Field(default_factory=list)   # candidate stems
    keyword_ids: list[int] = Field(default_factory=list)
    memo: str = ""


class HighlightPatch(BaseModel):
    start: int | None = None
    end: int | None = None
    code_label: str | None = None
    keywords: list[str] | None = None
    keyword_ids: list[int] | None = None
    memo: str | None = None


class CategoryIn(BaseModel):
    label: str


class RandomSampleIn(BaseModel):
    n: int
    seed: int | None = None
    exclude: list[str] = Field(default_factory=list)


class ClusterSampleIn(BaseModel):
    snapshot: int
    cluster_id: int
    level: int
    k: int = 30


class UpdateIn(BaseModel):
    seed: int | None = None
    restarts: int | None = None
    sweeps: int | None = None
    levels: int | None = None
    omega: float | None = None


def _highlight_json(project: Project, h) -> dict:
    store = project.store
    code = store.codes[h.code_id]
    return {
        "id": h.id,
        "doc_id": h.doc_id,
        "start": h.start,
        "end": h.end,
        "code_id": h.code_id,
        "code_label": code.label,
        "keywords": sorted(h.keywords),
        "keyword_stems": store.keyword_stems(h.keywords),
        "memo": h.memo,
        "created_at": h.created_at,
        "updated_at": h.updated_at,
    }


def _resolve_keywords(project: Project, doc_id: str, start: int, end: int,
                      stems: list[str], ids: list[int]) -> set[int]:
    """Selected stems expand to every vocabulary id sharing the stem."""
    out = set(ids)
    if stems:
        doc = project.corpus.by_id.get(doc_id)
        if doc is None:
            raise errors.NotFound(f"unknown document {doc_id!r}")
        cands = {
            c.stem: c
            for c in stem_candidates(doc.body[start:end], project.tokenizer_config,
                                     project.corpus.vocabulary)
        }
        for s in stems:
            cand = cands.get(s)
            if cand is None:
                raise errors.SpanOutOfRange(
                    f"stem {s!r} is not a candidate of this span"
                )
            out.update(cand.word_ids)
    return out


def create_app(project: Project, inference_defaults: InferenceConfig | None = None,
               ensure_snapshot: bool = True) -> FastAPI:
    defaults = inference_defaults or InferenceConfig()
    if ensure_snapshot:
        project.ensure_initial_snapshot(defaults)

    app = FastAPI(title="textatlas", default_response_class=CanonicalJSONResponse)

    @app.exception_handler(errors.TextAtlasError)
    async def handle_known(request: Request, exc: errors.TextAtlasError):
        status = _STATUS.get(type(exc), 500)
        return CanonicalJSONResponse(
            {"error": {"code": type(exc).__name__, "message": str(exc)}},
            status_code=status,
        )

    @app.exception_handler(ValueError)
    async def handle_value_error(request: Request, exc: ValueError):
        return CanonicalJSONResponse(
            {"error": {"code": "ValueError", "message": str(exc)}}, status_code=400
        )

    def snapshot_or_404(snapshot_id: int | None):
        sid = snapshot_id if snapshot_id is not None else project.latest_snapshot_id()
        if sid is None:
            raise errors.NotFound("no model snapshot yet")
        return project.snapshot(sid)

    # -- corpus ------------------------------------------------------------------

    @app.get("/api/corpus/stats")
    def corpus_stats():
        stats = project.corpus.stats.to_json()
        stats["n_model_documents"] = len(project.corpus.model_documents)
        stats["annotation_version"] = project.store.version
        return stats

    @app.get("/api/documents/{doc_id}")
    def get_document(doc_id: str, preview: int | None = None):
        doc = project.corpus.by_id.get(doc_id)
        if doc is None:
            raise errors.NotFound(f"unknown document {doc_id!r}")
        text = doc.body if preview is None else doc.body[:preview]
        return {
            "id": doc.id,
            "title": doc.title,
            "text": text,
            "truncated": preview is not None and len(doc.body) > preview,
            "length": len(doc.body),
            "in_model": doc.in_model,
        }

    # -- map ----------------------------------------------------------------------

    @app.get("/api/map")
    def get_map(snapshot: int | None = None, level: int | None = None,
                codes: str | None = None):
        snap = snapshot_or_404(snapshot)
        layout = project.layout_for(snap.snapshot_id)
        if level is not None and not (0 <= level < layout.height):
            raise errors.InvalidLevel(
                f"level {level} outside 0..{layout.height - 1}"
            )
        hexes = []
        for doc_id in layout.doc_order:
            q, r = layout.cells[layout.doc_cells[doc_id]]
            hexes.append({"doc_id": doc_id, "q": q, "r": r})
        levels = range(layout.height) if level is None else [level]
        boundaries = {}
        for lvl in levels:
            polys = region_boundaries(layout, lvl)
            boundaries[str(lvl)] = {
                str(cluster): [[[round(x, 6), round(y, 6)] for x, y in ring]
                               for ring in rings]
                for cluster, rings in sorted(polys.items())
            }
        if codes is None:
            filters = None
        else:
            filters = {c for c in codes.split(",") if c}
        pins = [p.to_json() for p in pin_overlay(layout, project.store, filters)]
        return {
            "snapshot": snap.snapshot_id,
            "order": layout.order,
            "n_levels": layout.height,
            "hexes": hexes,
            "boundaries": boundaries,
            "pins": pins,
        }

    # -- sampling -------------------------------------------------------------------

    @app.post("/api/sample/random")
    def sample_random(body: RandomSampleIn):
        seed = body.seed if body.seed is not None else random.randrange(2**31)
        docs = random_sample(
            (d.id for d in project.corpus.documents), body.n, seed,
            exclude=set(body.exclude),
        )
        return {"docs": docs, "seed": seed}

    @app.post("/api/sample/cluster")
    def sample_cluster(body: ClusterSampleIn):
        snap = snapshot_or_404(body.snapshot)
        ranked = sample_by_word_cluster(
            project.query_network, snap.partition, body.cluster_id, body.level,
            k=body.k,
        )
        return {
            "snapshot": snap.snapshot_id,
            "cluster_id": body.cluster_id,
            "level": body.level,
            "docs": [{"doc_id": d, "probability": p} for d, p in ranked],
        }

    # -- word tree ---------------------------------------------------------------------

    @app.get("/api/words/tree")
    def words_tree(snapshot: int | None = None, codes: str = ""):
        snap = snapshot_or_404(snapshot)
        store = project.store
        code_ids = [c for c in codes.split(",") if c]
        selected: set[int] = set()
        for code_id in code_ids:
            code = store.codes.get(code_id)
            if code is None:
                raise errors.NotFound(f"unknown code {code_id!r}")
            selected |= code.keyword_word_ids
        roots = pruned_word_tree(snap.partition, project.corpus.vocabulary, selected)
        return {
            "snapshot": snap.snapshot_id,
            "codes": code_ids,
            "roots": [r.to_json(project.corpus.vocabulary) for r in roots],
        }

    # -- keyword candidates ----------------------------------------------------------------

    @app.get("/api/keywords/candidates")
    def keyword_candidates(doc: str, start: int, end: int):
        document = project.corpus.by_id.get(doc)
        if document is None:
            raise errors.NotFound(f"unknown document {doc!r}")
        if not (0 <= start < end <= len(document.body)):
            raise errors.SpanOutOfRange(f"span [{start}, {end}) out of range")
        cands = stem_candidates(
            document.body[start:end], project.tokenizer_config,
            project.corpus.vocabulary,
        )
        return {
            "doc_id": doc,
            "start": start,
            "end": end,
            "candidates": [
                {
                    "stem": c.stem,
                    "surface_forms": list(c.surface_forms),
                    "word_ids": list(c.word_ids),
                    "terms": [project.corpus.vocabulary.terms[w] for w in c.word_ids],
                }
                for c in cands
            ],
        }

    # -- highlights ------------------------------------------------------------------------

    @app.get("/api/highlights")
    def list_highlights(doc: str | None = None):
        store = project.store
        if doc is not None:
            hs = store.highlights_for_doc(doc)
        else:
            hs = sorted(store.highlights.values(), key=lambda h: h.id)
        return {
            "highlights": [_highlight_json(project, h) for h in hs],
            "version": store.version,
        }

    @app.post("/api/highlights", status_code=201)
    def create_highlight(body: HighlightIn):
        kw = _resolve_keywords(project, body.doc_id, body.start, body.end,
                               body.keywords, body.keyword_ids)
        h = project.store.create_highlight(
            body.doc_id, (body.start, body.end), body.code_label,
            keywords=kw, memo=body.memo,
        )
        project.save_annotations()
        return {"highlight": _highlight_json(project, h),
                "version": project.store.version}

    @app.patch("/api/highlights/{highlight_id}")
    def update_highlight(highlight_id: str, body: HighlightPatch):
        store = project.store
        current = store.highlights.get(highlight_id)
        if current is None:
            raise errors.NotFound(f"unknown highlight {highlight_id!r}")
        span = None
        if body.start is not None or body.end is not None:
            start = body.start if body.start is not None else current.start
            end = body.end if body.end is not None else current.end
            span = (start, end)
        kw = None
        if body.keywords is not None or body.keyword_ids is not None:
            s, e = span if span is not None else (current.start, current.end)
            kw = _resolve_keywords(project, current.doc_id, s, e,
                                   body.keywords or [], body.keyword_ids or [])
        h = store.update_highlight(
            highlight_id, span=span, code_label=body.code_label,
            keywords=kw, memo=body.memo,
        )
        project.save_annotations()
        return {"highlight": _highlight_json(project, h), "version": store.version}

    @app.delete("/api/highlights/{highlight_id}")
    def delete_highlight(highlight_id: str):
        project.store.delete_highlight(highlight_id)
        project.save_annotations()
        return {"deleted": highlight_id, "version": project.store.version}

    # -- codes ---------------------------------------------------------------------------------

    @app.get("/api/codes")
    def list_codes():
        store = project.store
        out = []
        for code in sorted(store.codes.values(), key=lambda c: (c.reserved, c.id)):
            category = (
                store.categories.get(code.category_id) if code.category_id else None
            )
            out.append({
                "id": code.id,
                "label": code.label,
                "reserved": code.reserved,
                "category": (
                    {"id": category.id, "label": category.label,
                     "color_index": category.color_index}
                    if category else None
                ),
                "keywords": [
                    {"word_id": w, "term": store.corpus.vocabulary.terms[w],
                     "stem": stem_word(store.corpus.vocabulary.terms[w])}
                    for w in sorted(code.keyword_word_ids)
                ],
                "n_highlights": sum(
                    1 for h in store.highlights.values() if h.code_id == code.id
                ),
            })
        return {"codes": out, "version": store.version}

    @app.post("/api/codes/{code_id}/category")
    def set_category(code_id: str, body: CategoryIn):
        category = project.store.assign_category(code_id, body.label)
        project.save_annotations()
        return {
            "code_id": code_id,
            "category": {"id": category.id, "label": category.label,
                         "color_index": category.color_index},
            "version": project.store.version,
        }

    # -- model ----------------------------------------------------------------------------------

    @app.post("/api/model/update", status_code=202)
    def model_update(body: UpdateIn | None = None):
        body = body or UpdateIn()
        cfg = InferenceConfig(
            seed=body.seed if body.seed is not None else int(time.time()) % 2**31,
            restarts=body.restarts or defaults.restarts,
            sweeps_per_level=(
                body.sweeps if body.sweeps is not None else defaults.sweeps_per_level
            ),
            max_levels=body.levels or defaults.max_levels,
            min_levels=defaults.min_levels,
            agglomerate_candidates=defaults.agglomerate_candidates,
            omega=body.omega if body.omega is not None else defaults.omega,
        )
        job = project.request_update(cfg, NetworkConfig(omega=cfg.omega))
        return {"job": job.to_json()}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        return {"job": project.job_status(job_id).to_json()}

    @app.get("/api/snapshots")
    def list_snapshots():
        return {"snapshots": project.list_snapshots()}

    # -- export ------------------------------------------------------------------------------------

    @app.get("/api/export.csv")
    def export_csv():
        return Response(
            project.store.export_csv(),
            media_type="text/csv; charset=utf-8",
            headers={"Content-Disposition": "attachment; filename=export.csv"},
        )

    # plane-coordinate helper for clients that want hex centers server-side
    @app.get("/api/map/geometry")
    def map_geometry(snapshot: int | None = None):
        snap = snapshot_or_404(snapshot)
        layout = project.layout_for(snap.snapshot_id)
        centers = {}
        for doc_id, cell in layout.doc_cells.items():
            x, y = axial_to_plane(*layout.cells[cell])
            centers[doc_id] = [round(x, 6), round(y, 6)]
        return {"snapshot": snap.snapshot_id, "centers": centers}

    return app


def serve(project_dir: str, port: int = 8000, host: str = "127.0.0.1",
          inference_defaults: InferenceConfig | None = None) -> None:
    """Run the service; fits snapshot 0 first when the project has none."""
    import uvicorn

    project = Project(project_dir)
    app = create_app(project, inference_defaults)
    static_dir = project.directory / "webui"
    if static_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="webui")
    uvicorn.run(app, host=host, port=port, log_level="info")
