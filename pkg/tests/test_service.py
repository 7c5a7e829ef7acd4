import csv
import io
import time

import pytest
from fastapi.testclient import TestClient

from textatlas.inference import InferenceConfig
from textatlas.project import Project
from textatlas.service import create_app

from .conftest import demo_corpus_text

FAST = InferenceConfig(seed=5, restarts=1, sweeps_per_level=8, max_levels=4)


@pytest.fixture(scope="module")
def client(tmp_path_factory):
    proj = Project.init(tmp_path_factory.mktemp("svc") / "proj")
    proj.ingest(demo_corpus_text().splitlines())
    app = create_app(proj, FAST)
    return TestClient(app)


def wait_for_job(client, job_id, timeout=60):
    deadline = time.time() + timeout
    while time.time() < deadline:
        job = client.get(f"/api/jobs/{job_id}").json()["job"]
        if job["state"] in ("done", "failed"):
            return job
        time.sleep(0.05)
    raise TimeoutError


def test_corpus_stats_passthrough(client):
    body = client.get("/api/corpus/stats").json()
    assert body["n_documents"] == 200
    assert body["n_text_edges"] == pytest.approx(
        body["n_documents"] * body["mean_doc_length"]
    )


def test_document_preview_first_1000_chars(client):
    doc_id = "doc-0000"
    full = client.get(f"/api/documents/{doc_id}").json()
    preview = client.get(f"/api/documents/{doc_id}?preview=1000").json()
    assert preview["text"] == full["text"][:1000]
    assert preview["title"] == full["title"]
    small = client.get(f"/api/documents/{doc_id}?preview=10").json()
    assert len(small["text"]) == 10
    assert small["truncated"] is True


def test_document_not_found(client):
    resp = client.get("/api/documents/nope")
    assert resp.status_code == 404
    assert resp.json()["error"]["code"] == "NotFound"


def test_map_payload_shape(client):
    body = client.get("/api/map").json()
    assert body["snapshot"] == 0
    assert body["order"] >= 3
    assert len(body["hexes"]) == 200
    assert set(body["hexes"][0]) == {"doc_id", "q", "r"}
    assert body["boundaries"]
    for level, clusters in body["boundaries"].items():
        for cluster, rings in clusters.items():
            assert rings and all(len(p) == 2 for ring in rings for p in ring)


def test_map_snapshot_qualified_reads_are_byte_identical(client):
    a = client.get("/api/map?snapshot=0&level=0")
    b = client.get("/api/map?snapshot=0&level=0")
    assert a.content == b.content
    assert list(a.json()["boundaries"].keys()) == ["0"]


def test_map_bad_level(client):
    assert client.get("/api/map?snapshot=0&level=99").status_code == 404


def test_random_sample_endpoint(client):
    resp = client.post("/api/sample/random", json={"n": 10, "seed": 3})
    body = resp.json()
    assert len(body["docs"]) == 10
    again = client.post("/api/sample/random", json={"n": 10, "seed": 3}).json()
    assert again["docs"] == body["docs"]
    bad = client.post("/api/sample/random", json={"n": 9999, "seed": 3})
    assert bad.status_code == 400


def test_cluster_sample_endpoint(client):
    tree = client.get("/api/words/tree?snapshot=0&codes=").json()
    body = client.post(
        "/api/sample/cluster",
        json={"snapshot": 0, "cluster_id": 0, "level": 0, "k": 5},
    ).json()
    assert len(body["docs"]) <= 5
    probs = [d["probability"] for d in body["docs"]]
    assert probs == sorted(probs, reverse=True)
    missing = client.post(
        "/api/sample/cluster",
        json={"snapshot": 0, "cluster_id": 10**6, "level": 0},
    )
    assert missing.status_code == 404


def test_keyword_candidates_endpoint(client):
    resp = client.get("/api/keywords/candidates?doc=doc-0000&start=0&end=120")
    body = resp.json()
    assert body["candidates"], "span should yield candidates"
    for cand in body["candidates"]:
        assert cand["stem"]
        assert len(cand["word_ids"]) == len(cand["terms"])
    bad = client.get("/api/keywords/candidates?doc=doc-0000&start=50&end=10")
    assert bad.status_code == 400


def test_highlight_crud_roundtrip(client):
    cands = client.get(
        "/api/keywords/candidates?doc=doc-0002&start=0&end=200"
    ).json()["candidates"]
    stems = [cands[0]["stem"], cands[1]["stem"]]
    created = client.post("/api/highlights", json={
        "doc_id": "doc-0002", "start": 0, "end": 200,
        "code_label": "service-code", "keywords": stems, "memo": "via api",
    })
    assert created.status_code == 201
    payload = created.json()
    assert payload["version"] >= 1
    h = payload["highlight"]
    assert h["code_label"] == "service-code"
    assert h["keywords"], "stem selection should expand to vocabulary ids"

    listed = client.get("/api/highlights?doc=doc-0002").json()
    assert any(item["id"] == h["id"] for item in listed["highlights"])

    patched = client.patch(f"/api/highlights/{h['id']}", json={"memo": "edited"})
    assert patched.json()["highlight"]["memo"] == "edited"
    v_after_patch = patched.json()["version"]

    overlap = client.post("/api/highlights", json={
        "doc_id": "doc-0002", "start": 100, "end": 150, "code_label": "x",
    })
    assert overlap.status_code == 409
    assert overlap.json()["error"]["code"] == "OverlappingHighlight"

    deleted = client.delete(f"/api/highlights/{h['id']}")
    assert deleted.json()["version"] == v_after_patch + 1
    assert client.delete(f"/api/highlights/{h['id']}").status_code == 404


def test_codes_and_categories(client):
    client.post("/api/highlights", json={
        "doc_id": "doc-0003", "start": 0, "end": 40, "code_label": "cat-me",
    })
    codes = client.get("/api/codes").json()["codes"]
    target = next(c for c in codes if c["label"] == "cat-me")
    resp = client.post(f"/api/codes/{target['id']}/category", json={"label": "theme-1"})
    assert resp.json()["category"]["color_index"] == 0
    reserved = client.post("/api/codes/non-keyword/category", json={"label": "x"})
    assert reserved.status_code == 400
    codes2 = client.get("/api/codes").json()["codes"]
    target2 = next(c for c in codes2 if c["id"] == target["id"])
    assert target2["category"]["label"] == "theme-1"


def test_words_tree_endpoint(client):
    cands = client.get(
        "/api/keywords/candidates?doc=doc-0004&start=0&end=300"
    ).json()["candidates"]
    client.post("/api/highlights", json={
        "doc_id": "doc-0004", "start": 0, "end": 300,
        "code_label": "tree-code", "keywords": [cands[0]["stem"]],
    })
    codes = client.get("/api/codes").json()["codes"]
    code = next(c for c in codes if c["label"] == "tree-code")
    body = client.get(f"/api/words/tree?snapshot=0&codes={code['id']}").json()
    assert body["roots"], "keyworded code must yield a pruned tree"
    root = body["roots"][0]
    assert root["top_words"] and len(root["top_words"]) <= 10
    missing = client.get("/api/words/tree?snapshot=0&codes=zzz")
    assert missing.status_code == 404


def test_model_update_and_busy_conflict(client):
    first = client.post("/api/model/update", json={"seed": 9, "restarts": 1,
                                                   "sweeps": 5})
    assert first.status_code == 202
    job = first.json()["job"]
    second = client.post("/api/model/update", json={"seed": 10})
    # either the first finished extremely fast, or we get the Busy conflict
    if second.status_code == 409:
        assert second.json()["error"]["code"] == "Busy"
    done = wait_for_job(client, job["job_id"])
    assert done["state"] == "done"
    snaps = client.get("/api/snapshots").json()["snapshots"]
    assert any(s["snapshot_id"] == done["snapshot_id"] for s in snaps)
    if second.status_code == 202:
        wait_for_job(client, second.json()["job"]["job_id"])


def test_snapshots_listing(client):
    snaps = client.get("/api/snapshots").json()["snapshots"]
    assert snaps[0]["snapshot_id"] == 0
    ids = [s["snapshot_id"] for s in snaps]
    assert ids == sorted(ids)


def test_export_csv_endpoint(client):
    resp = client.get("/api/export.csv")
    assert resp.status_code == 200
    assert "csv" in resp.headers["content-type"]
    rows = list(csv.reader(io.StringIO(resp.text)))
    assert rows[0][0] == "doc_id"
    n_highlights = len(client.get("/api/highlights").json()["highlights"])
    assert len(rows) == n_highlights + 1


def test_unknown_job(client):
    assert client.get("/api/jobs/job-999").status_code == 404
