import json
import time

import pytest

from textatlas.blockmodel import word_cluster_of
from textatlas.corpus import TokenizerConfig
from textatlas.errors import Busy, NotFound, TextAtlasError
from textatlas.inference import InferenceConfig
from textatlas.project import ModelSnapshot, Project

from .conftest import demo_corpus_text

FAST = InferenceConfig(seed=5, restarts=1, sweeps_per_level=8, max_levels=4)


@pytest.fixture
def project(tmp_path):
    proj = Project.init(tmp_path / "proj")
    proj.ingest(demo_corpus_text().splitlines())
    return proj


def test_init_refuses_double_init(tmp_path):
    Project.init(tmp_path / "p")
    with pytest.raises(TextAtlasError):
        Project.init(tmp_path / "p")


def test_project_reload_round_trip(tmp_path, project):
    doc = project.corpus.documents[0]
    project.store.create_highlight(doc.id, (0, 25), "alpha")
    project.save_annotations()
    again = Project(project.directory)
    assert again.corpus.stats == project.corpus.stats
    assert again.store.canonical_json() == project.store.canonical_json()


def test_fit_creates_snapshot_zero(project):
    snap = project.fit(FAST)
    assert snap.snapshot_id == 0
    assert project.snapshot_ids() == [0]
    assert project.list_snapshots()[0]["snapshot_id"] == 0
    # second fit appends
    snap2 = project.fit(FAST)
    assert snap2.snapshot_id == 1
    assert project.snapshot_ids() == [0, 1]


def test_snapshot_json_round_trip(project):
    snap = project.fit(FAST)
    path = project.snapshot_path(snap.snapshot_id)
    payload = json.loads(path.read_text())
    for key in ("snapshot_id", "created_at", "annotation_version", "objective",
                "levels", "node_order", "duration_s", "config_digest"):
        assert key in payload
    loaded = ModelSnapshot.from_json(payload)
    assert loaded.partition.levels == snap.partition.levels
    assert loaded.objective.total == snap.objective.total
    # byte-identical canonical re-serialization
    assert json.dumps(loaded.to_json(), sort_keys=True) == json.dumps(
        snap.to_json(), sort_keys=True
    )


def test_snapshot_records_annotation_version_and_must_link(project):
    doc = project.corpus.documents[0]
    kws = sorted(project.store.allowed_keyword_ids(doc.id, 0, len(doc.body)))[:3]
    project.store.create_highlight(doc.id, (0, len(doc.body)), "group", keywords=kws)
    version = project.store.version
    snap = project.fit(FAST)
    assert snap.annotation_version == version
    clusters = {word_cluster_of(snap.partition, w, 0) for w in kws}
    assert len(clusters) == 1


def test_layout_cache_keyed_by_snapshot(project):
    snap = project.fit(FAST)
    layout1 = project.layout_for(snap.snapshot_id)
    layout2 = project.layout_for(snap.snapshot_id)
    assert layout1 is layout2
    assert len(layout1.doc_cells) == len(project.corpus.model_documents)


def test_request_update_background(project):
    job = project.request_update(FAST)
    assert job.state in ("queued", "running")
    # annotations stay editable while the job runs
    doc = project.corpus.documents[1]
    project.store.create_highlight(doc.id, (0, 20), "during-run")
    deadline = time.time() + 60
    last_progress = 0.0
    while job.state not in ("done", "failed") and time.time() < deadline:
        assert job.progress >= last_progress
        last_progress = job.progress
        time.sleep(0.05)
    assert job.state == "done", job.error
    assert job.snapshot_id is not None
    snap = project.snapshot(job.snapshot_id)
    # mutation happened after submission: recorded version predates it
    assert snap.annotation_version < project.store.version


def test_second_concurrent_update_rejected(project):
    job = project.request_update(FAST)
    if job.state in ("queued", "running"):
        with pytest.raises(Busy):
            project.request_update(FAST)
    while job.state not in ("done", "failed"):
        time.sleep(0.05)
    # after completion a new job is fine
    job2 = project.request_update(FAST)
    while job2.state not in ("done", "failed"):
        time.sleep(0.05)
    assert job2.state == "done"
    assert job2.snapshot_id > job.snapshot_id


def test_job_status_lookup(project):
    job = project.request_update(FAST)
    assert project.job_status(job.job_id) is job
    with pytest.raises(NotFound):
        project.job_status("nope")
    while job.state not in ("done", "failed"):
        time.sleep(0.05)


def test_ensure_initial_snapshot(project):
    sid = project.ensure_initial_snapshot(FAST)
    assert sid == 0
    assert project.ensure_initial_snapshot(FAST) == 0
