import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from geo2sound.service import create_app
from geo2sound.synthworld import SynthWorldConfig, generate_world
from geo2sound.tensor_io import write_tensor


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def world_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("svc_world")
    cfg = SynthWorldConfig(n_scenes=16, image_size=48, patch_grid=6, patch_dim=48,
                           candidate_count=6, seed=19, write_assets=True)
    world = generate_world(cfg, out_dir=d)
    return d, world


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok" and body["version"]


def test_classifier_then_extract_flow(client, world_dir, tmp_path_factory):
    d, world = world_dir
    out = tmp_path_factory.mktemp("svc_models")
    r = client.post("/attrs/train-classifier", json={
        "out_path": str(out / "forest.json"),
        "manifest_path": str(d / "scenes.json"),
        "overrides": {"forest": {"n_trees": 40, "features_per_split": 9}, "geoattr": {"k": 6}},
    })
    assert r.status_code == 200, r.text
    body = r.json()
    assert body["n_samples"] > 0 and body["kept"] > 0

    r = client.post("/attrs/extract", json={
        "manifest_path": str(d / "scenes.json"),
        "forest_path": str(out / "forest.json"),
        "out_csv": str(out / "geo.csv"),
        "overrides": {"geoattr": {"k": 6}},
    })
    assert r.status_code == 200, r.text
    assert r.json()["rows"] == 16
    header = (out / "geo.csv").read_text().splitlines()[0]
    assert header == "scene_id,vegetation,water,built_up,road,land_use_mix"


def test_align_train_select_evaluate_flow(client, tmp_path_factory):
    d = tmp_path_factory.mktemp("svc_align")
    world = generate_world(SynthWorldConfig(n_scenes=200, candidate_count=6, seed=23, write_assets=False), out_dir=d)
    geo_csv = d / "geo.csv"
    lines = ["scene_id,vegetation,water,built_up,road,land_use_mix"]
    for s in world.scenes:
        lines.append(s.scene_id + "," + ",".join(f"{v:.10g}" for v in s.true_descriptor))
    geo_csv.write_text("\n".join(lines) + "\n")
    write_tensor(d / "targets.npy", world.reference_matrix().astype(np.float32))

    r = client.post("/align/train", json={
        "geo_csv": str(geo_csv),
        "targets_npy": str(d / "targets.npy"),
        "out_model": str(d / "model.bin"),
        "history_out": str(d / "history.json"),
        "overrides": {"train": {"max_epochs": 25, "hidden_dim": 48}},
    })
    assert r.status_code == 200, r.text
    body = r.json()
    assert body["best_val_cosine"] > 0.8
    assert abs(body["best_val_loss"] - (1 - body["best_val_cosine"])) < 1e-9

    r = client.post("/align/select", json={
        "model_path": str(d / "model.bin"),
        "manifest_path": str(d / "scenes.json"),
        "out_csv": str(d / "selections.csv"),
    })
    assert r.status_code == 200, r.text
    assert r.json()["rows"] == 200

    gen, ref = d / "gen", d / "ref"
    gen.mkdir(), ref.mkdir()
    rng = np.random.default_rng(0)
    for sub in (gen, ref):
        write_tensor(sub / "embeddings_a.npy", rng.normal(size=(50, 8)).astype(np.float32))
        write_tensor(sub / "embeddings_b.npy", rng.normal(size=(50, 4)).astype(np.float32))
        write_tensor(sub / "class_probs.npy", rng.dirichlet(np.ones(5), size=50).astype(np.float32))
    r = client.post("/metrics/evaluate", json={
        "gen_dir": str(gen),
        "ref_dir": str(ref),
        "report_out": str(d / "report.json"),
        "selections_csv": str(d / "selections.csv"),
    })
    assert r.status_code == 200, r.text
    body = r.json()
    assert body["fad"] >= 0 and body["ovl"] <= 1
    assert body["geoalign_mean"] is not None


def test_synth_bench_endpoint(client, tmp_path_factory):
    out = tmp_path_factory.mktemp("svc_bench")
    r = client.post("/synth/bench", json={
        "out_dir": str(out),
        "world": {"n_scenes": 80, "write_assets": False, "seed": 3, "candidate_count": 10},
        "train": {"max_epochs": 8, "hidden_dim": 16},
        "sweep": [1, 6],
    })
    assert r.status_code == 200, r.text
    body = r.json()
    assert set(body["arms"]) == {"full_geo", "single_road", "zero_input", "shuffled_geo"}
    assert [row["n"] for row in body["sweep"]] == [1, 6]
    assert (out / "report.json").is_file()
    assert (out / "models" / "full_geo.bin").is_file()


def test_hypothesis_plan_endpoint(client, world_dir, tmp_path_factory):
    d, _ = world_dir
    out = tmp_path_factory.mktemp("svc_hyp") / "plans.json"
    r = client.post("/hypothesis/plan", json={
        "manifest_path": str(d / "scenes.json"),
        "out_path": str(out),
        "mode": "ours",
        "samples_per_hypothesis": 2,
    })
    assert r.status_code == 200, r.text
    assert r.json()["scenes"] == 16
    assert json.loads(out.read_text())["mode"] == "ours"


def test_domain_errors_are_422(client, tmp_path_factory):
    d = tmp_path_factory.mktemp("svc_err")
    r = client.post("/metrics/evaluate", json={
        "gen_dir": str(d), "ref_dir": str(d), "report_out": str(d / "r.json"),
    })
    assert r.status_code == 422
    assert r.json()["error_type"] == "MissingInput"

    r = client.post("/attrs/extract", json={
        "manifest_path": str(d / "missing.json"),
        "forest_path": str(d / "missing_forest.json"),
        "out_csv": str(d / "geo.csv"),
    })
    assert r.status_code == 422


def test_validation_errors_are_422(client):
    r = client.post("/align/select", json={"model_path": "x"})  # missing required fields
    assert r.status_code == 422
