import json

import numpy as np
import pytest

from geo2sound.alignment import TrainConfig
from geo2sound.synthworld import SynthWorldConfig, generate_world, run_desk_benchmark
from geo2sound.tensor_io import load_manifest, read_tensor


def _fast_cfg(**kw):
    base = dict(
        n_scenes=12,
        image_size=32,
        patch_grid=4,
        patch_dim=32,
        candidate_count=6,
        seed=3,
        write_assets=True,
    )
    base.update(kw)
    return SynthWorldConfig(**base)


def test_empty_world(tmp_path):
    cfg = _fast_cfg(n_scenes=0)
    generate_world(cfg, out_dir=tmp_path)
    assert load_manifest(tmp_path / "scenes.json") == []


def test_noiseless_compatible_has_cosine_one():
    cfg = _fast_cfg(noise_sigma=0.0, write_assets=False)
    world = generate_world(cfg)
    for scene in world.scenes:
        clean = world.planted_map.T @ scene.true_descriptor
        compat = scene.candidates[scene.compatible_index]
        cos = clean @ compat / (np.linalg.norm(clean) * np.linalg.norm(compat))
        assert cos == pytest.approx(1.0, abs=1e-9)


def test_exactly_one_compatible_and_unit_candidates():
    world = generate_world(_fast_cfg(write_assets=False, n_scenes=30, candidate_count=10))
    for scene in world.scenes:
        assert 0 <= scene.compatible_index < 6  # always inside the default six-sample plan
        norms = np.linalg.norm(scene.candidates, axis=1)
        assert norms == pytest.approx(np.ones(10), abs=1e-9)
        clean = world.planted_map.T @ scene.true_descriptor
        cosines = scene.candidates @ clean / (norms * np.linalg.norm(clean))
        assert int(np.argmax(cosines)) == scene.compatible_index


def test_descriptor_structure():
    world = generate_world(_fast_cfg(write_assets=False, n_scenes=50))
    G = world.geo_matrix()
    assert (G[:, 2] == 0).all()  # built-up never planted
    assert ((G[:, :4] >= 0) & (G[:, :4] <= 1)).all()
    sums = G[:, 0] + G[:, 1] + G[:, 3]
    assert (sums <= 1 + 1e-9).all()
    assert (G[:, 4] >= 0).all() and (G[:, 4] <= np.log(5) + 1e-9).all()


def test_world_files_deterministic(tmp_path):
    cfg = _fast_cfg()
    a, b = tmp_path / "a", tmp_path / "b"
    generate_world(cfg, out_dir=a)
    generate_world(cfg, out_dir=b)
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_world_assets_consumable(tmp_path):
    from geo2sound.pipeline import resolve_path

    cfg = _fast_cfg()
    world = generate_world(cfg, out_dir=tmp_path)
    manifest_path = tmp_path / "scenes.json"
    scenes = load_manifest(manifest_path)
    assert len(scenes) == cfg.n_scenes
    first = scenes[0]
    img = read_tensor(resolve_path(manifest_path, first.image_path))
    assert img.shape == (32, 32, 3)
    assert img.min() >= 0.0 and img.max() <= 1.0
    patches = read_tensor(resolve_path(manifest_path, first.patch_embedding_path))
    assert patches.shape == (4, 4, 32)
    assert len(first.audio_embedding_paths) == 6
    ref = read_tensor(resolve_path(manifest_path, first.reference_audio_embedding_path))
    assert ref.shape == (32,)
    assert first.geo_descriptor == pytest.approx(list(world.scenes[0].true_descriptor), abs=1e-6)


def test_desk_benchmark_small_world(tmp_path):
    cfg = _fast_cfg(n_scenes=160, candidate_count=10, write_assets=False, seed=11)
    train = TrainConfig(max_epochs=60, hidden_dim=64, seed=42)
    report = run_desk_benchmark(cfg, train, sweep=(1, 3, 6, 10), out_dir=tmp_path)
    arms = report["arms"]
    assert arms["full_geo"]["best_val_cosine"] > arms["single_road"]["best_val_cosine"]
    assert arms["single_road"]["best_val_cosine"] > arms["zero_input"]["best_val_cosine"]
    assert arms["full_geo"]["best_val_cosine"] > arms["shuffled_geo"]["best_val_cosine"]
    assert arms["full_geo"]["mean_geoalign"] > arms["zero_input"]["mean_geoalign"]
    geoaligns = [row["mean_geoalign"] for row in report["sweep"]]
    assert geoaligns == sorted(geoaligns)
    acc6 = next(r["selection_accuracy"] for r in report["sweep"] if r["n"] == 6)
    assert acc6 >= 0.8  # small world; the full-scale bound is checked in acceptance
    assert (tmp_path / "report.json").is_file()
    for arm in arms:
        assert (tmp_path / "models" / f"{arm}.bin").is_file()
    loaded = json.loads((tmp_path / "report.json").read_text())
    assert loaded["arms"] == arms


def test_benchmark_loss_cosine_identity():
    cfg = _fast_cfg(n_scenes=80, write_assets=False, seed=5)
    report = run_desk_benchmark(cfg, TrainConfig(max_epochs=5, hidden_dim=16))
    for arm in report["arms"].values():
        assert abs(arm["best_val_loss"] - (1.0 - arm["best_val_cosine"])) < 1e-9
