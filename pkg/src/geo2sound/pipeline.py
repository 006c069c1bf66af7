"""Manifest-level drivers wiring the stages together.

These functions are the working core behind both the HTTP service and the
CLI: they read tensor files and manifests, call the algorithmic modules,
and write the CSV/JSON artifacts each stage owns. Scene-level work runs in
manifest order (optionally on a thread pool) and results are always
written back in manifest order, so outputs do not depend on the job count.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from PIL import Image

from .alignment import (
    TrainConfig,
    fit_pca,
    load_projection_model,
    mlp_forward,
    save_projection_model,
    select_candidate,
    train_projection,
    validation_split,
)
from .config import GeoAttrConfig
from .errors import Geo2SoundError, MissingInput, PartialFailure
from .forest import ForestConfig, load_forest, save_forest, two_stage_train
from .geoattr import (
    CLASS_NAMES,
    GeoDescriptor,
    cluster_descriptor,
    extract_geo_descriptor,
    kmeans,
    pseudo_label,
)
from .geoattr.visual import ImageFeatures, upsample_labels
from .hypothesis import (
    HttpGeneratorClient,
    HypothesisSet,
    ReplayStubClient,
    build_candidate_plan,
    build_expansion_prompt,
    submit_generation,
)
from .metrics import (
    gaussian_stats,
    frechet_distance,
    inception_score,
    kl_divergence,
    mean_clap_similarity,
    overlap,
)
from .tensor_io import SceneManifest, load_manifest, read_tensor, write_tensor

GEO_CSV_FIELDS = ("scene_id", "vegetation", "water", "built_up", "road", "land_use_mix")


def resolve_path(manifest_path: str | Path, p: str) -> Path:
    """Manifest paths may be relative; they resolve against the manifest's directory."""
    q = Path(p)
    return q if q.is_absolute() else Path(manifest_path).parent / q


def load_scene_image(scene: SceneManifest, manifest_path: str | Path) -> np.ndarray:
    """Load the scene RGB image from a float32 tensor or a PNG sidecar."""
    path = resolve_path(manifest_path, scene.image_path)
    if path.suffix.lower() == ".npy":
        return read_tensor(path)
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def write_geo_csv(path: str | Path, rows: list[tuple[str, GeoDescriptor]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GEO_CSV_FIELDS)
        for scene_id, desc in rows:
            writer.writerow(
                [scene_id] + [f"{v:.10g}" for v in desc.as_array()]
            )


def read_geo_csv(path: str | Path) -> list[tuple[str, np.ndarray]]:
    out: list[tuple[str, np.ndarray]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out.append(
                (
                    row["scene_id"],
                    np.array([float(row[k]) for k in GEO_CSV_FIELDS[1:]], dtype=np.float64),
                )
            )
    return out


# --- attribute extraction -------------------------------------------------


def extract_attrs_run(
    manifest_path: str | Path,
    forest_path: str | Path,
    out_csv: str | Path,
    cfg: GeoAttrConfig | None = None,
    keep_going: bool = False,
    jobs: int = 1,
) -> dict:
    """Run the geo-descriptor pipeline over a manifest and write geo.csv."""
    cfg = cfg or GeoAttrConfig()
    scenes = load_manifest(manifest_path)
    forest = load_forest(forest_path)

    def work(scene: SceneManifest):
        image = load_scene_image(scene, manifest_path)
        patches = read_tensor(resolve_path(manifest_path, scene.patch_embedding_path))
        return extract_geo_descriptor(image, patches, forest, cfg)

    results: list[GeoDescriptor | None] = [None] * len(scenes)
    failures: list[dict] = []
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(work, s) for s in scenes]
            for i, fut in enumerate(futures):
                try:
                    results[i] = fut.result()
                except Exception as exc:  # noqa: BLE001
                    failures.append({"scene_id": scenes[i].scene_id, "error": str(exc)})
    else:
        for i, scene in enumerate(scenes):
            try:
                results[i] = work(scene)
            except Exception as exc:  # noqa: BLE001
                failures.append({"scene_id": scene.scene_id, "error": str(exc)})
    if failures and not keep_going:
        raise Geo2SoundError(
            f"{len(failures)} scene(s) failed, first: {failures[0]['scene_id']}: {failures[0]['error']}"
        )
    rows = [(s.scene_id, r) for s, r in zip(scenes, results) if r is not None]
    write_geo_csv(out_csv, rows)
    return {"rows": len(rows), "failures": failures, "out_csv": str(out_csv)}


def build_cluster_training_set(
    manifest_path: str | Path,
    cfg: GeoAttrConfig | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Cluster every scene and pseudo-label the cluster features for training."""
    cfg = cfg or GeoAttrConfig()
    scenes = load_manifest(manifest_path)
    features: list[np.ndarray] = []
    labels: list[int] = []
    for scene in scenes:
        image = load_scene_image(scene, manifest_path)
        patches = read_tensor(resolve_path(manifest_path, scene.patch_embedding_path))
        h, w, dim = patches.shape
        model = kmeans(
            patches.reshape(h * w, dim).astype(np.float64),
            k=cfg.k,
            seed=cfg.seed,
            max_iter=cfg.max_iter,
            tol=cfg.tol,
            n_init=cfg.n_init,
        )
        feats = ImageFeatures(image)
        label_map = upsample_labels(model.labels.reshape(h, w), *feats.gray.shape)
        for j in range(model.k):
            if not (label_map == j).any():
                continue
            d = cluster_descriptor(feats, label_map, j, model.centroids[j])
            if d.area_ratio < cfg.min_area_ratio:
                continue
            cls, _score = pseudo_label(d)
            features.append(d.feature())
            labels.append(cls)
    if not features:
        raise Geo2SoundError("no clusters survived the area filter")
    return np.vstack(features), np.array(labels, dtype=np.int64)


def train_attrs_classifier_run(
    out_path: str | Path,
    forest_cfg: ForestConfig | None = None,
    features_path: str | Path | None = None,
    labels_path: str | Path | None = None,
    manifest_path: str | Path | None = None,
    geoattr_cfg: GeoAttrConfig | None = None,
    emit_features_prefix: str | Path | None = None,
) -> dict:
    """Two-stage-train the cluster classifier from tensors or from a manifest."""
    forest_cfg = forest_cfg or ForestConfig()
    if features_path is not None and labels_path is not None:
        X = read_tensor(features_path)
        y = read_tensor(labels_path).astype(np.int64)
    elif manifest_path is not None:
        X, y = build_cluster_training_set(manifest_path, geoattr_cfg)
        if emit_features_prefix is not None:
            write_tensor(f"{emit_features_prefix}.features.npy", X.astype(np.float32))
            write_tensor(f"{emit_features_prefix}.labels.npy", y.astype(np.float32))
    else:
        raise Geo2SoundError("need either features+labels tensors or a manifest")
    forest, kept = two_stage_train(X, y, forest_cfg, n_classes=len(CLASS_NAMES))
    save_forest(out_path, forest)
    return {
        "n_samples": int(X.shape[0]),
        "kept": int(kept.size),
        "stage1_fallback": forest.stage1_fallback,
        "out_path": str(out_path),
    }


# --- alignment ------------------------------------------------------------


def train_align_run(
    geo_csv: str | Path,
    targets_npy: str | Path,
    out_model: str | Path,
    cfg: TrainConfig | None = None,
    history_out: str | Path | None = None,
) -> dict:
    """Train the geo-to-acoustic projection from geo.csv plus raw audio embeddings.

    Rows of the target tensor pair with geo.csv rows in order. The split is
    drawn first, PCA is fitted on the training rows only, and all targets
    are projected and L2-normalized before optimization.
    """
    cfg = cfg or TrainConfig()
    geo_rows = read_geo_csv(geo_csv)
    if not geo_rows:
        raise Geo2SoundError(f"{geo_csv} has no rows")
    geo = np.vstack([g for _, g in geo_rows])
    targets_raw = read_tensor(targets_npy).astype(np.float64)
    if targets_raw.ndim != 2 or targets_raw.shape[0] != geo.shape[0]:
        raise Geo2SoundError(
            f"target rows {targets_raw.shape} do not match geo rows {geo.shape[0]}"
        )
    split = validation_split(geo.shape[0], cfg.val_fraction, cfg.seed)
    pca = fit_pca(targets_raw[split[0]], dims=min(cfg.pca_dims, targets_raw.shape[1]))
    targets = pca.transform(targets_raw)
    targets = targets / np.maximum(np.linalg.norm(targets, axis=1, keepdims=True), 1e-12)
    model, history = train_projection(geo, targets, cfg, split=split)
    model.pca = pca
    save_projection_model(out_model, model)
    if history_out is not None:
        with open(history_out, "w", encoding="utf-8") as fh:
            json.dump(history, fh, indent=2, sort_keys=True)
            fh.write("\n")
    best = min(history, key=lambda r: r["val_loss"])
    return {
        "best_val_cosine": best["val_cosine"],
        "best_val_loss": best["val_loss"],
        "best_epoch": best["best_epoch"],
        "epochs_run": len(history),
        "out_model": str(out_model),
    }


SELECTIONS_FIELDS = ("scene_id", "selected_index", "geoalign", "scores")


def select_run(
    model_path: str | Path,
    manifest_path: str | Path,
    out_csv: str | Path,
    geo_csv: str | Path | None = None,
) -> dict:
    """Rank every scene's candidates with the trained projection model."""
    model = load_projection_model(model_path)
    scenes = load_manifest(manifest_path)
    geo_by_id = dict(read_geo_csv(geo_csv)) if geo_csv is not None else {}
    rows = []
    for scene in scenes:
        if scene.scene_id in geo_by_id:
            g = geo_by_id[scene.scene_id]
        elif scene.geo_descriptor is not None:
            g = np.asarray(scene.geo_descriptor, dtype=np.float64)
        else:
            raise Geo2SoundError(f"scene {scene.scene_id} has no geo descriptor")
        if not scene.audio_embedding_paths:
            raise Geo2SoundError(f"scene {scene.scene_id} has no candidates")
        candidates = np.vstack(
            [read_tensor(resolve_path(manifest_path, p)).reshape(-1) for p in scene.audio_embedding_paths]
        )
        if model.pca is not None and candidates.shape[1] == model.pca.mean.shape[0]:
            candidates = model.pca.transform(candidates)
        query = mlp_forward(model, g)
        result = select_candidate(query, candidates)
        rows.append(
            {
                "scene_id": scene.scene_id,
                "selected_index": result.selected,
                "geoalign": result.geoalign,
                "scores": json.dumps([float(s) for s in result.scores]),
            }
        )
    with open(out_csv, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SELECTIONS_FIELDS)
        writer.writeheader()
        writer.writerows(rows)
    return {"rows": len(rows), "out_csv": str(out_csv)}


def read_selections_csv(path: str | Path) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return [
            {
                "scene_id": row["scene_id"],
                "selected_index": int(row["selected_index"]),
                "geoalign": float(row["geoalign"]),
                "scores": json.loads(row["scores"]),
            }
            for row in csv.DictReader(fh)
        ]


# --- evaluation -----------------------------------------------------------

REQUIRED_EVAL_FILES = ("embeddings_a.npy", "embeddings_b.npy", "class_probs.npy")


def evaluate_run(
    gen_dir: str | Path,
    ref_dir: str | Path,
    report_path: str | Path,
    selections_csv: str | Path | None = None,
) -> dict:
    """Assemble the metric report from embedding/class-probability tensors.

    Each directory must hold ``embeddings_a.npy`` (FAD space),
    ``embeddings_b.npy`` (FD space) and ``class_probs.npy``. The generated
    directory may add ``clap_text.npy``/``clap_audio.npy`` for the
    text-audio cosine; a selections CSV contributes the GeoAlign mean.
    Writes the JSON report plus a flat CSV beside it.
    """
    gen_dir, ref_dir = Path(gen_dir), Path(ref_dir)
    missing = [
        str(d / name)
        for d in (gen_dir, ref_dir)
        for name in REQUIRED_EVAL_FILES
        if not (d / name).is_file()
    ]
    if missing:
        raise MissingInput(f"{len(missing)} required input file(s) absent", missing)

    gen_a = read_tensor(gen_dir / "embeddings_a.npy").astype(np.float64)
    ref_a = read_tensor(ref_dir / "embeddings_a.npy").astype(np.float64)
    gen_b = read_tensor(gen_dir / "embeddings_b.npy").astype(np.float64)
    ref_b = read_tensor(ref_dir / "embeddings_b.npy").astype(np.float64)
    gen_p = read_tensor(gen_dir / "class_probs.npy").astype(np.float64)
    ref_p = read_tensor(ref_dir / "class_probs.npy").astype(np.float64)

    report: dict = {
        "schema_version": 1,
        "fad": frechet_distance(gaussian_stats(gen_a), gaussian_stats(ref_a)),
        "fd": frechet_distance(gaussian_stats(gen_b), gaussian_stats(ref_b)),
        "kl": kl_divergence(gen_p, ref_p),
        "ovl": overlap(gen_p, ref_p),
        "is_score": inception_score(gen_p),
        "clap": None,
        "geoalign_mean": None,
        "per_scene": [],
    }
    text_path, audio_path = gen_dir / "clap_text.npy", gen_dir / "clap_audio.npy"
    if text_path.is_file() and audio_path.is_file():
        report["clap"] = mean_clap_similarity(read_tensor(text_path), read_tensor(audio_path))
    if selections_csv is not None:
        selections = read_selections_csv(selections_csv)
        report["geoalign_mean"] = float(np.mean([s["geoalign"] for s in selections]))
        report["per_scene"] = [
            {"scene_id": s["scene_id"], "geoalign": s["geoalign"], "selected_index": s["selected_index"]}
            for s in selections
        ]
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    csv_path = Path(report_path).with_suffix(".csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        for key in ("fad", "fd", "clap", "kl", "ovl", "is_score", "geoalign_mean"):
            writer.writerow([key, "" if report[key] is None else f"{report[key]:.10g}"])
    return report


# --- hypothesis planning ----------------------------------------------------


def hypothesis_plan_run(
    manifest_path: str | Path,
    out_path: str | Path,
    mode: str = "ours",
    samples_per_hypothesis: int = 2,
    base_seed: int = 0,
    emit_prompts: bool = False,
    replay_dir: str | Path | None = None,
    submit: bool = False,
    generator_url: str | None = None,
) -> dict:
    """Build candidate plans for every scene in a manifest, optionally submitting them.

    Scene hypotheses come from ``text_hypotheses``: a single entry is the
    base caption (expansion prompts can be emitted for it), three entries
    are treated as the already-expanded set. With ``replay_dir`` the plans
    run against the file-replay stub; with ``submit`` alone they go to the
    live generator endpoint (``GEO2SOUND_GENERATOR_URL``). Artifact
    references land in the plan document in plan order.
    """
    scenes = load_manifest(manifest_path)
    plans = []
    prompts = {}
    total_entries = 0
    for scene in scenes:
        texts = scene.text_hypotheses
        if not texts:
            raise Geo2SoundError(f"scene {scene.scene_id} has no text hypotheses")
        if mode == "basic" or len(texts) == 1:
            h = HypothesisSet(c0=texts[0], mode="basic")
            if mode != "basic" and emit_prompts:
                prompts[scene.scene_id] = build_expansion_prompt(texts[0], mode)
        elif len(texts) == 3:
            h = HypothesisSet(c0=texts[0], expansions=list(texts[1:]), mode=mode)
        else:
            raise Geo2SoundError(
                f"scene {scene.scene_id}: expected 1 or 3 text hypotheses, got {len(texts)}"
            )
        plan = build_candidate_plan(scene.scene_id, h, samples_per_hypothesis, base_seed)
        total_entries += len(plan.entries)
        plans.append((plan, plan.to_json_obj()))

    submitted = 0
    if replay_dir is not None or submit:
        if replay_dir is not None:
            client = ReplayStubClient(replay_dir)
        else:
            url = generator_url or os.environ.get("GEO2SOUND_GENERATOR_URL", "")
            client = HttpGeneratorClient(url)
        failures: list[str] = []
        for plan, obj in plans:
            try:
                obj["artifacts"] = submit_generation(plan, client)
                submitted += len(plan.entries)
            except PartialFailure as exc:
                failures.extend(
                    f"{plan.scene_id} h{e.hypothesis_index}/s{e.sample_index}: {msg}"
                    for e, msg in exc.failures
                )
        if failures:
            raise PartialFailure(
                f"{len(failures)} generation(s) failed across {len(plans)} scene(s)", failures
            )

    doc = {"schema_version": 1, "mode": mode, "base_seed": base_seed,
           "plans": [obj for _, obj in plans]}
    if emit_prompts:
        doc["expansion_prompts"] = prompts
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    result = {"scenes": len(plans), "entries_total": total_entries, "out_path": str(out_path)}
    if replay_dir is not None or submit:
        result["submitted"] = submitted
    return result
