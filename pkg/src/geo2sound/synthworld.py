"""Synthetic world with a planted geography-to-acoustics map.

Each scene samples an archetype-weighted class layout over
{vegetation, water, road, other} (the heuristic score table cannot emit
``built_up``, so planted scenes leave that proportion at zero), paints a
patch-aligned RGB image whose palette pseudo-labels correctly, draws
class-conditional Gaussian patch embeddings, and plants acoustic structure:
a fixed row-orthonormal 5 x 32 map sends the true descriptor into the
audio-embedding space, where the scene's reference embedding and exactly
one "compatible" candidate are noisy images of it. Distractor candidates
reuse other scenes' descriptors (hard negatives), filtered so their
descriptor cosine with the scene stays below a cap.

The compatible candidate sits at a seeded position within the first
``min(candidate_count, 6)`` slots: the default six-sample generation plan
always contains it, while sweep prefixes below six may miss it, which is
what makes the candidate-count sweep informative.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .alignment import (
    ProjectionModel,
    TrainConfig,
    fit_pca,
    mlp_forward,
    save_projection_model,
    select_candidate,
    train_projection,
    validation_split,
)
from .geoattr.descriptor import shannon_entropy
from .tensor_io import SceneManifest, save_manifest, write_tensor

GEO_DIM = 5
AUDIO_DIM = 32
# Index map into the 5-dim descriptor for the four paintable classes.
_ACTIVE_CLASSES = ("vegetation", "water", "road", "other")
_ACTIVE_TO_DESCRIPTOR = (0, 1, 3, 4)
_PALETTE = {
    "vegetation": (45, 140, 55),
    "water": (25, 45, 120),
    "road": (118, 115, 112),
    "other": (255, 160, 20),
}
_SWEEP_DEFAULT = (1, 3, 6, 10)


@dataclass
class SynthWorldConfig:
    n_scenes: int = 200
    noise_sigma: float = 0.05
    image_size: int = 64
    patch_grid: int = 8
    patch_dim: int = 1024
    candidate_count: int = 6
    seed: int = 42
    distractor_max_cos: float = 0.99  # exclude only near-duplicate descriptors from distractors
    write_assets: bool = True  # emit RGB/patch tensors; embeddings-only when False
    mixed_scene_rate: float = 0.2
    planted_scale: float = 3.0  # row norm of the planted map; sets signal-to-noise vs noise_sigma

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.image_size % self.patch_grid != 0:
            raise ValueError("image_size must be a multiple of patch_grid")


@dataclass
class SynthScene:
    scene_id: str
    true_descriptor: np.ndarray  # (5,)
    candidates: np.ndarray  # (N, 32), unit rows
    compatible_index: int
    reference_embedding: np.ndarray  # (32,) unit; training target
    caption: str
    rgb_image: np.ndarray | None = None  # (H, W, 3) float32 in [0,1]
    patch_grid: np.ndarray | None = None  # (g, g, patch_dim)


@dataclass
class SynthWorld:
    config: SynthWorldConfig
    planted_map: np.ndarray  # (5, 32), orthonormal rows
    scenes: list[SynthScene]
    class_means: dict[str, np.ndarray] = field(default_factory=dict)

    def geo_matrix(self) -> np.ndarray:
        return np.vstack([s.true_descriptor for s in self.scenes])

    def reference_matrix(self) -> np.ndarray:
        return np.vstack([s.reference_embedding for s in self.scenes])


def _planted_map(seed: int, scale: float) -> np.ndarray:
    rng = np.random.default_rng(seed + 1_000_003)
    raw = rng.normal(size=(AUDIO_DIM, GEO_DIM))
    q, _ = np.linalg.qr(raw)
    return scale * q.T  # 5 x 32, orthogonal rows of norm ``scale``


def _block_class_means(patch_dim: int) -> dict[str, np.ndarray]:
    """Disjoint block-sparse unit vectors, one block of strong dims per class.

    Axis-aligned concentration mirrors discriminative backbone features and
    keeps tree splits on the cluster centroid crisp.
    """
    block = max(1, min(16, patch_dim // len(_ACTIVE_CLASSES)))
    means = {}
    for i, name in enumerate(_ACTIVE_CLASSES):
        v = np.zeros(patch_dim)
        v[i * block : (i + 1) * block] = 1.0 / np.sqrt(block)
        means[name] = v
    return means


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _sample_proportions(rng: np.random.Generator, mixed_rate: float) -> np.ndarray:
    """Proportions over the four active classes, archetype-weighted for spread.

    Dominant archetypes cover only the classes the descriptor encodes
    directly (vegetation, water, road); an "other"-dominated scene would be
    nearly information-free in descriptor space and unlearnable by design.
    """
    if rng.random() < mixed_rate:
        return rng.dirichlet(np.full(4, 2.0))
    dominant = int(rng.integers(3))
    alpha = np.full(4, 0.5)
    alpha[dominant] = 8.0
    return rng.dirichlet(alpha)


def _descriptor_from_active(p4: np.ndarray) -> np.ndarray:
    p5 = np.zeros(GEO_DIM)
    for active_i, desc_i in enumerate(_ACTIVE_TO_DESCRIPTOR):
        p5[desc_i] = p4[active_i]
    return np.array([p5[0], p5[1], p5[2], p5[3], shannon_entropy(p5 / p5.sum())])


def _largest_remainder_counts(p4: np.ndarray, total: int) -> np.ndarray:
    raw = p4 * total
    counts = np.floor(raw).astype(int)
    remainder = total - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:remainder]] += 1
    return counts


def _paint_scene(
    counts: np.ndarray,
    cfg: SynthWorldConfig,
    class_means: dict[str, np.ndarray],
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Patch-aligned RGB image and class-conditional patch embeddings."""
    g = cfg.patch_grid
    patch_px = cfg.image_size // g
    patch_classes = np.repeat(np.arange(4), counts)  # row-major contiguous runs
    grid = patch_classes.reshape(g, g)
    img = np.zeros((cfg.image_size, cfg.image_size, 3), dtype=np.float64)
    for active_i, name in enumerate(_ACTIVE_CLASSES):
        mask = np.kron(grid == active_i, np.ones((patch_px, patch_px), dtype=bool))
        base = np.array(_PALETTE[name], dtype=np.float64)
        img[mask] = base
    img += rng.integers(-3, 4, size=img.shape)
    img = np.clip(img, 0, 255) / 255.0
    means = np.vstack([class_means[name] for name in _ACTIVE_CLASSES])
    # Radial noise scale 0.1: per-dim sigma shrinks with dimension so the
    # noise norm stays well below the unit class separation.
    per_dim_sigma = 0.1 / np.sqrt(cfg.patch_dim)
    patches = means[grid] + per_dim_sigma * rng.normal(size=(g, g, cfg.patch_dim))
    return img.astype(np.float32), patches


def generate_world(cfg: SynthWorldConfig, out_dir: str | Path | None = None) -> SynthWorld:
    """Deterministically build the world; optionally write tensors and a manifest."""
    planted = _planted_map(cfg.seed, cfg.planted_scale)
    class_means = _block_class_means(cfg.patch_dim)

    rng = np.random.default_rng(cfg.seed)
    layouts: list[np.ndarray] = []
    descriptors: list[np.ndarray] = []
    for _ in range(cfg.n_scenes):
        p4 = _sample_proportions(rng, cfg.mixed_scene_rate)
        if cfg.write_assets:
            counts = _largest_remainder_counts(p4, cfg.patch_grid**2)
            p4 = counts / counts.sum()
            layouts.append(counts)
        descriptors.append(_descriptor_from_active(p4))

    cand_rng = np.random.default_rng(cfg.seed + 3_000_007)
    scenes: list[SynthScene] = []
    n = cfg.n_scenes
    for i in range(n):
        desc = descriptors[i]
        clean = planted.T @ desc
        reference = _unit(clean + cfg.noise_sigma * cand_rng.normal(size=AUDIO_DIM))
        compatible = _unit(clean + cfg.noise_sigma * cand_rng.normal(size=AUDIO_DIM))
        compatible_index = int(cand_rng.integers(min(cfg.candidate_count, 6)))
        candidates = np.zeros((cfg.candidate_count, AUDIO_DIM))
        for slot in range(cfg.candidate_count):
            if slot == compatible_index:
                candidates[slot] = compatible
                continue
            best_j, best_cos = None, np.inf
            for _ in range(20):
                j = int(cand_rng.integers(n))
                if j == i or n == 1:
                    continue
                cos = float(
                    descriptors[j]
                    @ desc
                    / (np.linalg.norm(descriptors[j]) * np.linalg.norm(desc))
                )
                if cos < best_cos:
                    best_j, best_cos = j, cos
                if cos <= cfg.distractor_max_cos:
                    break
            source = descriptors[best_j] if best_j is not None else desc + cand_rng.normal(size=GEO_DIM)
            candidates[slot] = _unit(
                planted.T @ source + cfg.noise_sigma * cand_rng.normal(size=AUDIO_DIM)
            )
        dominant = _ACTIVE_CLASSES[int(np.argmax([desc[j] for j in _ACTIVE_TO_DESCRIPTOR]))]
        scene = SynthScene(
            scene_id=f"scene{i:05d}",
            true_descriptor=desc,
            candidates=candidates,
            compatible_index=compatible_index,
            reference_embedding=reference,
            caption=f"an overhead view dominated by {dominant} terrain",
        )
        if cfg.write_assets:
            img, patches = _paint_scene(layouts[i], cfg, class_means, np.random.default_rng(cfg.seed + 5_000_011 + i))
            scene.rgb_image = img
            scene.patch_grid = patches
        scenes.append(scene)

    world = SynthWorld(config=cfg, planted_map=planted, scenes=scenes, class_means=class_means)
    if out_dir is not None:
        write_world(world, out_dir)
    return world


def write_world(world: SynthWorld, out_dir: str | Path) -> Path:
    """Write per-scene tensor files plus a manifest; returns the manifest path.

    Manifest paths are relative to the manifest's directory, so a written
    world is relocatable and byte-identical across output locations.
    """
    out = Path(out_dir)
    (out / "tensors").mkdir(parents=True, exist_ok=True)
    manifest: list[SceneManifest] = []
    for scene in world.scenes:
        rel = f"tensors/{scene.scene_id}"
        cand_paths = []
        for j in range(scene.candidates.shape[0]):
            p = f"{rel}__cand{j}.npy"
            write_tensor(out / p, scene.candidates[j])
            cand_paths.append(p)
        ref_path = f"{rel}__ref.npy"
        write_tensor(out / ref_path, scene.reference_embedding)
        image_path = ""
        patch_path = ""
        if scene.rgb_image is not None:
            image_path = f"{rel}__image.npy"
            patch_path = f"{rel}__patches.npy"
            write_tensor(out / image_path, scene.rgb_image)
            write_tensor(out / patch_path, scene.patch_grid)
        manifest.append(
            SceneManifest(
                scene_id=scene.scene_id,
                image_path=image_path,
                patch_embedding_path=patch_path,
                audio_embedding_paths=cand_paths,
                text_hypotheses=[scene.caption],
                reference_audio_embedding_path=ref_path,
                geo_descriptor=[float(v) for v in scene.true_descriptor],
            )
        )
    manifest_path = out / "scenes.json"
    save_manifest(manifest_path, manifest)
    return manifest_path


# --- desk benchmark -----------------------------------------------------


def _train_arm(
    geo: np.ndarray,
    references: np.ndarray,
    train_cfg: TrainConfig,
    split: tuple[np.ndarray, np.ndarray],
) -> tuple[ProjectionModel, list[dict]]:
    """Fit PCA on the training rows, project/normalize targets, train the MLP."""
    train_idx, _ = split
    pca = fit_pca(references[train_idx], dims=min(train_cfg.pca_dims, references.shape[1]))
    targets = pca.transform(references)
    norms = np.linalg.norm(targets, axis=1, keepdims=True)
    targets = targets / np.maximum(norms, 1e-12)
    model, history = train_projection(geo, targets, train_cfg, split=split)
    model.pca = pca
    return model, history


def _selection_stats(world: SynthWorld, model: ProjectionModel, inputs: np.ndarray, n_candidates: int):
    """Selection accuracy and mean GeoAlign over candidate-list prefixes."""
    hits = 0
    geoaligns = []
    for i, scene in enumerate(world.scenes):
        prefix = scene.candidates[: min(n_candidates, scene.candidates.shape[0])]
        projected = model.pca.transform(prefix)
        query = mlp_forward(model, inputs[i])
        result = select_candidate(query, projected)
        geoaligns.append(result.geoalign)
        if scene.compatible_index < prefix.shape[0] and result.selected == scene.compatible_index:
            hits += 1
    return hits / len(world.scenes), float(np.mean(geoaligns))


def run_desk_benchmark(
    world_cfg: SynthWorldConfig,
    train_cfg: TrainConfig | None = None,
    sweep: tuple[int, ...] = _SWEEP_DEFAULT,
    out_dir: str | Path | None = None,
) -> dict:
    """Train the ablation arms and sweep the candidate count on one world.

    Arms mirror the projection input ablation: full descriptor, road-only,
    all-zero input, and shuffled (mismatched) descriptors. The sweep scores
    nested candidate-list prefixes with the full-geo model. Returns a
    JSON-ready report; when ``out_dir`` is given, writes ``report.json``
    and one model file per arm.
    """
    train_cfg = train_cfg or TrainConfig()
    world = generate_world(world_cfg)
    geo = world.geo_matrix()
    references = world.reference_matrix()
    n = geo.shape[0]
    split = validation_split(n, train_cfg.val_fraction, train_cfg.seed)

    shuffle_rng = np.random.default_rng(world_cfg.seed + 7_000_003)
    arm_inputs = {
        "full_geo": geo,
        "single_road": geo[:, 3:4],
        "zero_input": np.zeros_like(geo),
        "shuffled_geo": geo[shuffle_rng.permutation(n)],
    }
    # Each arm is a pipeline variant: selection consumes the same (possibly
    # corrupted) input stream the arm trains on.
    arms: dict[str, dict] = {}
    models: dict[str, ProjectionModel] = {}
    default_n = min(6, world_cfg.candidate_count)
    for name, inputs in arm_inputs.items():
        model, history = _train_arm(inputs, references, train_cfg, split)
        best = min(history, key=lambda r: r["val_loss"])
        acc, geoalign = _selection_stats(world, model, inputs, default_n)
        arms[name] = {
            "best_val_cosine": best["val_cosine"],
            "best_val_loss": best["val_loss"],
            "best_epoch": best["best_epoch"],
            "epochs_run": len(history),
            "selection_accuracy": acc,
            "mean_geoalign": geoalign,
        }
        models[name] = model

    full_model = models["full_geo"]
    sweep_rows = []
    for n_candidates in sweep:
        acc, geoalign = _selection_stats(world, full_model, geo, int(n_candidates))
        sweep_rows.append(
            {
                "n": int(n_candidates),
                "selection_accuracy": acc,
                "mean_geoalign": geoalign,
            }
        )

    report = {
        "schema_version": 1,
        "config": {
            "world": dataclasses.asdict(world_cfg),
            "train": dataclasses.asdict(train_cfg),
            "sweep": [int(x) for x in sweep],
        },
        "arms": arms,
        "sweep": sweep_rows,
    }
    if out_dir is not None:
        out = Path(out_dir)
        (out / "models").mkdir(parents=True, exist_ok=True)
        for name, model in models.items():
            save_projection_model(out / "models" / f"{name}.bin", model)
        with open(out / "report.json", "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return report
