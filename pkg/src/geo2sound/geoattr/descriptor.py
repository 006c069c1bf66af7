"""Area-weighted aggregation into the 5-dim geographic descriptor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import AreaSumViolation, LengthMismatch, NotADistribution
from .kmeans import kmeans
from .pseudo import CLASS_NAMES
from .visual import ClusterDescriptor, ImageFeatures, cluster_descriptor, upsample_labels


@dataclass
class GeoDescriptor:
    """Class proportions for vegetation/water/built-up/road plus land-use-mix entropy."""

    vegetation: float
    water: float
    built_up: float
    road: float
    land_use_mix: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.vegetation, self.water, self.built_up, self.road, self.land_use_mix],
            dtype=np.float64,
        )

    @classmethod
    def from_array(cls, arr) -> "GeoDescriptor":
        v = [float(x) for x in np.asarray(arr).reshape(-1)]
        if len(v) != 5:
            raise ValueError("geo descriptor must have 5 entries")
        return cls(*v)


def shannon_entropy(p: np.ndarray, tol: float = 1e-6) -> float:
    """Natural-log entropy -sum(p ln p), with 0 ln 0 := 0."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise NotADistribution("expected a non-empty probability vector")
    if (p < -tol).any() or abs(p.sum() - 1.0) > tol:
        raise NotADistribution(f"entries must be non-negative and sum to 1 (sum={p.sum():.9f})")
    p = np.clip(p, 0.0, None)
    nz = p > 0
    return float(-(p[nz] * np.log(p[nz])).sum())


def aggregate_attributes(dists: list[np.ndarray], areas: list[float]) -> GeoDescriptor:
    """Blend per-cluster class distributions with their area weights."""
    if len(dists) != len(areas):
        raise LengthMismatch(f"{len(dists)} distributions vs {len(areas)} areas")
    if len(dists) == 0:
        raise LengthMismatch("need at least one cluster")
    areas_arr = np.asarray(areas, dtype=np.float64)
    if abs(areas_arr.sum() - 1.0) > 1e-6:
        raise AreaSumViolation(f"areas sum to {areas_arr.sum():.9f}, expected 1")
    dist_mat = np.asarray(dists, dtype=np.float64)
    if dist_mat.ndim != 2 or dist_mat.shape[1] != len(CLASS_NAMES):
        raise LengthMismatch(f"each distribution must have {len(CLASS_NAMES)} classes")
    p = areas_arr @ dist_mat
    p = p / p.sum()
    return GeoDescriptor(
        vegetation=float(p[0]),
        water=float(p[1]),
        built_up=float(p[2]),
        road=float(p[3]),
        land_use_mix=shannon_entropy(p),
    )


def extract_geo_descriptor(rgb_image, patch_grid: np.ndarray, forest, config) -> GeoDescriptor:
    """Full image-level pipeline: cluster patches, describe, classify, aggregate.

    Clusters with an area fraction below ``config.min_area_ratio`` are
    excluded from classification; their mass is redistributed by
    renormalizing the remaining areas.
    """
    patch_grid = np.asarray(patch_grid, dtype=np.float64)
    if patch_grid.ndim != 3:
        raise ValueError("patch grid must be h x w x D")
    h, w, dim = patch_grid.shape
    points = patch_grid.reshape(h * w, dim)
    model = kmeans(
        points,
        k=config.k,
        seed=config.seed,
        max_iter=config.max_iter,
        tol=config.tol,
        n_init=config.n_init,
    )
    feats = rgb_image if isinstance(rgb_image, ImageFeatures) else ImageFeatures(rgb_image)
    img_h, img_w = feats.gray.shape
    label_map = upsample_labels(model.labels.reshape(h, w), img_h, img_w)

    descriptors: list[ClusterDescriptor] = []
    for j in range(model.k):
        if not (label_map == j).any():
            continue
        descriptors.append(cluster_descriptor(feats, label_map, j, model.centroids[j]))
    kept = [d for d in descriptors if d.area_ratio >= config.min_area_ratio]
    if not kept:  # a surviving cluster always exists for k <= 1/min_area
        kept = [max(descriptors, key=lambda d: d.area_ratio)]
    total = sum(d.area_ratio for d in kept)
    areas = [d.area_ratio / total for d in kept]
    dists = [forest.predict_proba(d.feature()) for d in kept]
    return aggregate_attributes(dists, areas)
