"""Seeded Lloyd K-means with k-means++ initialization."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import TooFewPoints


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray  # k x D
    labels: np.ndarray  # n, values in [0, k)
    inertia: float
    degenerate: bool = False  # all input points identical with k > 1


def _squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # (n, k) squared euclidean distances, clamped against tiny negative round-off.
    d = (
        np.sum(points**2, axis=1)[:, None]
        - 2.0 * points @ centroids.T
        + np.sum(centroids**2, axis=1)[None, :]
    )
    return np.maximum(d, 0.0)


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centroids[0] = points[first]
    closest = np.sum((points - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            # Remaining mass is zero (duplicated points); fall back to uniform choice.
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest / total))
        centroids[j] = points[idx]
        closest = np.minimum(closest, np.sum((points - centroids[j]) ** 2, axis=1))
    return centroids


def _lloyd(points: np.ndarray, init: np.ndarray, max_iter: int, tol: float) -> tuple[np.ndarray, np.ndarray, float]:
    centroids = init.copy()
    k = centroids.shape[0]
    prev_inertia = np.inf
    labels = np.zeros(points.shape[0], dtype=np.int64)
    for _ in range(max_iter):
        d = _squared_distances(points, centroids)
        labels = np.argmin(d, axis=1)  # ties resolve to the lowest cluster index
        inertia = float(d[np.arange(points.shape[0]), labels].sum())
        assert inertia <= prev_inertia + 1e-9 * max(1.0, prev_inertia if np.isfinite(prev_inertia) else 1.0)
        prev_inertia = inertia
        new_centroids = centroids.copy()
        for j in range(k):
            members = labels == j
            if members.any():
                new_centroids[j] = points[members].mean(axis=0)
        # Re-seed empty clusters to the points farthest from their assigned centroid.
        empties = [j for j in range(k) if not (labels == j).any()]
        if empties:
            per_point = d[np.arange(points.shape[0]), labels]
            order = np.argsort(-per_point, kind="stable")
            for rank, j in enumerate(empties):
                new_centroids[j] = points[order[rank % points.shape[0]]]
        shift = float(np.sqrt(np.sum((new_centroids - centroids) ** 2, axis=1)).max())
        centroids = new_centroids
        if shift < tol and not empties:
            break
    d = _squared_distances(points, centroids)
    labels = np.argmin(d, axis=1)
    inertia = float(d[np.arange(points.shape[0]), labels].sum())
    return centroids, labels, inertia


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 100,
    tol: float = 1e-6,
    n_init: int = 10,
) -> ClusterModel:
    """Cluster ``points`` (n x D) into ``k`` groups.

    Runs ``n_init`` independently seeded k-means++ / Lloyd restarts and keeps
    the lowest-inertia solution, so small instances reliably reach the global
    optimum. Fully deterministic for a fixed ``seed``.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] < 1:
        raise ValueError("points must be a non-empty n x D matrix")
    n = points.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < k:
        raise TooFewPoints(f"need at least k={k} points, got {n}")
    if not np.isfinite(points).all():
        raise ValueError("points must be finite")

    degenerate = bool(k > 1 and np.all(points == points[0]))
    if degenerate:
        warnings.warn("all points identical; returning duplicated centroids", RuntimeWarning)
        centroids = np.repeat(points[:1], k, axis=0)
        labels = np.zeros(n, dtype=np.int64)
        return ClusterModel(k=k, centroids=centroids, labels=labels, inertia=0.0, degenerate=True)

    best: tuple[np.ndarray, np.ndarray, float] | None = None
    for restart in range(max(1, n_init)):
        rng = np.random.default_rng(seed + restart)
        init = _kmeanspp_init(points, k, rng)
        centroids, labels, inertia = _lloyd(points, init, max_iter, tol)
        if best is None or inertia < best[2] - 1e-12:
            best = (centroids, labels, inertia)
    centroids, labels, inertia = best
    return ClusterModel(k=k, centroids=centroids, labels=labels, inertia=inertia)
