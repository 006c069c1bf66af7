"""Random forest with Gini-impurity trees and two-stage confidence-filtered training.

Trees use axis-aligned splits on midpoints between consecutive sorted
unique feature values, with per-node uniform feature subsampling. Ties in
the split search break to the lowest feature index, then the lowest
threshold. Everything is seeded: tree ``t`` draws its bootstrap sample and
feature subsets from ``default_rng(cfg.seed + t)``, so training is
bit-reproducible.
"""

from __future__ import annotations

import dataclasses
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, EmptyTrainingSet

FOREST_FORMAT = "geo2sound-forest"
FOREST_VERSION = 1


@dataclass
class ForestConfig:
    n_trees: int = 300
    max_depth: int | None = None
    min_samples_leaf: int = 1
    features_per_split: int = 32  # floor(sqrt(1033)) for the 1033-dim cluster features
    confidence_threshold: float = 0.70
    min_area_ratio: float = 0.01  # applied upstream when building cluster features
    seed: int = 42

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if not (0.0 <= self.confidence_threshold <= 1.0):
            raise ValueError("confidence_threshold must be in [0, 1]")


@dataclass
class Tree:
    """Flat node arrays; ``feature == -1`` marks a leaf with a class distribution."""

    feature: np.ndarray  # (n_nodes,) int
    threshold: np.ndarray  # (n_nodes,) float
    left: np.ndarray  # (n_nodes,) int child index, -1 for leaves
    right: np.ndarray  # (n_nodes,) int
    leaf_dist: np.ndarray  # (n_nodes, C) rows sum to 1 at leaves, 0 elsewhere
    oob_mask: np.ndarray | None = None  # (n,) bool, transient training metadata

    def predict_proba_one(self, x: np.ndarray) -> np.ndarray:
        node = 0
        while self.feature[node] >= 0:
            node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
        return self.leaf_dist[node]


@dataclass
class Forest:
    trees: list[Tree]
    class_count: int
    feature_count: int
    stage1_fallback: bool = False  # two-stage filtering kept nothing; stage-1 model returned
    degenerate: bool = False  # trained on a single sample

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.feature_count:
            raise DimensionMismatch(f"expected {self.feature_count} features, got {x.shape[0]}")
        acc = np.zeros(self.class_count, dtype=np.float64)
        for tree in self.trees:
            acc += tree.predict_proba_one(x)
        return acc / len(self.trees)

    def predict_proba_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return np.vstack([self.predict_proba(row) for row in X])


def _gini_cost(left_counts: np.ndarray, right_counts: np.ndarray) -> np.ndarray:
    """Weighted Gini impurity of candidate splits; rows are candidate positions."""
    n_left = left_counts.sum(axis=1)
    n_right = right_counts.sum(axis=1)
    n = n_left + n_right
    gini_left = 1.0 - np.sum((left_counts / n_left[:, None]) ** 2, axis=1)
    gini_right = 1.0 - np.sum((right_counts / n_right[:, None]) ** 2, axis=1)
    return (n_left * gini_left + n_right * gini_right) / n


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    idx: np.ndarray,
    features: np.ndarray,
    class_count: int,
    min_samples_leaf: int = 1,
) -> tuple[int, float, float] | None:
    """Exhaustive best Gini split over ``features`` restricted to rows ``idx``.

    Returns (feature, threshold, cost) or None when no feature admits a valid
    split. Candidate thresholds are midpoints between consecutive distinct
    sorted values.
    """
    n = idx.shape[0]
    best: tuple[float, int, float] | None = None
    for f in features:
        vals = X[idx, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sy = y[idx][order]
        onehot = np.zeros((n, class_count), dtype=np.float64)
        onehot[np.arange(n), sy] = 1.0
        prefix = np.cumsum(onehot, axis=0)
        pos = np.nonzero(sv[1:] > sv[:-1])[0] + 1
        if min_samples_leaf > 1:
            pos = pos[(pos >= min_samples_leaf) & (pos <= n - min_samples_leaf)]
        if pos.size == 0:
            continue
        left_counts = prefix[pos - 1]
        right_counts = prefix[-1] - left_counts
        costs = _gini_cost(left_counts, right_counts)
        i = int(np.argmin(costs))  # first minimum -> lowest threshold
        if best is None or costs[i] < best[0]:
            best = (float(costs[i]), int(f), float((sv[pos[i] - 1] + sv[pos[i]]) / 2.0))
    if best is None:
        return None
    return best[1], best[2], best[0]


def _build_tree(
    X: np.ndarray,
    y: np.ndarray,
    sample_idx: np.ndarray,
    cfg: ForestConfig,
    class_count: int,
    rng: np.random.Generator,
) -> Tree:
    n_features = X.shape[1]
    m = min(cfg.features_per_split, n_features)
    features_buf: list[int] = []
    thresholds: list[float] = []
    lefts: list[int] = []
    rights: list[int] = []
    dists: list[np.ndarray] = []

    def new_node() -> int:
        features_buf.append(-1)
        thresholds.append(0.0)
        lefts.append(-1)
        rights.append(-1)
        dists.append(np.zeros(class_count, dtype=np.float64))
        return len(features_buf) - 1

    root = new_node()
    # Depth-first, left child first, so RNG consumption order is well defined.
    stack: list[tuple[int, np.ndarray, int]] = [(root, sample_idx, 0)]
    while stack:
        node, idx, depth = stack.pop()
        counts = np.bincount(y[idx], minlength=class_count).astype(np.float64)
        if (
            idx.shape[0] < max(2, 2 * cfg.min_samples_leaf)
            or (counts > 0).sum() <= 1
            or (cfg.max_depth is not None and depth >= cfg.max_depth)
        ):
            dists[node] = counts / counts.sum()
            continue
        chosen = np.sort(rng.choice(n_features, size=m, replace=False))
        split = best_split(X, y, idx, chosen, class_count, cfg.min_samples_leaf)
        if split is None:
            dists[node] = counts / counts.sum()
            continue
        f, thr, _cost = split
        mask = X[idx, f] <= thr
        left_id = new_node()
        right_id = new_node()
        features_buf[node] = f
        thresholds[node] = thr
        lefts[node] = left_id
        rights[node] = right_id
        stack.append((right_id, idx[~mask], depth + 1))
        stack.append((left_id, idx[mask], depth + 1))

    return Tree(
        feature=np.array(features_buf, dtype=np.int64),
        threshold=np.array(thresholds, dtype=np.float64),
        left=np.array(lefts, dtype=np.int64),
        right=np.array(rights, dtype=np.int64),
        leaf_dist=np.vstack(dists),
    )


def train_forest(X: np.ndarray, y: np.ndarray, cfg: ForestConfig, n_classes: int | None = None) -> Forest:
    """Train ``cfg.n_trees`` trees on seeded bootstrap samples of (X, y)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyTrainingSet("X must be a non-empty n x F matrix")
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch("X and y row counts differ")
    n = X.shape[0]
    class_count = int(n_classes if n_classes is not None else y.max() + 1)
    degenerate = n == 1
    if degenerate:
        warnings.warn("single-sample training set; forest degenerates to one leaf", RuntimeWarning)
    trees: list[Tree] = []
    for t in range(cfg.n_trees):
        rng = np.random.default_rng(cfg.seed + t)
        boot = rng.integers(0, n, size=n)
        tree = _build_tree(X, y, boot, cfg, class_count, rng)
        oob = np.ones(n, dtype=bool)
        oob[boot] = False
        tree.oob_mask = oob
        trees.append(tree)
    return Forest(trees=trees, class_count=class_count, feature_count=X.shape[1], degenerate=degenerate)


def oob_confidence(forest: Forest, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample (confidence, predicted class) from out-of-bag trees.

    Samples that are in-bag for every tree fall back to the full-forest
    prediction, which avoids undefined confidences at small tree counts.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    acc = np.zeros((n, forest.class_count), dtype=np.float64)
    votes = np.zeros(n, dtype=np.float64)
    for tree in forest.trees:
        if tree.oob_mask is None:
            continue
        for i in np.nonzero(tree.oob_mask)[0]:
            acc[i] += tree.predict_proba_one(X[i])
            votes[i] += 1.0
    probs = np.empty_like(acc)
    covered = votes > 0
    probs[covered] = acc[covered] / votes[covered, None]
    for i in np.nonzero(~covered)[0]:
        probs[i] = forest.predict_proba(X[i])
    return probs.max(axis=1), probs.argmax(axis=1)


def two_stage_train(
    X: np.ndarray,
    y_pseudo: np.ndarray,
    cfg: ForestConfig,
    n_classes: int | None = None,
) -> tuple[Forest, np.ndarray]:
    """Train, filter low-confidence or disagreeing pseudo-labels, retrain.

    A sample survives when its out-of-bag confidence reaches
    ``cfg.confidence_threshold`` and the stage-1 prediction agrees with its
    pseudo-label. If nothing survives, the stage-1 forest is returned with
    ``stage1_fallback`` set.
    """
    y_pseudo = np.asarray(y_pseudo, dtype=np.int64).reshape(-1)
    stage1 = train_forest(X, y_pseudo, cfg, n_classes=n_classes)
    conf, pred = oob_confidence(stage1, X)
    kept = np.nonzero((conf >= cfg.confidence_threshold) & (pred == y_pseudo))[0]
    if kept.size == 0:
        warnings.warn("confidence filter removed every sample; keeping stage-1 forest", RuntimeWarning)
        stage1.stage1_fallback = True
        return stage1, kept
    stage2_cfg = dataclasses.replace(cfg, seed=cfg.seed + cfg.n_trees)
    X = np.asarray(X, dtype=np.float64)
    stage2 = train_forest(X[kept], y_pseudo[kept], stage2_cfg, n_classes=stage1.class_count)
    return stage2, kept


def forest_to_json_obj(forest: Forest) -> dict:
    return {
        "format": FOREST_FORMAT,
        "version": FOREST_VERSION,
        "class_count": forest.class_count,
        "feature_count": forest.feature_count,
        "stage1_fallback": forest.stage1_fallback,
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "leaf_dist": t.leaf_dist.tolist(),
            }
            for t in forest.trees
        ],
    }


def save_forest(path: str | Path, forest: Forest) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(forest_to_json_obj(forest), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_forest(path: str | Path) -> Forest:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("format") != FOREST_FORMAT or obj.get("version") != FOREST_VERSION:
        raise ValueError(f"{path}: not a version-{FOREST_VERSION} forest file")
    trees = [
        Tree(
            feature=np.array(t["feature"], dtype=np.int64),
            threshold=np.array(t["threshold"], dtype=np.float64),
            left=np.array(t["left"], dtype=np.int64),
            right=np.array(t["right"], dtype=np.int64),
            leaf_dist=np.array(t["leaf_dist"], dtype=np.float64),
        )
        for t in obj["trees"]
    ]
    return Forest(
        trees=trees,
        class_count=int(obj["class_count"]),
        feature_count=int(obj["feature_count"]),
        stage1_fallback=bool(obj.get("stage1_fallback", False)),
    )
