"""Heuristic pseudo-labels from cluster-level appearance statistics.

The score table is a declared convention, isolated here so it can be
re-tuned without touching the rest of the pipeline. All statistics are in
[0, 1]. Ties break by the fixed class order of ``CLASS_NAMES``.
"""

from __future__ import annotations

import numpy as np

from .visual import ClusterDescriptor

CLASS_NAMES = ("vegetation", "water", "built_up", "road", "other")

WATER_HUE_CENTER = 0.6
WATER_HUE_WIDTH = 0.15
OTHER_FLOOR = 0.15


def pseudo_label_scores(d: ClusterDescriptor) -> np.ndarray:
    """Per-class heuristic scores in ``CLASS_NAMES`` order."""
    mean_r, mean_g, mean_b, mean_h, mean_s, mean_v, gray_std, gray_mean, edge = d.visual_stats
    blue_hue = max(0.0, 1.0 - abs(mean_h - WATER_HUE_CENTER) / WATER_HUE_WIDTH)
    return np.array(
        [
            mean_g - max(mean_r, mean_b) + 0.5 * mean_s,
            (1.0 - mean_v) * 0.5 + blue_hue - edge,
            edge + gray_std - mean_s,
            (1.0 - mean_s) + edge - abs(gray_mean - 0.45),
            OTHER_FLOOR,
        ],
        dtype=np.float64,
    )


def pseudo_label(d: ClusterDescriptor) -> tuple[int, float]:
    """Class index with the highest heuristic score, plus that score."""
    scores = pseudo_label_scores(d)
    idx = int(np.argmax(scores))  # argmax keeps the first (lowest) index on ties
    return idx, float(scores[idx])
