"""Per-cluster visual statistics: color, texture and edge density.

The 9 statistics are frozen in this order:

    meanR, meanG, meanB, meanH, meanS, meanV, gray_std, gray_mean, edge_density

Color means are computed on RGB normalized to [0, 1]. Hue is the circular
mean scaled to [0, 1] (pixels with zero saturation contribute hue 0).
Grayscale is the unweighted channel mean. Edge density is the fraction of
cluster pixels whose 3x3 Sobel gradient magnitude, computed on the
grayscale image with replicated borders, exceeds ``EDGE_THRESHOLD``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyCluster, EmptyGrid

EDGE_THRESHOLD = 0.1
VISUAL_STAT_NAMES = (
    "meanR",
    "meanG",
    "meanB",
    "meanH",
    "meanS",
    "meanV",
    "gray_std",
    "gray_mean",
    "edge_density",
)


def upsample_labels(label_grid: np.ndarray, target_h: int, target_w: int) -> np.ndarray:
    """Nearest-neighbor upsampling: pixel (y, x) takes label (floor(y*h/H), floor(x*w/W))."""
    label_grid = np.asarray(label_grid)
    if label_grid.ndim != 2 or label_grid.size == 0:
        raise EmptyGrid("label grid must be a non-empty 2-D array")
    h, w = label_grid.shape
    if target_h < h or target_w < w:
        raise ValueError("target dims must be >= grid dims")
    rows = (np.arange(target_h) * h) // target_h
    cols = (np.arange(target_w) * w) // target_w
    return label_grid[np.ix_(rows, cols)]


def normalize_rgb(rgb_image: np.ndarray) -> np.ndarray:
    """Accept uint8 or float [0,1] H x W x 3 images; return float64 in [0,1]."""
    img = np.asarray(rgb_image)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("expected an H x W x 3 image")
    if img.dtype == np.uint8:
        return img.astype(np.float64) / 255.0
    img = img.astype(np.float64)
    if img.size and (img.min() < -1e-9 or img.max() > 1.0 + 1e-9):
        raise ValueError("float images must be scaled to [0,1]")
    return np.clip(img, 0.0, 1.0)


def rgb_to_hsv(img: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Standard HSV from normalized RGB; hue in [0,1), zero where saturation is zero."""
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    v = img.max(axis=-1)
    mn = img.min(axis=-1)
    delta = v - mn
    s = np.where(v > 0, delta / np.where(v > 0, v, 1.0), 0.0)
    h = np.zeros_like(v)
    nz = delta > 0
    rmax = nz & (v == r)
    gmax = nz & ~rmax & (v == g)
    bmax = nz & ~rmax & ~gmax
    safe = np.where(nz, delta, 1.0)
    h[rmax] = (((g - b) / safe)[rmax] / 6.0) % 1.0
    h[gmax] = (((b - r) / safe)[gmax] + 2.0) / 6.0
    h[bmax] = (((r - g) / safe)[bmax] + 4.0) / 6.0
    return h, s, v


def sobel_edge_mask(gray: np.ndarray, threshold: float = EDGE_THRESHOLD) -> np.ndarray:
    """Boolean mask of pixels whose Sobel gradient magnitude exceeds ``threshold``."""
    p = np.pad(gray, 1, mode="edge")
    gx = (
        (p[:-2, 2:] + 2.0 * p[1:-1, 2:] + p[2:, 2:])
        - (p[:-2, :-2] + 2.0 * p[1:-1, :-2] + p[2:, :-2])
    )
    gy = (
        (p[2:, :-2] + 2.0 * p[2:, 1:-1] + p[2:, 2:])
        - (p[:-2, :-2] + 2.0 * p[:-2, 1:-1] + p[:-2, 2:])
    )
    return np.sqrt(gx**2 + gy**2) > threshold


class ImageFeatures:
    """Whole-image arrays shared by all cluster descriptors of one image."""

    def __init__(self, rgb_image: np.ndarray):
        self.rgb = normalize_rgb(rgb_image)
        self.hue, self.sat, self.val = rgb_to_hsv(self.rgb)
        self.gray = self.rgb.mean(axis=-1)
        self.edges = sobel_edge_mask(self.gray)


@dataclass
class ClusterDescriptor:
    """9 visual statistics + mean patch embedding + pixel-area fraction."""

    visual_stats: np.ndarray  # (9,)
    centroid: np.ndarray  # (D,) mean patch embedding of the cluster
    area_ratio: float

    def feature(self) -> np.ndarray:
        """Concatenated classifier input (9 + D values; 1033 for 1024-dim patches)."""
        return np.concatenate([self.visual_stats, self.centroid])


def _circular_hue_mean(hue: np.ndarray) -> float:
    angles = hue * (2.0 * np.pi)
    s, c = np.sin(angles).sum(), np.cos(angles).sum()
    if abs(s) < 1e-12 and abs(c) < 1e-12:
        return 0.0
    return float((np.arctan2(s, c) / (2.0 * np.pi)) % 1.0)


def cluster_descriptor(
    rgb_image: np.ndarray | ImageFeatures,
    label_map: np.ndarray,
    cluster_id: int,
    centroid: np.ndarray,
) -> ClusterDescriptor:
    """Compute the descriptor of one cluster of ``label_map`` over the image."""
    feats = rgb_image if isinstance(rgb_image, ImageFeatures) else ImageFeatures(rgb_image)
    label_map = np.asarray(label_map)
    if label_map.shape != feats.gray.shape:
        raise ValueError("label map dims must match image dims")
    mask = label_map == cluster_id
    n_pix = int(mask.sum())
    if n_pix == 0:
        raise EmptyCluster(f"cluster {cluster_id} has no pixels")
    stats = np.array(
        [
            feats.rgb[..., 0][mask].mean(),
            feats.rgb[..., 1][mask].mean(),
            feats.rgb[..., 2][mask].mean(),
            _circular_hue_mean(feats.hue[mask]),
            feats.sat[mask].mean(),
            feats.val[mask].mean(),
            feats.gray[mask].std(),
            feats.gray[mask].mean(),
            feats.edges[mask].mean(),
        ],
        dtype=np.float64,
    )
    return ClusterDescriptor(
        visual_stats=stats,
        centroid=np.asarray(centroid, dtype=np.float64),
        area_ratio=n_pix / label_map.size,
    )
