"""PCA of audio embeddings via symmetric eigendecomposition."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch

_RANK_TOL = 1e-12


@dataclass
class PCAModel:
    mean: np.ndarray  # (D,)
    components: np.ndarray  # (dims, D) orthonormal rows, descending explained variance
    explained_variance: np.ndarray  # (dims,)
    rank_deficient: bool = False

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Project rows of X (n x D) into the component space."""
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.mean.shape[0]:
            raise DimensionMismatch(f"expected dim {self.mean.shape[0]}, got {X.shape[-1]}")
        return (X - self.mean) @ self.components.T


def fit_pca(train_embeddings: np.ndarray, dims: int = 32) -> PCAModel:
    """Fit a ``dims``-component PCA on the training embeddings only.

    Components are eigenvectors of the unbiased sample covariance, in
    descending eigenvalue order, each flipped so its largest-magnitude
    coordinate is positive. When the data has fewer than ``dims`` directions
    of nonzero variance, the remaining components come from the orthogonal
    complement of the eigenbasis with zero variance, and the model is
    flagged ``rank_deficient``.
    """
    X = np.asarray(train_embeddings, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("train_embeddings must be n x D")
    n, d = X.shape
    if n <= dims:
        raise ValueError(f"need more than dims={dims} samples, got {n}")
    if d < dims:
        raise ValueError(f"need at least dims={dims} input dimensions, got {d}")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = (centered.T @ centered) / (n - 1)
    cov = (cov + cov.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    components = eigvecs[:, :dims].T.copy()
    variances = np.clip(eigvals[:dims], 0.0, None)
    scale = abs(eigvals[0]) if eigvals.size else 1.0
    deficient = int((eigvals > max(scale, 1.0) * _RANK_TOL).sum()) < dims
    if deficient:
        warnings.warn("fewer nonzero-variance directions than requested components", RuntimeWarning)
        variances = np.where(eigvals[:dims] > max(scale, 1.0) * _RANK_TOL, variances, 0.0)
    for row in components:
        i = int(np.argmax(np.abs(row)))
        if row[i] < 0:
            row *= -1.0
    return PCAModel(
        mean=mean,
        components=components,
        explained_variance=variances,
        rank_deficient=deficient,
    )


def pca_project(pca: PCAModel, x: np.ndarray) -> np.ndarray:
    """Project a single D-vector: components @ (x - mean)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != pca.mean.shape[0]:
        raise DimensionMismatch(f"expected dim {pca.mean.shape[0]}, got {x.shape[0]}")
    return pca.components @ (x - pca.mean)
