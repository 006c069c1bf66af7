"""Projection MLP (5 -> 256 -> 256 -> 32) with exact-erf GELU and analytic gradients.

The forward pass z-scores the geographic descriptor, applies two
GELU+dropout hidden layers and a linear output layer, then L2-normalizes.
A zero output vector (possible with degenerate weights) falls back to the
first basis vector so downstream cosines stay defined; that fallback is
treated as locally constant by the backward pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from ..errors import ZeroVector

_NORM_EPS = 1e-12
_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def gelu(x: np.ndarray) -> np.ndarray:
    """Exact Gaussian-CDF GELU: x * Phi(x)."""
    return 0.5 * x * (1.0 + erf(x * _INV_SQRT2))


def gelu_grad(x: np.ndarray) -> np.ndarray:
    phi = np.exp(-0.5 * x**2) * _INV_SQRT_2PI
    return 0.5 * (1.0 + erf(x * _INV_SQRT2)) + x * phi


@dataclass
class Normalizer:
    mean: np.ndarray  # (in_dim,)
    std: np.ndarray  # (in_dim,), floored at 1e-8

    def apply(self, g: np.ndarray) -> np.ndarray:
        return (np.asarray(g, dtype=np.float64) - self.mean) / self.std

    @classmethod
    def fit(cls, G: np.ndarray) -> "Normalizer":
        G = np.asarray(G, dtype=np.float64)
        return cls(mean=G.mean(axis=0), std=np.maximum(G.std(axis=0), 1e-8))


PARAM_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3")


@dataclass
class ProjectionModel:
    normalizer: Normalizer
    params: dict[str, np.ndarray]
    dropout_rate: float = 0.1
    pca: object | None = None  # PCAModel used to place audio embeddings in target space

    @property
    def in_dim(self) -> int:
        return self.params["W1"].shape[0]

    @property
    def out_dim(self) -> int:
        return self.params["W3"].shape[1]


def init_projection_model(
    rng: np.random.Generator,
    in_dim: int = 5,
    hidden_dim: int = 256,
    out_dim: int = 32,
    dropout_rate: float = 0.1,
    normalizer: Normalizer | None = None,
) -> ProjectionModel:
    """Seeded uniform fan-in initialization; biases start at zero."""

    def layer(fan_in: int, fan_out: int) -> np.ndarray:
        bound = np.sqrt(6.0 / fan_in)
        return rng.uniform(-bound, bound, size=(fan_in, fan_out))

    params = {
        "W1": layer(in_dim, hidden_dim),
        "b1": np.zeros(hidden_dim),
        "W2": layer(hidden_dim, hidden_dim),
        "b2": np.zeros(hidden_dim),
        "W3": layer(hidden_dim, out_dim),
        "b3": np.zeros(out_dim),
    }
    if normalizer is None:
        normalizer = Normalizer(mean=np.zeros(in_dim), std=np.ones(in_dim))
    return ProjectionModel(normalizer=normalizer, params=params, dropout_rate=dropout_rate)


def _dropout_mask(rng: np.random.Generator, shape: tuple[int, ...], rate: float) -> np.ndarray:
    # Inverted dropout: surviving units scaled by 1/(1-rate).
    keep = rng.random(shape) >= rate
    return keep.astype(np.float64) / (1.0 - rate)


def forward_batch(
    m: ProjectionModel,
    G: np.ndarray,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, dict]:
    """Run the network on a batch (n x in_dim); returns unit-norm rows and a cache."""
    G = np.atleast_2d(np.asarray(G, dtype=np.float64))
    z = m.normalizer.apply(G)
    p = m.params
    use_dropout = train_mode and m.dropout_rate > 0.0
    if use_dropout and rng is None:
        raise ValueError("train-mode forward needs an rng for dropout masks")

    a1 = z @ p["W1"] + p["b1"]
    h1 = gelu(a1)
    d1 = _dropout_mask(rng, h1.shape, m.dropout_rate) if use_dropout else None
    h1d = h1 * d1 if use_dropout else h1
    a2 = h1d @ p["W2"] + p["b2"]
    h2 = gelu(a2)
    d2 = _dropout_mask(rng, h2.shape, m.dropout_rate) if use_dropout else None
    h2d = h2 * d2 if use_dropout else h2
    out = h2d @ p["W3"] + p["b3"]

    norms = np.sqrt(np.sum(out**2, axis=1))
    degenerate = norms < _NORM_EPS
    safe_norms = np.where(degenerate, 1.0, norms)
    y = out / safe_norms[:, None]
    if degenerate.any():
        y[degenerate] = 0.0
        y[degenerate, 0] = 1.0
    cache = {
        "z": z, "a1": a1, "h1d": h1d, "a2": a2, "h2d": h2d,
        "out": out, "norms": safe_norms, "y": y, "degenerate": degenerate,
        "d1": d1, "d2": d2,
    }
    return y, cache


def mlp_forward(
    m: ProjectionModel,
    g: np.ndarray,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Single-vector forward pass; output has unit L2 norm."""
    y, _ = forward_batch(m, np.asarray(g, dtype=np.float64).reshape(1, -1), train_mode, rng)
    return y[0]


def backward_batch(m: ProjectionModel, cache: dict, dY: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of every parameter given dLoss/dY for the cached forward pass."""
    p = m.params
    y, norms, degenerate = cache["y"], cache["norms"], cache["degenerate"]
    # Through row-wise L2 normalization: dL/dout = (dY - y (y . dY)) / ||out||.
    dot = np.sum(y * dY, axis=1, keepdims=True)
    dout = (dY - y * dot) / norms[:, None]
    dout[degenerate] = 0.0

    grads: dict[str, np.ndarray] = {}
    grads["W3"] = cache["h2d"].T @ dout
    grads["b3"] = dout.sum(axis=0)
    dh2d = dout @ p["W3"].T
    if cache["d2"] is not None:
        dh2d = dh2d * cache["d2"]
    da2 = dh2d * gelu_grad(cache["a2"])
    grads["W2"] = cache["h1d"].T @ da2
    grads["b2"] = da2.sum(axis=0)
    dh1d = da2 @ p["W2"].T
    if cache["d1"] is not None:
        dh1d = dh1d * cache["d1"]
    da1 = dh1d * gelu_grad(cache["a1"])
    grads["W1"] = cache["z"].T @ da1
    grads["b1"] = da1.sum(axis=0)
    return grads


def cosine_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """1 - cosine similarity; both vectors are normalized before the dot product."""
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    target = np.asarray(target, dtype=np.float64).reshape(-1)
    np_, nt = np.linalg.norm(pred), np.linalg.norm(target)
    if np_ < _NORM_EPS or nt < _NORM_EPS:
        raise ZeroVector("cosine loss undefined for zero vectors")
    return float(1.0 - (pred @ target) / (np_ * nt))


def batch_cosine_loss(
    m: ProjectionModel,
    G: np.ndarray,
    targets: np.ndarray,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[float, dict, np.ndarray]:
    """Mean cosine loss over a batch; returns (loss, cache, dLoss/dY)."""
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    t_norms = np.linalg.norm(targets, axis=1)
    if (t_norms < _NORM_EPS).any():
        raise ZeroVector("zero target embedding in batch")
    t_hat = targets / t_norms[:, None]
    y, cache = forward_batch(m, G, train_mode, rng)
    n = y.shape[0]
    loss = float(1.0 - np.sum(y * t_hat) / n)
    dY = -t_hat / n
    return loss, cache, dY


def analytic_gradients(
    m: ProjectionModel,
    G: np.ndarray,
    targets: np.ndarray,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Exact gradients of the mean cosine loss for one batch."""
    G = np.atleast_2d(np.asarray(G, dtype=np.float64))
    if G.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    loss, cache, dY = batch_cosine_loss(m, G, targets, train_mode, rng)
    return loss, backward_batch(m, cache, dY)
