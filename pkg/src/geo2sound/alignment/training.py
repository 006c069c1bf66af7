"""AdamW training loop with seeded validation split and early stopping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyDataset
from .network import (
    PARAM_NAMES,
    Normalizer,
    ProjectionModel,
    analytic_gradients,
    forward_batch,
    init_projection_model,
)


@dataclass
class TrainConfig:
    lr: float = 1e-3
    weight_decay: float = 1e-4
    batch_size: int = 64
    max_epochs: int = 80
    patience: int = 12
    val_fraction: float = 0.15
    seed: int = 42
    hidden_dim: int = 256
    dropout_rate: float = 0.1
    pca_dims: int = 32

    def __post_init__(self):
        if not (0.0 < self.val_fraction < 1.0):
            raise ValueError("val_fraction must be in (0, 1)")
        for name in ("lr", "weight_decay", "batch_size", "max_epochs", "patience"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def validation_split(n: int, val_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle; the first ``val_fraction`` of the permutation is validation."""
    if n < 2:
        raise EmptyDataset("need at least 2 samples to split")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_val = max(1, int(n * val_fraction))
    if n_val >= n:
        n_val = n - 1
    return perm[n_val:], perm[:n_val]


_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8


class _AdamW:
    """Adam with decoupled weight decay applied to weight matrices."""

    def __init__(self, params: dict[str, np.ndarray], lr: float, weight_decay: float):
        self.lr = lr
        self.weight_decay = weight_decay
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - _ADAM_BETA1**self.t
        bc2 = 1.0 - _ADAM_BETA2**self.t
        for k in PARAM_NAMES:
            g = grads[k]
            self.m[k] = _ADAM_BETA1 * self.m[k] + (1.0 - _ADAM_BETA1) * g
            self.v[k] = _ADAM_BETA2 * self.v[k] + (1.0 - _ADAM_BETA2) * g**2
            update = (self.m[k] / bc1) / (np.sqrt(self.v[k] / bc2) + _ADAM_EPS)
            params[k] -= self.lr * update
            if k.startswith("W") and self.weight_decay > 0.0:
                params[k] -= self.lr * self.weight_decay * params[k]


def _eval_cosine(model: ProjectionModel, G: np.ndarray, T_hat: np.ndarray) -> float:
    y, _ = forward_batch(model, G, train_mode=False)
    return float(np.mean(np.sum(y * T_hat, axis=1)))


def train_projection(
    geo: np.ndarray,
    audio_pca_targets: np.ndarray,
    cfg: TrainConfig,
    split: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[ProjectionModel, list[dict]]:
    """Fit the projection MLP with early stopping on validation loss.

    ``split`` overrides the internal seeded split with precomputed
    (train_indices, val_indices); the pipeline uses this to fit PCA on
    exactly the training rows. History rows always satisfy
    ``loss == 1 - cosine``. The weights from the best validation epoch are
    restored before returning.
    """
    G = np.asarray(geo, dtype=np.float64)
    T = np.asarray(audio_pca_targets, dtype=np.float64)
    if G.ndim != 2 or G.shape[0] == 0:
        raise EmptyDataset("geo matrix is empty")
    if G.shape[0] != T.shape[0]:
        raise ValueError("geo and target row counts differ")
    n = G.shape[0]
    train_idx, val_idx = split if split is not None else validation_split(n, cfg.val_fraction, cfg.seed)

    t_norms = np.linalg.norm(T, axis=1, keepdims=True)
    T_hat = T / np.maximum(t_norms, 1e-12)

    rng = np.random.default_rng(cfg.seed)
    normalizer = Normalizer.fit(G[train_idx])
    model = init_projection_model(
        rng,
        in_dim=G.shape[1],
        hidden_dim=cfg.hidden_dim,
        out_dim=T.shape[1],
        dropout_rate=cfg.dropout_rate,
        normalizer=normalizer,
    )
    optimizer = _AdamW(model.params, cfg.lr, cfg.weight_decay)

    history: list[dict] = []
    best_val_loss = np.inf
    best_epoch = -1
    best_params: dict[str, np.ndarray] | None = None
    stale = 0
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(train_idx.shape[0])
        epoch_cos = 0.0
        for start in range(0, order.shape[0], cfg.batch_size):
            batch = train_idx[order[start : start + cfg.batch_size]]
            loss, grads = analytic_gradients(model, G[batch], T_hat[batch], train_mode=True, rng=rng)
            optimizer.step(model.params, grads)
            epoch_cos += (1.0 - loss) * batch.shape[0]
        train_cosine = epoch_cos / train_idx.shape[0]
        val_cosine = _eval_cosine(model, G[val_idx], T_hat[val_idx])
        record = {
            "epoch": epoch,
            "train_loss": 1.0 - train_cosine,
            "train_cosine": train_cosine,
            "val_loss": 1.0 - val_cosine,
            "val_cosine": val_cosine,
        }
        history.append(record)
        if record["val_loss"] < best_val_loss:
            best_val_loss = record["val_loss"]
            best_epoch = epoch
            best_params = {k: v.copy() for k, v in model.params.items()}
            stale = 0
        else:
            stale += 1
            if stale > cfg.patience:
                break
    if best_params is not None:
        model.params = best_params
    for record in history:
        record["best_epoch"] = best_epoch
    return model, history
