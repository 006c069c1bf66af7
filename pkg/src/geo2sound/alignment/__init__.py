"""Geo-to-acoustic projection training and cosine candidate selection."""

from .pca import PCAModel, fit_pca, pca_project
from .network import (
    Normalizer,
    ProjectionModel,
    analytic_gradients,
    cosine_loss,
    gelu,
    init_projection_model,
    mlp_forward,
)
from .training import TrainConfig, train_projection, validation_split
from .selection import CandidateScores, select_candidate
from .model_io import load_projection_model, save_projection_model

__all__ = [
    "CandidateScores",
    "Normalizer",
    "PCAModel",
    "ProjectionModel",
    "TrainConfig",
    "analytic_gradients",
    "cosine_loss",
    "fit_pca",
    "gelu",
    "init_projection_model",
    "load_projection_model",
    "mlp_forward",
    "pca_project",
    "save_projection_model",
    "select_candidate",
    "train_projection",
    "validation_split",
]
