"""Pydantic request/response models for the pipeline service.

Requests carry file paths, not payloads: the service and its clients share
a filesystem, and every stage reads and writes the same tensor/CSV/JSON
artifacts the library documents.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class SceneFailure(BaseModel):
    scene_id: str
    error: str


class ExtractAttrsRequest(BaseModel):
    manifest_path: str
    forest_path: str
    out_csv: str
    keep_going: bool = False
    jobs: int = Field(default=1, ge=1)
    overrides: dict = Field(default_factory=dict)


class ExtractAttrsResponse(BaseModel):
    rows: int
    failures: list[SceneFailure]
    out_csv: str


class TrainClassifierRequest(BaseModel):
    out_path: str
    features_path: str | None = None
    labels_path: str | None = None
    manifest_path: str | None = None
    emit_features_prefix: str | None = None
    overrides: dict = Field(default_factory=dict)


class TrainClassifierResponse(BaseModel):
    n_samples: int
    kept: int
    stage1_fallback: bool
    out_path: str


class TrainAlignRequest(BaseModel):
    geo_csv: str
    targets_npy: str
    out_model: str
    history_out: str | None = None
    overrides: dict = Field(default_factory=dict)


class TrainAlignResponse(BaseModel):
    best_val_cosine: float
    best_val_loss: float
    best_epoch: int
    epochs_run: int
    out_model: str


class SelectRequest(BaseModel):
    model_path: str
    manifest_path: str
    out_csv: str
    geo_csv: str | None = None


class SelectResponse(BaseModel):
    rows: int
    out_csv: str


class EvaluateRequest(BaseModel):
    gen_dir: str
    ref_dir: str
    report_out: str
    selections_csv: str | None = None


class EvaluateResponse(BaseModel):
    fad: float
    fd: float
    kl: float
    ovl: float
    is_score: float
    clap: float | None = None
    geoalign_mean: float | None = None
    report_out: str


class SynthBenchRequest(BaseModel):
    out_dir: str
    world: dict = Field(default_factory=dict)
    train: dict = Field(default_factory=dict)
    sweep: list[int] = Field(default_factory=lambda: [1, 3, 6, 10])


class ArmResult(BaseModel):
    best_val_cosine: float
    best_val_loss: float
    best_epoch: int
    epochs_run: int
    selection_accuracy: float
    mean_geoalign: float


class SweepRow(BaseModel):
    n: int
    selection_accuracy: float
    mean_geoalign: float


class SynthBenchResponse(BaseModel):
    arms: dict[str, ArmResult]
    sweep: list[SweepRow]
    report_path: str


class HypothesisPlanRequest(BaseModel):
    manifest_path: str
    out_path: str
    mode: str = "ours"
    samples_per_hypothesis: int = Field(default=2, ge=1)
    base_seed: int = 0
    emit_prompts: bool = False
    replay_dir: str | None = None
    submit: bool = False
    generator_url: str | None = None


class HypothesisPlanResponse(BaseModel):
    scenes: int
    entries_total: int
    out_path: str
    submitted: int | None = None
