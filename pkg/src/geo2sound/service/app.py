"""FastAPI service exposing the pipeline stages.

Run with ``uvicorn geo2sound.service:app``. Domain errors surface as
HTTP 422 with the exception type and message; anything else is a 500.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..config import load_pipeline_config
from ..errors import Geo2SoundError
from ..pipeline import (
    evaluate_run,
    extract_attrs_run,
    hypothesis_plan_run,
    select_run,
    train_align_run,
    train_attrs_classifier_run,
)
from ..synthworld import SynthWorldConfig, run_desk_benchmark
from ..alignment import TrainConfig
from . import schemas


def create_app() -> FastAPI:
    app = FastAPI(title="geo2sound", version=__version__)

    @app.exception_handler(Geo2SoundError)
    async def _domain_error(_request: Request, exc: Geo2SoundError):
        return JSONResponse(
            status_code=422,
            content={"detail": str(exc), "error_type": type(exc).__name__},
        )

    @app.exception_handler(FileNotFoundError)
    async def _missing_file(_request: Request, exc: FileNotFoundError):
        return JSONResponse(status_code=422, content={"detail": str(exc), "error_type": "FileNotFound"})

    @app.exception_handler(ValueError)
    async def _bad_value(_request: Request, exc: ValueError):
        return JSONResponse(status_code=422, content={"detail": str(exc), "error_type": "ValueError"})

    @app.exception_handler(Exception)
    async def _unexpected(_request: Request, exc: Exception):
        return JSONResponse(
            status_code=500,
            content={"detail": f"{type(exc).__name__}: {exc}", "error_type": type(exc).__name__},
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/attrs/extract", response_model=schemas.ExtractAttrsResponse)
    def attrs_extract(req: schemas.ExtractAttrsRequest):
        cfg = load_pipeline_config(overrides=req.overrides)
        result = extract_attrs_run(
            req.manifest_path,
            req.forest_path,
            req.out_csv,
            cfg.geoattr,
            keep_going=req.keep_going,
            jobs=req.jobs,
        )
        return schemas.ExtractAttrsResponse(**result)

    @app.post("/attrs/train-classifier", response_model=schemas.TrainClassifierResponse)
    def attrs_train_classifier(req: schemas.TrainClassifierRequest):
        cfg = load_pipeline_config(overrides=req.overrides)
        result = train_attrs_classifier_run(
            req.out_path,
            forest_cfg=cfg.forest,
            features_path=req.features_path,
            labels_path=req.labels_path,
            manifest_path=req.manifest_path,
            geoattr_cfg=cfg.geoattr,
            emit_features_prefix=req.emit_features_prefix,
        )
        return schemas.TrainClassifierResponse(**result)

    @app.post("/align/train", response_model=schemas.TrainAlignResponse)
    def align_train(req: schemas.TrainAlignRequest):
        cfg = load_pipeline_config(overrides=req.overrides)
        result = train_align_run(
            req.geo_csv, req.targets_npy, req.out_model, cfg.train, history_out=req.history_out
        )
        return schemas.TrainAlignResponse(**result)

    @app.post("/align/select", response_model=schemas.SelectResponse)
    def align_select(req: schemas.SelectRequest):
        result = select_run(req.model_path, req.manifest_path, req.out_csv, geo_csv=req.geo_csv)
        return schemas.SelectResponse(**result)

    @app.post("/metrics/evaluate", response_model=schemas.EvaluateResponse)
    def metrics_evaluate(req: schemas.EvaluateRequest):
        report = evaluate_run(req.gen_dir, req.ref_dir, req.report_out, selections_csv=req.selections_csv)
        return schemas.EvaluateResponse(
            fad=report["fad"],
            fd=report["fd"],
            kl=report["kl"],
            ovl=report["ovl"],
            is_score=report["is_score"],
            clap=report["clap"],
            geoalign_mean=report["geoalign_mean"],
            report_out=req.report_out,
        )

    @app.post("/synth/bench", response_model=schemas.SynthBenchResponse)
    def synth_bench(req: schemas.SynthBenchRequest):
        world_cfg = SynthWorldConfig(**req.world)
        train_cfg = TrainConfig(**req.train) if req.train else TrainConfig()
        report = run_desk_benchmark(world_cfg, train_cfg, sweep=tuple(req.sweep), out_dir=req.out_dir)
        return schemas.SynthBenchResponse(
            arms={k: schemas.ArmResult(**v) for k, v in report["arms"].items()},
            sweep=[schemas.SweepRow(**row) for row in report["sweep"]],
            report_path=str(Path(req.out_dir) / "report.json"),
        )

    @app.post("/hypothesis/plan", response_model=schemas.HypothesisPlanResponse)
    def hypothesis_plan(req: schemas.HypothesisPlanRequest):
        result = hypothesis_plan_run(
            req.manifest_path,
            req.out_path,
            mode=req.mode,
            samples_per_hypothesis=req.samples_per_hypothesis,
            base_seed=req.base_seed,
            emit_prompts=req.emit_prompts,
            replay_dir=req.replay_dir,
            submit=req.submit,
            generator_url=req.generator_url,
        )
        return schemas.HypothesisPlanResponse(**result)

    return app


app = create_app()
