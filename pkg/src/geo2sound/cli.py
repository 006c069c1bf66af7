"""Command-line client for the pipeline service.

Every subcommand posts to the service named by ``--server`` (or the
``GEO2SOUND_SERVICE_URL`` environment variable); without one, an
in-process service instance handles the request. Configuration comes from
an optional TOML file plus flags; flags win. Exit codes: 0 success,
1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

import click

from .client import PipelineClient, ServiceError
from .config import _read_toml


def _echo_result(result: dict) -> None:
    click.echo(json.dumps(result, indent=2, sort_keys=True))


def _merge_overrides(config_path: str | None, seed: int | None) -> dict:
    overrides = _read_toml(config_path) if config_path else {}
    if seed is not None:
        overrides["seed"] = seed
    return overrides


def _run(ctx: click.Context, method: str, **payload) -> None:
    client: PipelineClient = ctx.obj
    try:
        _echo_result(getattr(client, method)(**payload))
    except ServiceError as exc:
        click.echo(f"error: {exc} ({exc.error_type or exc.status_code})", err=True)
        sys.exit(1)


@click.group()
@click.option("--server", envvar="GEO2SOUND_SERVICE_URL", default=None, metavar="URL",
              help="Pipeline service URL; in-process when omitted.")
@click.version_option(package_name="geo2sound")
@click.pass_context
def main(ctx, server):
    """Geo2Sound pipeline: attributes, alignment, selection, evaluation."""
    ctx.obj = PipelineClient(server)


@main.command("extract-attrs")
@click.option("--manifest", "manifest_path", required=True, help="Scene manifest JSON.")
@click.option("--forest", "forest_path", required=True, help="Trained classifier file.")
@click.option("--out", "out_csv", required=True, help="Output geo.csv path.")
@click.option("--config", "config_path", default=None, help="TOML config file.")
@click.option("--seed", type=int, default=None, help="Global seed override.")
@click.option("--jobs", type=int, default=1, show_default=True, help="Scene-level parallelism.")
@click.option("--keep-going", is_flag=True, help="Write partial CSV instead of failing on scene errors.")
@click.pass_context
def extract_attrs(ctx, manifest_path, forest_path, out_csv, config_path, seed, jobs, keep_going):
    """Extract geographic descriptors for every scene in a manifest."""
    _run(
        ctx, "extract_attrs",
        manifest_path=manifest_path, forest_path=forest_path, out_csv=out_csv,
        keep_going=keep_going, jobs=jobs, overrides=_merge_overrides(config_path, seed),
    )


@main.command("train-attrs-classifier")
@click.option("--features", "features_path", default=None, help="Feature tensor (n x 1033).")
@click.option("--labels", "labels_path", default=None, help="Label tensor (n,).")
@click.option("--manifest", "manifest_path", default=None,
              help="Scene manifest to pseudo-label when no tensors are given.")
@click.option("--out", "out_path", required=True, help="Output classifier file.")
@click.option("--emit-features", "emit_features_prefix", default=None,
              help="Also write <prefix>.features.npy / <prefix>.labels.npy.")
@click.option("--config", "config_path", default=None)
@click.option("--seed", type=int, default=None)
@click.pass_context
def train_attrs_classifier(ctx, features_path, labels_path, manifest_path, out_path,
                           emit_features_prefix, config_path, seed):
    """Two-stage-train the cluster classifier."""
    _run(
        ctx, "train_attrs_classifier",
        out_path=out_path, features_path=features_path, labels_path=labels_path,
        manifest_path=manifest_path, emit_features_prefix=emit_features_prefix,
        overrides=_merge_overrides(config_path, seed),
    )


@main.command("train-align")
@click.option("--geo", "geo_csv", required=True, help="geo.csv from extract-attrs.")
@click.option("--targets", "targets_npy", required=True, help="Raw audio-embedding tensor (n x D).")
@click.option("--out", "out_model", required=True, help="Output model file.")
@click.option("--history", "history_out", default=None, help="Optional per-epoch history JSON.")
@click.option("--config", "config_path", default=None)
@click.option("--seed", type=int, default=None)
@click.pass_context
def train_align(ctx, geo_csv, targets_npy, out_model, history_out, config_path, seed):
    """Train the geo-to-acoustic projection."""
    _run(
        ctx, "train_align",
        geo_csv=geo_csv, targets_npy=targets_npy, out_model=out_model,
        history_out=history_out, overrides=_merge_overrides(config_path, seed),
    )


@main.command("select")
@click.option("--model", "model_path", required=True, help="Trained projection model.")
@click.option("--manifest", "manifest_path", required=True)
@click.option("--out", "out_csv", required=True, help="Output selections.csv.")
@click.option("--geo", "geo_csv", default=None, help="Join descriptors from a geo.csv by scene_id.")
@click.pass_context
def select(ctx, model_path, manifest_path, out_csv, geo_csv):
    """Rank candidate audio embeddings per scene and pick the best."""
    _run(ctx, "select", model_path=model_path, manifest_path=manifest_path,
         out_csv=out_csv, geo_csv=geo_csv)


@main.command("evaluate")
@click.option("--gen-dir", required=True, help="Generated-set tensor directory.")
@click.option("--ref-dir", required=True, help="Reference-set tensor directory.")
@click.option("--report", "report_out", required=True, help="Output report JSON.")
@click.option("--selections", "selections_csv", default=None, help="selections.csv for GeoAlign.")
@click.pass_context
def evaluate(ctx, gen_dir, ref_dir, report_out, selections_csv):
    """Compute the objective metric suite."""
    _run(ctx, "evaluate", gen_dir=gen_dir, ref_dir=ref_dir, report_out=report_out,
         selections_csv=selections_csv)


@main.command("synth-bench")
@click.option("--config", "config_path", default=None,
              help="TOML with [world] / [train] tables and a sweep array.")
@click.option("--out", "report_out", required=True, help="Report JSON path.")
@click.option("--seed", type=int, default=None)
@click.pass_context
def synth_bench(ctx, config_path, report_out, seed):
    """Generate the synthetic world, train the ablation arms, sweep N."""
    doc = _read_toml(config_path) if config_path else {}
    world = dict(doc.get("world", {}))
    train = dict(doc.get("train", {}))
    sweep = list(doc.get("sweep", [1, 3, 6, 10]))
    if seed is not None:
        world["seed"] = seed
        train["seed"] = seed
    out_path = Path(report_out)
    out_dir = out_path.parent if out_path.parent != Path("") else Path(".")
    client: PipelineClient = ctx.obj
    try:
        result = client.synth_bench(out_dir=str(out_dir), world=world, train=train, sweep=sweep)
    except ServiceError as exc:
        click.echo(f"error: {exc} ({exc.error_type or exc.status_code})", err=True)
        sys.exit(1)
    written = Path(result["report_path"])
    if written.resolve() != out_path.resolve():
        shutil.copyfile(written, out_path)
        result["report_path"] = str(out_path)
    _echo_result(result)


@main.command("hypothesis-plan")
@click.option("--manifest", "manifest_path", required=True)
@click.option("--out", "out_path", required=True, help="Output plan JSON.")
@click.option("--mode", type=click.Choice(["ours", "control", "basic"]), default="ours",
              show_default=True)
@click.option("--samples", "samples_per_hypothesis", type=int, default=2, show_default=True)
@click.option("--seed", "base_seed", type=int, default=0, show_default=True)
@click.option("--emit-prompts", is_flag=True, help="Include expansion prompt payloads in the plan.")
@click.option("--replay-dir", default=None,
              help="Submit plans against pre-generated embeddings in this directory.")
@click.option("--submit", is_flag=True,
              help="Submit plans to the generator at GEO2SOUND_GENERATOR_URL.")
@click.pass_context
def hypothesis_plan(ctx, manifest_path, out_path, mode, samples_per_hypothesis, base_seed,
                    emit_prompts, replay_dir, submit):
    """Plan the (hypothesis, sample) candidate grid for each scene."""
    _run(ctx, "hypothesis_plan", manifest_path=manifest_path, out_path=out_path, mode=mode,
         samples_per_hypothesis=samples_per_hypothesis, base_seed=base_seed,
         emit_prompts=emit_prompts, replay_dir=replay_dir, submit=submit)


if __name__ == "__main__":
    main()
