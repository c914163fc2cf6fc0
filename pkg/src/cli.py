"""
Command-line entry point: one subcommand per pipeline stage plus `pipeline`.

    python -m src.cli pipeline --preset desk --seed 0 --out runs/desk
    python -m src.cli stylize --config configs/desk.json

Config precedence is preset < --config file < flags. Failures exit with code 1
and print one JSON line {"stage": ..., "error": ...} on stderr.
"""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import click

from src.config import settings
from src.config.presets import ConfigError, load_pipeline_config, preset_names
from src.dataset.pts import import_pts_directory
from src.dataset.store import ManifestError
from src.flows.pipeline_flow import STAGES, StageError, run_pipeline, run_stage
from src.models.annotation import Split
from src.models.configs import PipelineConfig, StreamMode

logger = logging.getLogger(__name__)


def configure_logging() -> None:
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _overrides(seed: Optional[int], out: Optional[Path], stream_mode: Optional[str]) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if seed is not None:
        overrides["seed"] = seed
    if out is not None:
        overrides["paths"] = {"output_dir": str(out)}
    if stream_mode is not None:
        overrides["detector"] = {"stream_mode": stream_mode}
    return overrides


def _fail(stage: str, error: str) -> None:
    click.echo(json.dumps({"stage": stage, "error": error}), err=True)
    sys.exit(1)


def _load_config(stage: str, preset: str, config_path: Optional[Path], overrides: Dict[str, Any]) -> PipelineConfig:
    if config_path is None and preset == "desk" and settings.DESK_CONFIG_PATH.is_file():
        config_path = settings.DESK_CONFIG_PATH
    try:
        return load_pipeline_config(preset, config_path, overrides)
    except ConfigError as e:
        _fail(stage, f"ConfigError: {e}")


def _common_options(fn):
    fn = click.option(
        "--preset", type=click.Choice(preset_names()), default="desk", show_default=True, help="Named config preset"
    )(fn)
    fn = click.option(
        "--stream-mode",
        type=click.Choice([m.value for m in StreamMode]),
        default=None,
        help="Detector stream mode override",
    )(fn)
    fn = click.option("--out", type=click.Path(path_type=Path), default=None, help="Run output directory")(fn)
    fn = click.option("--seed", type=int, default=None, help="Master seed")(fn)
    fn = click.option(
        "--config", "config_path", type=click.Path(path_type=Path), default=None, help="JSON config file"
    )(fn)
    return fn


@click.group()
def main():
    """SAN-lite: style-aggregated facial landmark detection on synthetic faces."""
    configure_logging()


def _stage_command(stage: str, help_text: str):
    @_common_options
    def command(config_path, seed, out, stream_mode, preset):
        config = _load_config(stage, preset, config_path, _overrides(seed, out, stream_mode))
        try:
            run_stage(stage, config)
        except StageError as e:
            _fail(e.stage, e.to_dict()["error"])
        click.echo(f"✅ {stage} finished; outputs in {config.paths.output_dir}")

    command.__doc__ = help_text
    return main.command(name=stage)(command)


STAGE_HELP = {
    "synth-data": "Render the synthetic train/test face datasets.",
    "stylize": "Write Light, Gray and Sketch copies of both splits.",
    "discover": "Train the style classifier and cluster hidden styles.",
    "train-gan": "Train the cycle generators between the selected clusters.",
    "aggregate": "Write style-aggregated copies of every dataset.",
    "train-detector": "Train the landmark detector in the configured stream mode.",
    "evaluate": "Evaluate the trained detector on the test split.",
    "cross-style": "Train and test detector variants across all style pairs.",
    "report": "Collect headline numbers of the run into report.json.",
}

for _stage in STAGES:
    _stage_command(_stage, STAGE_HELP[_stage])


@main.command(name="import-pts")
@click.argument("image_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--name", required=True, help="Dataset name recorded in the manifest")
@click.option(
    "--split", type=click.Choice([s.value for s in Split]), default=Split.TRAIN.value, show_default=True
)
@click.option("--margin", type=float, default=0.1, show_default=True, help="Box growth around the landmarks")
def import_pts(image_dir, name, split, margin):
    """Write a manifest for a directory of images with pts sidecars."""
    try:
        manifest = import_pts_directory(image_dir, name, split, margin)
    except ManifestError as e:
        _fail("import-pts", f"ManifestError: {e}")
    click.echo(f"✅ Imported {len(manifest)} records into {manifest.root / 'manifest.json'}")


@main.command()
@_common_options
@click.option("--resume", is_flag=True, default=False, help="Skip stages whose outputs match their markers")
def pipeline(config_path, seed, out, stream_mode, preset, resume):
    """Run every stage in order."""
    config = _load_config("pipeline", preset, config_path, _overrides(seed, out, stream_mode))
    try:
        results = run_pipeline(config, resume=resume)
    except StageError as e:
        _fail(e.stage, e.to_dict()["error"])
    report = results.get("evaluate")
    if report is not None:
        click.echo(f"📊 Mean NME {report.mean_nme:.4f}, AUC@{report.auc_threshold} {report.auc:.4f}")
    click.echo(f"✅ Pipeline finished; outputs in {config.paths.output_dir}")


if __name__ == "__main__":
    main()
