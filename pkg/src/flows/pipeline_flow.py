"""
Stage runner and end-to-end pipeline.

Each stage gets its own seed derived from the master seed and the stage name.
After a stage succeeds, pipeline_state.json records a content hash of the
paths the stage owns; `resume` skips a stage whose recorded hash still
matches its outputs and whose config fingerprint is unchanged.
"""

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from dotenv import load_dotenv

from src.flows.aggregation_flow import aggregate_datasets, train_generators
from src.flows.data_flow import stylize_data, synthesize_data
from src.flows.detector_flow import evaluate_main_detector, train_main_detector
from src.flows.discovery_flow import discover_styles
from src.flows.evaluation_flow import build_run_report, run_cross_style
from src.flows.layout import RunLayout
from src.models.configs import PipelineConfig
from src.utils.utils import atomic_write_text, derive_seed, sha256_file, sha256_tree

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

STAGES = (
    "synth-data",
    "stylize",
    "discover",
    "train-gan",
    "aggregate",
    "train-detector",
    "evaluate",
    "cross-style",
    "report",
)


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name and the underlying error."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"Stage {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause

    def to_dict(self) -> Dict[str, str]:
        return {"stage": self.stage, "error": f"{type(self.cause).__name__}: {self.cause}"}


StageFn = Callable[[PipelineConfig, RunLayout, int], Any]


def _stylize(config: PipelineConfig, layout: RunLayout, seed: int):
    return stylize_data(layout)


def _aggregate(config: PipelineConfig, layout: RunLayout, seed: int):
    return aggregate_datasets(layout)


def _evaluate(config: PipelineConfig, layout: RunLayout, seed: int):
    return evaluate_main_detector(config, layout)


def _cross_style(config: PipelineConfig, layout: RunLayout, seed: int):
    if not config.cross_style.enabled:
        logger.info("Cross-style evaluation disabled in config; skipping")
        return None
    return run_cross_style(config, layout, seed)


def _report(config: PipelineConfig, layout: RunLayout, seed: int):
    return build_run_report(config, layout)


STAGE_FUNCTIONS: Dict[str, StageFn] = {
    "synth-data": synthesize_data,
    "stylize": _stylize,
    "discover": discover_styles,
    "train-gan": train_generators,
    "aggregate": _aggregate,
    "train-detector": train_main_detector,
    "evaluate": _evaluate,
    "cross-style": _cross_style,
    "report": _report,
}


def stage_seed(config: PipelineConfig, stage: str) -> int:
    return derive_seed(config.seed, stage)


def config_fingerprint(config: PipelineConfig) -> str:
    # output_dir is where the run lives, not an input to it
    payload = config.model_dump(mode="json", exclude={"paths"})
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


def outputs_hash(paths: List[Path]) -> Optional[str]:
    """Combined content hash of the given files/directories, None when any is missing."""
    h = hashlib.sha256()
    for path in paths:
        if path.is_dir():
            h.update(sha256_tree(path).encode("ascii"))
        elif path.is_file():
            h.update(sha256_file(path).encode("ascii"))
        else:
            return None
    return h.hexdigest()


@dataclass
class PipelineState:
    path: Path
    stages: Dict[str, Dict[str, str]]

    @classmethod
    def load(cls, path: Path) -> "PipelineState":
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return cls(path=path, stages={})
        except json.JSONDecodeError:
            logger.warning(f"Ignoring unreadable pipeline state {path}")
            return cls(path=path, stages={})
        return cls(path=path, stages=dict(payload.get("stages", {})))

    def save(self) -> None:
        atomic_write_text(self.path, json.dumps({"stages": self.stages}, indent=2, sort_keys=True) + "\n")

    def is_current(self, stage: str, fingerprint: str, current_hash: Optional[str]) -> bool:
        marker = self.stages.get(stage)
        return (
            marker is not None
            and current_hash is not None
            and marker.get("config") == fingerprint
            and marker.get("outputs") == current_hash
        )

    def mark(self, stage: str, fingerprint: str, current_hash: str) -> None:
        self.stages[stage] = {"config": fingerprint, "outputs": current_hash}
        self.save()

    def invalidate_from(self, stage: str) -> None:
        """Drop the markers of stage and every later stage."""
        for name in STAGES[STAGES.index(stage) :]:
            self.stages.pop(name, None)


def run_stage(stage: str, config: PipelineConfig, layout: Optional[RunLayout] = None) -> Any:
    """
    Run one stage with its derived seed.

    Raises:
        StageError: unknown stage or any failure inside it
    """
    if stage not in STAGE_FUNCTIONS:
        raise StageError(stage, ValueError(f"Unknown stage {stage!r}; choose one of {list(STAGES)}"))
    layout = layout or RunLayout.at(config.paths.output_dir)
    seed = stage_seed(config, stage)
    logger.info(f"Running stage {stage} (seed {seed}) in {layout.root}")
    try:
        return STAGE_FUNCTIONS[stage](config, layout, seed)
    except StageError:
        raise
    except Exception as e:
        logger.error(f"Stage {stage} failed: {e}")
        raise StageError(stage, e) from e


def run_pipeline(config: PipelineConfig, resume: bool = False) -> Dict[str, Any]:
    """
    Run every stage in order and record a marker after each one.

    With resume, stages whose outputs still match their markers are skipped;
    once one stage reruns, every later stage reruns too.

    Returns:
        Stage name -> stage result (None for skipped stages)
    """
    layout = RunLayout.at(config.paths.output_dir)
    layout.root.mkdir(parents=True, exist_ok=True)
    state = PipelineState.load(layout.state_path) if resume else PipelineState(path=layout.state_path, stages={})
    fingerprint = config_fingerprint(config)
    outputs = layout.stage_outputs()

    results: Dict[str, Any] = {}
    rerun = not resume
    for stage in STAGES:
        if not rerun and state.is_current(stage, fingerprint, outputs_hash(outputs[stage])):
            logger.info(f"Skipping stage {stage}: outputs match the recorded marker")
            results[stage] = None
            continue
        if not rerun:
            state.invalidate_from(stage)
            rerun = True
        results[stage] = run_stage(stage, config, layout)
        current = outputs_hash(outputs[stage])
        if current is not None:
            state.mark(stage, fingerprint, current)
    return results
