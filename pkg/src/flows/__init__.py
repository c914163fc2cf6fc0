"""Orchestration flows for the SAN-lite pipeline stages"""

from .layout import RunLayout
from .pipeline_flow import STAGES, StageError, run_pipeline, run_stage
from .verify_env import verify_env_setup

__all__ = ["RunLayout", "STAGES", "StageError", "run_pipeline", "run_stage", "verify_env_setup"]
