"""
Stage runner and resume markers, with every stage replaced by a stub that
writes a file into the paths the stage owns.
"""

import json

import pytest

from src.flows import pipeline_flow
from src.flows.layout import RunLayout
from src.flows.pipeline_flow import (
    STAGES,
    PipelineState,
    StageError,
    config_fingerprint,
    outputs_hash,
    run_pipeline,
    run_stage,
    stage_seed,
)
from src.models.configs import PipelineConfig
from src.utils.utils import derive_seed


def _stub(stage, calls):
    def run(config, layout, seed):
        calls.append((stage, seed))
        target = layout.stage_outputs()[stage][0]
        if target.suffix == ".json":
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(json.dumps({"stage": stage}))
        else:
            target.mkdir(parents=True, exist_ok=True)
            (target / "out.txt").write_text(f"{stage}:{seed}")
        # stylize owns three directories
        for extra in layout.stage_outputs()[stage][1:]:
            extra.mkdir(parents=True, exist_ok=True)
            (extra / "out.txt").write_text(stage)
        return stage

    return run


@pytest.fixture
def config(tmp_path):
    return PipelineConfig(seed=11, paths={"output_dir": tmp_path / "run"})


@pytest.fixture
def calls(mocker):
    recorded = []
    mocker.patch.dict(pipeline_flow.STAGE_FUNCTIONS, {stage: _stub(stage, recorded) for stage in STAGES})
    return recorded


class TestRunPipeline:
    def test_runs_every_stage_in_order(self, config, calls):
        results = run_pipeline(config)
        assert [stage for stage, _ in calls] == list(STAGES)
        assert results == {stage: stage for stage in STAGES}
        state = json.loads((config.paths.output_dir / "pipeline_state.json").read_text())
        assert sorted(state["stages"]) == sorted(STAGES)

    def test_each_stage_gets_derived_seed(self, config, calls):
        run_pipeline(config)
        assert dict(calls)["discover"] == derive_seed(11, "discover")
        assert stage_seed(config, "train-gan") == derive_seed(11, "train-gan")

    def test_resume_skips_finished_stages(self, config, calls):
        run_pipeline(config)
        calls.clear()
        results = run_pipeline(config, resume=True)
        assert calls == []
        assert all(value is None for value in results.values())

    def test_resume_reruns_from_changed_output(self, config, calls):
        run_pipeline(config)
        calls.clear()
        layout = RunLayout.at(config.paths.output_dir)
        (layout.gan_dir / "out.txt").write_text("tampered")
        run_pipeline(config, resume=True)
        assert [stage for stage, _ in calls] == list(STAGES[STAGES.index("train-gan") :])

    def test_resume_reruns_on_config_change(self, config, calls):
        run_pipeline(config)
        calls.clear()
        run_pipeline(config.model_copy(update={"seed": 12}), resume=True)
        assert len(calls) == len(STAGES)

    def test_without_resume_everything_reruns(self, config, calls):
        run_pipeline(config)
        calls.clear()
        run_pipeline(config)
        assert len(calls) == len(STAGES)

    def test_failure_names_stage(self, config, calls, mocker):
        mocker.patch.dict(
            pipeline_flow.STAGE_FUNCTIONS,
            {"aggregate": mocker.Mock(side_effect=FileNotFoundError("no generators"))},
        )
        with pytest.raises(StageError) as excinfo:
            run_pipeline(config)
        assert excinfo.value.stage == "aggregate"
        assert excinfo.value.to_dict() == {"stage": "aggregate", "error": "FileNotFoundError: no generators"}
        assert [stage for stage, _ in calls] == list(STAGES[: STAGES.index("aggregate")])


class TestRunStage:
    def test_unknown_stage(self, config):
        with pytest.raises(StageError, match="Unknown stage"):
            run_stage("deploy", config)

    def test_cross_style_disabled_is_skipped(self, config, mocker):
        run = mocker.patch("src.flows.pipeline_flow.run_cross_style")
        disabled = config.model_copy(update={"cross_style": config.cross_style.model_copy(update={"enabled": False})})
        assert run_stage("cross-style", disabled) is None
        run.assert_not_called()

    def test_missing_inputs_fail_with_stage_name(self, config):
        with pytest.raises(StageError) as excinfo:
            run_stage("stylize", config)
        assert excinfo.value.stage == "stylize"
        assert "synth-data first" in str(excinfo.value)


class TestMarkers:
    def test_fingerprint_ignores_output_dir(self, config, tmp_path):
        moved = PipelineConfig(seed=11, paths={"output_dir": tmp_path / "elsewhere"})
        assert config_fingerprint(moved) == config_fingerprint(config)
        assert config_fingerprint(config.model_copy(update={"seed": 1})) != config_fingerprint(config)

    def test_outputs_hash(self, tmp_path):
        (tmp_path / "d").mkdir()
        (tmp_path / "d" / "a.txt").write_text("a")
        (tmp_path / "f.json").write_text("{}")
        first = outputs_hash([tmp_path / "d", tmp_path / "f.json"])
        assert first == outputs_hash([tmp_path / "d", tmp_path / "f.json"])
        (tmp_path / "d" / "a.txt").write_text("b")
        assert outputs_hash([tmp_path / "d", tmp_path / "f.json"]) != first
        assert outputs_hash([tmp_path / "missing"]) is None

    def test_unreadable_state_is_ignored(self, tmp_path):
        path = tmp_path / "pipeline_state.json"
        path.write_text("{broken")
        assert PipelineState.load(path).stages == {}

    def test_invalidate_from(self, tmp_path):
        state = PipelineState(path=tmp_path / "s.json", stages={s: {"config": "c", "outputs": "o"} for s in STAGES})
        state.invalidate_from("evaluate")
        assert list(state.stages) == list(STAGES[: STAGES.index("evaluate")])
