"""Command-line surface"""

import json

import pytest
from click.testing import CliRunner

from src.cli import main
from src.flows.pipeline_flow import STAGES


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def config_file(tmp_path, tiny_pipeline_config):
    path = tmp_path / "tiny.json"
    path.write_text(tiny_pipeline_config.model_dump_json())
    return path


def _error_line(output):
    lines = [line for line in output.splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


class TestCommands:
    def test_every_stage_has_a_command(self, runner):
        result = runner.invoke(main, ["--help"])
        assert result.exit_code == 0
        for stage in STAGES + ("pipeline",):
            assert stage in result.output

    def test_unknown_config_key_fails_naming_it(self, runner, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"detector": {"sigma": 2.0}}))
        result = runner.invoke(main, ["synth-data", "--config", str(path)])
        assert result.exit_code == 1
        error = _error_line(result.output)
        assert error["stage"] == "synth-data"
        assert "detector.sigma" in error["error"]

    def test_stage_failure_reports_stage(self, runner, config_file, tmp_path):
        result = runner.invoke(main, ["stylize", "--config", str(config_file), "--out", str(tmp_path / "empty")])
        assert result.exit_code == 1
        error = _error_line(result.output)
        assert error["stage"] == "stylize"
        assert error["error"].startswith("ManifestError")

    def test_stylize_rerun_is_byte_identical(self, runner, config_file, tmp_path):
        out = tmp_path / "run"
        assert runner.invoke(main, ["synth-data", "--config", str(config_file), "--out", str(out)]).exit_code == 0
        assert runner.invoke(main, ["stylize", "--config", str(config_file), "--out", str(out)]).exit_code == 0
        first = {p: p.read_bytes() for p in sorted((out / "data" / "sketch").rglob("*")) if p.is_file()}
        result = runner.invoke(main, ["stylize", "--config", str(config_file), "--out", str(out)])
        assert result.exit_code == 0
        assert "✅ stylize finished" in result.output
        second = {p: p.read_bytes() for p in sorted((out / "data" / "sketch").rglob("*")) if p.is_file()}
        assert first and first == second

    def test_seed_flag_overrides_file(self, runner, config_file, tmp_path, mocker):
        run = mocker.patch("src.cli.run_stage")
        result = runner.invoke(main, ["discover", "--config", str(config_file), "--seed", "42", "--stream-mode", "original-only"])
        assert result.exit_code == 0
        config = run.call_args.args[1]
        assert config.seed == 42
        assert config.detector.stream_mode.value == "original-only"

    def test_pipeline_command(self, runner, config_file, mocker):
        run = mocker.patch("src.cli.run_pipeline", return_value={})
        result = runner.invoke(main, ["pipeline", "--config", str(config_file), "--resume"])
        assert result.exit_code == 0
        assert run.call_args.kwargs["resume"] is True
        assert "✅ Pipeline finished" in result.output


class TestImportPts:
    def test_writes_manifest(self, runner, tmp_path):
        (tmp_path / "face.png").write_bytes(b"")
        (tmp_path / "face.pts").write_text("version: 1\nn_points: 2\n{\n1 2\n7 9\n}\n")
        result = runner.invoke(main, ["import-pts", str(tmp_path), "--name", "real", "--split", "test"])
        assert result.exit_code == 0
        assert "✅ Imported 1 records" in result.output
        assert json.loads((tmp_path / "manifest.json").read_text())["split"] == "test"

    def test_empty_directory_fails_with_error_line(self, runner, tmp_path):
        result = runner.invoke(main, ["import-pts", str(tmp_path), "--name", "real"])
        assert result.exit_code == 1
        error = _error_line(result.output)
        assert error["stage"] == "import-pts"
        assert error["error"].startswith("ManifestError")
