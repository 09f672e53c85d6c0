"""Tests for configuration management."""

import os
import tempfile
from pathlib import Path
from unittest.mock import patch

import pytest
from pydantic import ValidationError

from kornlab.config import (
    CLIConfig,
    ExperimentConfig,
    LabConfig,
    ResolutionConfig,
    RunConfig,
    get_config_dir,
    get_config_path,
    load_config,
    load_experiment,
    save_config,
)


class TestLabConfig:
    """Tests for config models."""

    def test_default_config(self):
        config = LabConfig()
        assert config.run.seed == 0
        assert config.run.threads == 1
        assert config.resolution.min_level == 6
        assert config.resolution.h == 1 / 64
        assert config.cli.output_format == "table"
        assert config.cli.color is True

    def test_config_with_values(self):
        config = LabConfig(
            run=RunConfig(seed=42, threads=4, out_dir="results"),
            resolution=ResolutionConfig(min_level=8, h=1 / 128),
            cli=CLIConfig(output_format="json", color=False),
        )
        assert config.run.seed == 42
        assert config.resolution.h == 1 / 128
        assert config.cli.output_format == "json"

    def test_rejects_coarse_corridors(self):
        with pytest.raises(ValidationError):
            ResolutionConfig(cells_across=4)

    def test_rejects_zero_threads(self):
        with pytest.raises(ValidationError):
            RunConfig(threads=0)


class TestConfigPaths:
    """Tests for config path functions."""

    def test_get_config_dir_default(self):
        with patch.dict(os.environ, {}, clear=True):
            config_dir = get_config_dir()
            assert config_dir == Path.home() / ".kornlab"

    def test_get_config_dir_xdg(self):
        with patch.dict(os.environ, {"XDG_CONFIG_HOME": "/custom/config"}):
            config_dir = get_config_dir()
            assert config_dir == Path("/custom/config/kornlab")

    def test_get_config_path(self):
        with patch.dict(os.environ, {}, clear=True):
            config_path = get_config_path()
            assert config_path == Path.home() / ".kornlab" / "config.toml"


class TestConfigLoadSave:
    """Tests for loading and saving config."""

    def test_load_config_default_when_missing(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            with patch("kornlab.config.get_config_path") as mock_path:
                mock_path.return_value = Path(tmpdir) / "nonexistent" / "config.toml"
                config = load_config()
                assert config.run.seed == 0

    def test_save_and_load_config(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            with patch.dict(os.environ, {"XDG_CONFIG_HOME": tmpdir}):
                config = LabConfig(
                    run=RunConfig(seed=7),
                    resolution=ResolutionConfig(h=1 / 32),
                )
                save_config(config)
                assert (Path(tmpdir) / "kornlab" / "config.toml").exists()

                loaded = load_config()
                assert loaded.run.seed == 7
                assert loaded.resolution.h == 1 / 32

    def test_env_overrides_file(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            env = {"XDG_CONFIG_HOME": tmpdir, "KORNLAB_SEED": "99", "KORNLAB_THREADS": "3"}
            with patch.dict(os.environ, env):
                save_config(LabConfig(run=RunConfig(seed=1)))
                config = load_config()
                assert config.run.seed == 99
                assert config.run.threads == 3

    def test_env_out_dir(self):
        with patch.dict(os.environ, {"KORNLAB_OUT_DIR": "/tmp/kornlab-out"}):
            assert load_config().run.out_dir == "/tmp/kornlab-out"


class TestExperimentConfig:
    """Tests for experiment files."""

    def test_load_experiment(self, tmp_path):
        path = tmp_path / "exp.json"
        path.write_text(
            '{"command": "scaling predict", "params": {"p": 3, "b": 1}, "expect": "holds"}'
        )
        exp = load_experiment(path)
        assert exp.command == "scaling predict"
        assert exp.params.p == 3
        assert exp.expect == "holds"
        assert exp.resolution.min_level == 6

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "exp.json"
        path.write_text('{"command": "scaling predict", "colour": "red"}')
        with pytest.raises(ValidationError):
            load_experiment(path)

    def test_unknown_command(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(command="scaling guess")

    def test_bad_expectation(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(command="scaling predict", expect="maybe")


EXPERIMENTS = sorted((Path(__file__).parent.parent / "experiments").glob("*.json"))


@pytest.mark.parametrize("path", EXPERIMENTS, ids=lambda p: p.stem)
def test_bundled_experiments_parse(path):
    exp = load_experiment(path)
    assert exp.domain is not None or exp.rooms is not None
