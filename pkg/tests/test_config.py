"""
Tests for run configuration.
"""

import json
from pathlib import Path

import pytest

from src.config import CONFIG_ENV_VAR, RetryPolicy, RunConfig, load_config, resolve_config
from src.errors import ConfigError


def write_config(path: Path, data: dict) -> Path:
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


class TestRetryPolicy:
    def test_delays(self) -> None:
        policy = RetryPolicy(initial_interval=1, maximum_interval=3, backoff_coefficient=2, maximum_attempts=4)
        assert list(policy.delays()) == [0.0, 1, 2, 3]

    def test_at_least_one_attempt(self) -> None:
        assert list(RetryPolicy(maximum_attempts=0).delays()) == [0.0]


class TestResolveConfig:
    @pytest.fixture(autouse=True)
    def no_env_config(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.delenv(CONFIG_ENV_VAR, raising=False)

    def test_defaults(self) -> None:
        config = resolve_config()

        assert config.k == 50
        assert config.max_tool_calls == 3
        assert config.backend == "positional"
        assert config.tolerance == 2
        assert config.model.model == "gpt-3.5-turbo-0125"

    def test_file_then_flags(self, tmp_path: Path) -> None:
        path = write_config(tmp_path / "c.json", {"k": 10, "parallelism": 8, "model": {"model": "gpt-4o"}})

        config = resolve_config(path, {"k": 5, "parallelism": None, "model.script_path": "s.json"})

        assert config.k == 5
        assert config.parallelism == 8
        assert config.model.model == "gpt-4o"
        assert config.model.script_path == "s.json"

    def test_env_var_names_file(self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
        path = write_config(tmp_path / "c.json", {"max_tool_calls": 2})
        monkeypatch.setenv(CONFIG_ENV_VAR, str(path))

        assert resolve_config().max_tool_calls == 2

    def test_nested_retry(self, tmp_path: Path) -> None:
        path = write_config(tmp_path / "c.json", {"model": {"retry": {"maximum_attempts": 5}}})

        assert load_config(path).model.retry.maximum_attempts == 5

    @pytest.mark.parametrize(
        "data", [{"kk": 1}, {"model": {"temperature": 1}}, {"embedding": {"retry": {"jitter": 1}}}]
    )
    def test_unknown_keys(self, tmp_path: Path, data: dict) -> None:
        with pytest.raises(ConfigError, match="unknown"):
            load_config(write_config(tmp_path / "c.json", data))

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.json")

    def test_not_an_object(self, tmp_path: Path) -> None:
        path = tmp_path / "c.json"
        path.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(path)

    @pytest.mark.parametrize(
        "data",
        [
            {"k": "five"},
            {"k": 2.5},
            {"strict_scoring": "sometimes"},
            {"superscripts": "109^1"},
            {"model": {"timeout": "soon"}},
            {"embedding": {"batch_size": 0}},
            {"model": {"retry": {"maximum_attempts": "many"}}},
        ],
    )
    def test_wrong_types(self, tmp_path: Path, data: dict) -> None:
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path / "c.json", data))

    def test_numeric_strings_are_coerced(self, tmp_path: Path) -> None:
        assert load_config(write_config(tmp_path / "c.json", {"k": "5"})).k == 5

    def test_error_names_the_setting(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigError, match="model.timeout"):
            load_config(write_config(tmp_path / "c.json", {"model": {"timeout": "soon"}}))

    def test_round_trip(self) -> None:
        config = RunConfig(k=7, superscripts=["109^1"])
        assert RunConfig.from_dict(config.to_dict()) == config


class TestRanges:
    @pytest.mark.parametrize(
        "overrides",
        [
            {"k": 0},
            {"max_tool_calls": 0},
            {"parallelism": 0},
            {"tolerance": -1},
            {"backend": "bm25"},
            {"extractor": "llm"},
            {"backend": "vector"},
        ],
    )
    def test_out_of_range(self, overrides: dict) -> None:
        with pytest.raises(ConfigError):
            RunConfig.from_dict(overrides)


class TestRequireFiles:
    def test_required_files(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigError, match="no corpus path"):
            RunConfig().require_files(corpus=True)
        with pytest.raises(ConfigError, match="corpus file not found"):
            RunConfig(corpus_path=str(tmp_path / "missing.json")).require_files(corpus=True)

    def test_valid(self, civil_corpus: Path) -> None:
        RunConfig(corpus_path=str(civil_corpus)).require_files(corpus=True)
