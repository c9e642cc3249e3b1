"""
Run configuration: JSON config file, environment, and command-line overrides.

Precedence is flags > config file > defaults. Secrets are never part of the
file or the flags; only the name of the environment variable holding them is.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Iterator, Literal, Optional, get_args

from pydantic import BaseModel, Field, ValidationError, model_validator

from .errors import ConfigError

CONFIG_ENV_VAR = "STATUTE_SEARCH_CONFIG"

BackendName = Literal["positional", "vector"]
ExtractorName = Literal["patterns", "model"]

BACKENDS: tuple[str, ...] = get_args(BackendName)
EXTRACTORS: tuple[str, ...] = get_args(ExtractorName)


class RetryPolicy(BaseModel):
    """Exponential backoff between attempts of an HTTP call."""

    initial_interval: float = Field(1.0, ge=0)
    maximum_interval: float = Field(10.0, ge=0)
    backoff_coefficient: float = Field(2.0, ge=1)
    maximum_attempts: int = Field(3, ge=0)

    model_config = {"extra": "forbid"}

    def delays(self) -> Iterator[float]:
        """Delay before each attempt; the first attempt has none."""
        delay = self.initial_interval
        for attempt in range(max(1, self.maximum_attempts)):
            if attempt == 0:
                yield 0.0
                continue
            yield min(delay, self.maximum_interval)
            delay *= self.backoff_coefficient


class ModelSettings(BaseModel):
    """Chat-completion endpoint, or a scripted mock when script_path is set."""

    base_url: str = "https://api.openai.com/v1"
    model: str = Field("gpt-3.5-turbo-0125", min_length=1)
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = Field(60.0, gt=0)
    retry: RetryPolicy = Field(default_factory=RetryPolicy)
    script_path: Optional[str] = None

    model_config = {"extra": "forbid"}

    def api_key(self) -> Optional[str]:
        return os.environ.get(self.api_key_env)


class EmbeddingSettings(BaseModel):
    """Embedding provider: POST {texts} -> {vectors}."""

    url: Optional[str] = None
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = Field(30.0, gt=0)
    batch_size: int = Field(32, ge=1)
    retry: RetryPolicy = Field(default_factory=RetryPolicy)

    model_config = {"extra": "forbid"}

    def api_key(self) -> Optional[str]:
        return os.environ.get(self.api_key_env)


class RunConfig(BaseModel):
    """Everything a command needs to run."""

    corpus_path: Optional[str] = None
    dataset_path: Optional[str] = None
    model: ModelSettings = Field(default_factory=ModelSettings)
    embedding: EmbeddingSettings = Field(default_factory=EmbeddingSettings)
    k: int = Field(50, ge=1)
    max_tool_calls: int = Field(3, ge=1)
    context_budget_tokens: int = Field(8000, ge=1)
    parallelism: int = Field(4, ge=1)
    backend: BackendName = "positional"
    vector_path: Optional[str] = None
    strict_scoring: bool = False
    superscripts: list[str] = Field(default_factory=list)
    system_prompt: Optional[str] = None
    extractor: ExtractorName = "patterns"
    tolerance: int = Field(2, ge=0)
    transcripts_path: Optional[str] = None

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def vector_backend_needs_file(self) -> "RunConfig":
        if self.backend == "vector" and not self.vector_path:
            raise ValueError("backend 'vector' requires a vector file (vector_path / --vectors)")
        return self

    def to_dict(self) -> dict[str, Any]:
        return self.model_dump()

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        """Validate a config mapping.

        Raises:
            ConfigError: unknown keys, wrong types or out-of-range values.
        """
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigError(_describe(e)) from e

    def require_files(self, *, corpus: bool = False, dataset: bool = False) -> None:
        """Check that the files this run reads exist.

        Raises:
            ConfigError: the first missing path or file.
        """
        required: list[tuple[str, Optional[str]]] = []
        if corpus:
            required.append(("corpus", self.corpus_path))
        if dataset:
            required.append(("dataset", self.dataset_path))
        if self.backend == "vector":
            required.append(("vector file", self.vector_path))
        if self.model.script_path:
            required.append(("model script", self.model.script_path))
        for what, path in required:
            if not path:
                raise ConfigError(f"no {what} path given")
            if not Path(path).exists():
                raise ConfigError(f"{what} file not found: {path}")


def _describe(error: ValidationError) -> str:
    problems = error.errors()
    unknown = [".".join(map(str, p["loc"])) for p in problems if p["type"] == "extra_forbidden"]
    if unknown:
        return f"unknown setting(s): {', '.join(unknown)}"
    return "; ".join(
        f"{'.'.join(map(str, p['loc'])) or 'config'}: {p['msg']}" for p in problems
    )


def load_config(path: str | Path) -> RunConfig:
    """Read a JSON config file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return RunConfig.from_dict(data)


def resolve_config(
    config_path: Optional[str | Path] = None,
    overrides: Optional[dict[str, Any]] = None,
) -> RunConfig:
    """Defaults, then the config file, then non-None overrides.

    Override keys may address nested settings with a dot, e.g.
    "model.script_path".
    """
    config_path = config_path or os.environ.get(CONFIG_ENV_VAR)
    data = load_config(config_path).to_dict() if config_path else RunConfig().to_dict()

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        target = data
        *parents, leaf = key.split(".")
        for parent in parents:
            target = target.setdefault(parent, {})
        target[leaf] = value
    return RunConfig.from_dict(data)
