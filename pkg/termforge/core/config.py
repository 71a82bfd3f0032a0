from __future__ import annotations

import hashlib
import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from functools import lru_cache
from pathlib import Path
from typing import Any, Literal, Mapping, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from termforge import __version__
from termforge.core.errors import ArtifactIOError, ValidationFailure
from termforge.model.config import ModelConfig
from termforge.training.config import TrainConfig


class Secrets(BaseSettings):
    """Credentials, read from the environment only and never persisted."""

    model_config = SettingsConfigDict(
        env_prefix="TERMFORGE_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    api_key: Optional[str] = Field(default=None, description="Bearer token for remote embedding/generation.")


class GraphSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    theta_tok: float = Field(default=0.8, gt=0.0, lt=1.0)
    theta_sen: float = Field(default=0.7, gt=0.0, lt=1.0)
    provider: Literal["hashing", "model", "remote"] = "hashing"
    hashing_dim: int = Field(default=256, gt=0)
    hashing_seed: int = 0
    embedding_endpoint: Optional[str] = None
    embedding_model: str = "text-embedding-v3"
    embedding_dim: Optional[int] = Field(default=None, gt=0, description="Expected remote vector size.")
    stage0_checkpoint: Optional[Path] = Field(default=None, description="TinyLM used by the model provider.")


class AugmentSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    client: Literal["offline", "remote"] = "offline"
    endpoint: Optional[str] = None
    model_name: str = "qwen-plus"
    temperature: float = Field(default=0.7, ge=0.0)
    max_retries: int = Field(default=3, ge=1)
    timeout_s: float = Field(default=60.0, gt=0.0)
    backoff_initial_s: float = Field(default=1.0, ge=0.0)
    backoff_max_s: float = Field(default=30.0, ge=0.0)
    cap_sen: int = Field(default=4, ge=0, description="Sentence-level samples per anchor.")
    cap_tok: int = Field(default=4, ge=0, description="Token-level samples per anchor.")
    max_negatives: int = Field(default=8, ge=1, description="Upper bound on token-level negatives.")
    max_in_flight: int = Field(default=4, ge=1)


class EvalSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["embedding_similarity", "loglikelihood"] = "embedding_similarity"
    max_new: int = Field(default=64, ge=1)
    seed: Optional[int] = Field(default=None, description="Answer-shuffle seed; derived from the root seed when unset.")


class Settings(BaseSettings):
    """Effective configuration for every termforge stage."""

    model_config = SettingsConfigDict(
        env_prefix="TERMFORGE_",
        env_file=".env",
        env_file_encoding="utf-8",
        env_nested_delimiter="__",
        extra="ignore",
    )

    app_name: str = "termforge"
    version: str = Field(default=__version__)
    log_level: Literal["debug", "info", "warning", "error"] = "info"
    seed: int = Field(default=0, description="Root seed; every stage derives a named sub-seed from it.")
    workers: int = Field(default=1, ge=1, description="Worker threads for parallel stages (1 = inline).")
    run_dir: Path = Field(default_factory=lambda: Path("runs/default"))
    split_fraction: float = Field(default=0.7, gt=0.0, lt=1.0)

    graph: GraphSettings = Field(default_factory=GraphSettings)
    augment: AugmentSettings = Field(default_factory=AugmentSettings)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    eval: EvalSettings = Field(default_factory=EvalSettings)

    secrets: Secrets = Field(default_factory=Secrets, exclude=True)

    def public_dump(self) -> dict[str, Any]:
        return self.model_dump(mode="json", exclude={"secrets"})

    def config_hash(self) -> str:
        payload = json.dumps(self.public_dump(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def load_settings(config_path: Path | None = None, overrides: Mapping[str, Any] | None = None) -> Settings:
    """Merge a TOML config file and CLI overrides on top of environment and defaults.

    Args:
        config_path: Optional TOML file whose tables mirror the nested settings sections.
        overrides: Dotted keys (``"graph.theta_tok"``) mapped to values; ``None`` values are skipped.

    Returns:
        The validated settings.
    """
    load_dotenv(".env", override=False)
    data: dict[str, Any] = {}
    if config_path is not None:
        if not config_path.exists():
            raise ArtifactIOError("config_not_found", path=str(config_path))
        try:
            data = tomllib.loads(config_path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ValidationFailure("config_unparseable", str(exc), path=str(config_path)) from exc

    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        _set_dotted(data, dotted, value)

    try:
        settings = Settings(**data)
    except ValidationError as exc:
        raise ValidationFailure("config_invalid", str(exc)) from exc
    settings.secrets = Secrets()
    return settings


@lru_cache()
def get_settings() -> Settings:
    return load_settings()


def _set_dotted(target: dict[str, Any], dotted: str, value: Any) -> None:
    parts = dotted.split(".")
    cursor = target
    for part in parts[:-1]:
        nested = cursor.get(part)
        if not isinstance(nested, dict):
            nested = {}
            cursor[part] = nested
        cursor = nested
    cursor[parts[-1]] = value


__all__ = [
    "Settings",
    "Secrets",
    "GraphSettings",
    "AugmentSettings",
    "EvalSettings",
    "load_settings",
    "get_settings",
]
