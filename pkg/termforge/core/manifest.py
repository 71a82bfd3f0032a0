from __future__ import annotations

from datetime import datetime, timezone
from hashlib import sha256
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from termforge import __version__

from .errors import ArtifactIOError
from .storage import RunStore


def compute_sha256(path: Path, *, block: int = 1 << 20) -> str:
    """Content hash recorded for stage inputs, checkpoints and upstream manifests."""
    if not path.is_file():
        raise ArtifactIOError("hash_target_missing", path=str(path))
    hasher = sha256()
    with path.open("rb") as stream:
        for piece in iter(lambda: stream.read(block), b""):
            hasher.update(piece)
    return hasher.hexdigest()


def derive_seed(seed: int, name: str) -> int:
    """Derive the named 32-bit sub-seed used by one pipeline stage."""
    digest = sha256(f"{seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & 0xFFFFFFFF


class RunManifest(BaseModel):
    """Provenance record written before a stage executes."""

    model_config = ConfigDict(extra="forbid")

    tool_version: str = Field(default=__version__)
    stage: str
    config_hash: str
    seed: int
    sub_seed: Optional[int] = None
    inputs: dict[str, str] = Field(default_factory=dict, description="Input path -> sha256.")
    upstream: dict[str, str] = Field(default_factory=dict, description="Upstream stage -> manifest sha256.")
    outputs: list[str] = Field(default_factory=list)
    started_at: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))


def manifest_name(stage: str) -> str:
    return f"manifests/{stage}.json"


def write_manifest(store: RunStore, manifest: RunManifest) -> Path:
    return store.write_json(manifest_name(manifest.stage), manifest.model_dump(mode="json"))


def load_manifest(store: RunStore, stage: str) -> Optional[RunManifest]:
    if not store.exists(manifest_name(stage)):
        return None
    return RunManifest.model_validate(store.read_json(manifest_name(stage)))


def upstream_hashes(store: RunStore, stages: list[str]) -> dict[str, str]:
    """Hash the manifests of the given upstream stages that exist in the run directory."""
    hashes: dict[str, str] = {}
    for stage in stages:
        target = store.path(manifest_name(stage))
        if target.exists():
            hashes[stage] = compute_sha256(target)
    return hashes


__all__ = [
    "RunManifest",
    "compute_sha256",
    "derive_seed",
    "load_manifest",
    "manifest_name",
    "upstream_hashes",
    "write_manifest",
]
