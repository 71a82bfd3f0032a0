from __future__ import annotations

import json
import os
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import ArtifactIOError, CorpusFormatError
from .logging import get_logger

LOCK_NAME = ".termforge.lock"
_LOCK_FLAGS = os.O_CREAT | os.O_EXCL | os.O_WRONLY


@dataclass(slots=True)
class ArtifactStat:
    size_bytes: int
    path: Path


class ArtifactStore(ABC):
    @abstractmethod
    def exists(self, name: str) -> bool: ...

    @abstractmethod
    def stat(self, name: str) -> ArtifactStat: ...

    @abstractmethod
    def read_text(self, name: str) -> str: ...

    @abstractmethod
    def write_text(self, name: str, payload: str) -> Path: ...

    @abstractmethod
    def list(self, prefix: str) -> Iterable[Path]: ...


def dumps_json(payload: Any) -> str:
    """Canonical pretty JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def dumps_jsonl(rows: Iterable[Any]) -> str:
    lines = [json.dumps(row, sort_keys=True, ensure_ascii=False, separators=(",", ":")) for row in rows]
    return "".join(line + "\n" for line in lines)


def write_text(path: Path, payload: str) -> Path:
    if payload and not payload.endswith("\n"):
        payload += "\n"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="\n") as handle:
            handle.write(payload)
    except OSError as exc:
        raise ArtifactIOError("artifact_write_failed", str(exc), path=str(path)) from exc
    return path


def read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ArtifactIOError("artifact_not_found", path=str(path)) from exc
    except OSError as exc:
        raise ArtifactIOError("artifact_read_failed", str(exc), path=str(path)) from exc


def iter_jsonl(path: Path) -> Iterator[tuple[int, Any]]:
    """Yield ``(line_number, decoded_object)`` for every non-blank line; line numbers start at 1."""
    for number, line in enumerate(read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            yield number, json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError("malformed_json_line", exc.msg, path=str(path), line=number) from exc


def lock_holder(lock_path: Path) -> int | None:
    """Pid written into a lock file, or None when it is unreadable or not a pid."""
    try:
        text = lock_path.read_text(encoding="ascii").strip()
    except (OSError, UnicodeDecodeError):
        return None
    return int(text) if text.isdigit() else None


def pid_alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


class RunStore(ArtifactStore):
    """Filesystem-backed run directory holding every artifact of one pipeline run."""

    def __init__(self, root: Path):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock_fd: int | None = None
        self.logger = get_logger(component="run_store", run_dir=str(root))

    def path(self, name: str) -> Path:
        return self.root / name

    def exists(self, name: str) -> bool:
        return self.path(name).exists()

    def stat(self, name: str) -> ArtifactStat:
        target = self.path(name)
        if not target.exists():
            raise ArtifactIOError("artifact_not_found", path=str(target))
        return ArtifactStat(size_bytes=target.stat().st_size, path=target)

    def read_text(self, name: str) -> str:
        return read_text(self.path(name))

    def read_json(self, name: str) -> Any:
        try:
            return json.loads(self.read_text(name))
        except json.JSONDecodeError as exc:
            raise ArtifactIOError("artifact_unparseable", exc.msg, path=str(self.path(name))) from exc

    def write_text(self, name: str, payload: str) -> Path:
        target = write_text(self.path(name), payload)
        self.logger.debug("artifact_written", artifact=name, size_bytes=target.stat().st_size)
        return target

    def write_json(self, name: str, payload: Any) -> Path:
        return self.write_text(name, dumps_json(payload))

    def write_jsonl(self, name: str, rows: Iterable[Any]) -> Path:
        return self.write_text(name, dumps_jsonl(rows))

    def list(self, prefix: str) -> Iterable[Path]:
        base = self.path(prefix)
        if not base.exists():
            return []
        if base.is_file():
            return [base]
        return sorted(p for p in base.rglob("*") if p.is_file())

    def acquire(self) -> None:
        """Create the lock file holding our pid; a lock whose holder process is gone is taken over."""
        lock_path = self.path(LOCK_NAME)
        try:
            fd = os.open(lock_path, _LOCK_FLAGS)
        except FileExistsError as exc:
            holder = lock_holder(lock_path)
            if holder is None or pid_alive(holder):
                raise ArtifactIOError("run_dir_locked", path=str(lock_path), pid=holder) from exc
            self.logger.warning("stale_lock_reclaimed", pid=holder)
            lock_path.unlink(missing_ok=True)
            try:
                fd = os.open(lock_path, _LOCK_FLAGS)
            except FileExistsError as again:
                raise ArtifactIOError("run_dir_locked", path=str(lock_path)) from again
        os.write(fd, str(os.getpid()).encode("ascii"))
        self._lock_fd = fd

    def release(self) -> None:
        if self._lock_fd is None:
            return
        os.close(self._lock_fd)
        self._lock_fd = None
        try:
            self.path(LOCK_NAME).unlink()
        except FileNotFoundError:
            pass

    def __enter__(self) -> "RunStore":
        self.acquire()
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.release()


__all__ = [
    "ArtifactStore",
    "ArtifactStat",
    "RunStore",
    "LOCK_NAME",
    "lock_holder",
    "pid_alive",
    "dumps_json",
    "dumps_jsonl",
    "write_text",
    "read_text",
    "iter_jsonl",
]
