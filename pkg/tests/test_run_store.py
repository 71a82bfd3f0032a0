from __future__ import annotations

import json
import os
import threading
import time
from hashlib import sha256

import pytest

from termforge.core.errors import (
    ArtifactIOError,
    CorpusFormatError,
    ParseError,
    RemoteClientError,
    SampleRejected,
    TermforgeError,
    ValidationFailure,
)
from termforge.core.manifest import (
    RunManifest,
    compute_sha256,
    derive_seed,
    load_manifest,
    manifest_name,
    upstream_hashes,
    write_manifest,
)
from termforge.core.storage import LOCK_NAME, RunStore, dumps_json, iter_jsonl, lock_holder, pid_alive, read_text
from termforge.core.workers import ImmediateBackend, ThreadBackend, get_worker_backend


def test_json_artifacts_are_canonical(tmp_path):
    store = RunStore(tmp_path / "run")
    path = store.write_json("nested/stats.json", {"b": 1, "a": {"d": 2, "c": "é"}})
    text = path.read_text(encoding="utf-8")
    assert text == dumps_json({"a": {"c": "é", "d": 2}, "b": 1})
    assert text.endswith("}\n")
    assert text.index('"a"') < text.index('"b"')
    assert store.read_json("nested/stats.json") == {"a": {"c": "é", "d": 2}, "b": 1}


def test_jsonl_rows_have_sorted_keys_and_newlines(tmp_path):
    store = RunStore(tmp_path)
    path = store.write_jsonl("rows.jsonl", [{"z": 1, "a": 2}, {"k": "v"}])
    assert path.read_bytes() == b'{"a":2,"z":1}\n{"k":"v"}\n'
    assert [obj for _, obj in iter_jsonl(path)] == [{"a": 2, "z": 1}, {"k": "v"}]


def test_iter_jsonl_reports_the_bad_line(tmp_path):
    path = tmp_path / "broken.jsonl"
    path.write_text('{"ok": 1}\n\n{"ok": \n', encoding="utf-8")
    with pytest.raises(CorpusFormatError) as excinfo:
        list(iter_jsonl(path))
    assert excinfo.value.code == "malformed_json_line"
    assert excinfo.value.context["line"] == 3


def test_missing_artifact_is_an_io_error(tmp_path):
    with pytest.raises(ArtifactIOError) as excinfo:
        read_text(tmp_path / "nope.json")
    assert excinfo.value.code == "artifact_not_found"
    store = RunStore(tmp_path)
    with pytest.raises(ArtifactIOError):
        store.stat("nope.json")
    assert store.list("checkpoints") == []


def test_lock_rejects_concurrent_use(tmp_path):
    first = RunStore(tmp_path)
    second = RunStore(tmp_path)
    with first:
        assert (tmp_path / LOCK_NAME).exists()
        with pytest.raises(ArtifactIOError) as excinfo:
            second.acquire()
        assert excinfo.value.code == "run_dir_locked"
    assert not (tmp_path / LOCK_NAME).exists()
    with second:
        pass


def test_list_is_sorted(tmp_path):
    store = RunStore(tmp_path)
    store.write_text("checkpoints/stage_2_sen.ckpt.json", "{}")
    store.write_text("checkpoints/stage_1_sft.ckpt.json", "{}")
    names = [path.name for path in store.list("checkpoints")]
    assert names == ["stage_1_sft.ckpt.json", "stage_2_sen.ckpt.json"]


def test_derive_seed_matches_its_definition():
    digest = sha256(b"0:split").digest()
    assert derive_seed(0, "split") == int.from_bytes(digest[:8], "big") & 0xFFFFFFFF
    assert derive_seed(0, "split") == derive_seed(0, "split")
    assert derive_seed(0, "split") != derive_seed(0, "graph")
    assert derive_seed(0, "split") != derive_seed(1, "split")
    assert 0 <= derive_seed(123, "train.sen") < 2**32


def test_manifest_round_trip_and_upstream_chain(tmp_path):
    store = RunStore(tmp_path)
    corpus = tmp_path / "input.jsonl"
    corpus.write_text('{"id":"x"}\n', encoding="utf-8")
    ingest = RunManifest(stage="ingest", config_hash="abc", seed=0, inputs={"corpus": compute_sha256(corpus)})
    write_manifest(store, ingest)
    assert store.exists(manifest_name("ingest"))
    assert load_manifest(store, "ingest") == ingest
    assert load_manifest(store, "graph") is None

    chained = upstream_hashes(store, ["ingest", "graph"])
    assert chained == {"ingest": compute_sha256(store.path(manifest_name("ingest")))}
    assert ingest.inputs["corpus"] == sha256(corpus.read_bytes()).hexdigest()
    assert json.loads(store.read_text(manifest_name("ingest")))["stage"] == "ingest"


def test_error_hierarchy_exit_codes():
    assert issubclass(CorpusFormatError, ValidationFailure)
    assert issubclass(ParseError, ValidationFailure)
    assert issubclass(SampleRejected, ValidationFailure)
    assert ValidationFailure("x").exit_code == 1
    assert ArtifactIOError("x").exit_code == 2
    assert RemoteClientError("x").exit_code == 3
    error = TermforgeError("span_out_of_range", "bad span", record_id="r1", line=4)
    assert error.to_dict() == {"code": "span_out_of_range", "detail": "bad span", "record_id": "r1", "line": 4}
    assert "record_id='r1'" in str(error)


def test_map_ordered_preserves_input_order():
    def slow_square(value: int) -> int:
        time.sleep(0.001 * (5 - value % 5))
        return value * value

    items = list(range(20))
    expected = [value * value for value in items]
    assert ImmediateBackend().map_ordered(slow_square, items) == expected
    assert ThreadBackend(4).map_ordered(slow_square, items) == expected


def test_thread_backend_uses_several_threads():
    seen: set[str] = set()

    def record_thread(_: int) -> None:
        seen.add(threading.current_thread().name)
        time.sleep(0.01)

    ThreadBackend(3).map_ordered(record_thread, range(6))
    assert all(name.startswith("termforge") for name in seen)


def test_worker_backend_factory():
    assert isinstance(get_worker_backend(1), ImmediateBackend)
    assert isinstance(get_worker_backend(0), ImmediateBackend)
    assert isinstance(get_worker_backend(3), ThreadBackend)
    with pytest.raises(ValueError):
        ThreadBackend(0)


def test_lock_left_by_a_dead_process_is_reclaimed(tmp_path, monkeypatch):
    (tmp_path / LOCK_NAME).write_text("424242", encoding="ascii")
    monkeypatch.setattr("termforge.core.storage.pid_alive", lambda pid: pid != 424242)
    with RunStore(tmp_path):
        assert lock_holder(tmp_path / LOCK_NAME) == os.getpid()
    assert not (tmp_path / LOCK_NAME).exists()


@pytest.mark.parametrize("content", ["live", "not-a-pid", ""])
def test_lock_held_by_a_live_or_unknown_holder_is_kept(tmp_path, content):
    lock = tmp_path / LOCK_NAME
    lock.write_text(str(os.getpid()) if content == "live" else content, encoding="ascii")
    with pytest.raises(ArtifactIOError) as excinfo:
        RunStore(tmp_path).acquire()
    assert excinfo.value.code == "run_dir_locked"
    assert lock.exists()


def test_pid_alive():
    assert pid_alive(os.getpid())
