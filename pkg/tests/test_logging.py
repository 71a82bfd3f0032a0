from __future__ import annotations

import logging

import pytest
import structlog

from termforge.core.logging import redact_secrets, resolve_level, run_context


def test_resolve_level_accepts_names_and_numbers():
    assert resolve_level("DEBUG") == logging.DEBUG
    assert resolve_level(" warning ") == logging.WARNING
    assert resolve_level(logging.ERROR) == logging.ERROR
    with pytest.raises(ValueError):
        resolve_level("verbose")


def test_secret_fields_are_masked():
    event = {"event": "request", "api_key": "sk-abc", "endpoint": "http://x"}
    assert redact_secrets(None, "info", event) == {"event": "request", "api_key": "***", "endpoint": "http://x"}


def test_run_context_binds_only_inside_the_block():
    structlog.contextvars.clear_contextvars()
    with run_context(command="graph", seed=3):
        assert structlog.contextvars.get_contextvars() == {"command": "graph", "seed": 3}
    assert structlog.contextvars.get_contextvars() == {}
