"""Append-only JSONL trace of iteration events (orbits, stationary searches, experiments)."""

from __future__ import annotations

import logging
import time
from pathlib import Path
from typing import Any

import orjson

from wassdyn.config import get_settings

logger = logging.getLogger(__name__)


def _trace_dir() -> Path:
    configured = get_settings().TRACE_DIR
    if configured is not None:
        return Path(configured)
    return Path.home() / ".wassdyn" / "traces"


def trace_enabled() -> bool:
    return get_settings().TRACE


def trace_path() -> Path:
    day = time.strftime("%Y%m%d")
    d = _trace_dir()
    d.mkdir(parents=True, exist_ok=True)
    return d / f"session-{day}.jsonl"


def log_trace(event: str, **fields: Any) -> None:
    """Append one JSON line when tracing is enabled."""
    if not trace_enabled():
        return
    row = {"ts": time.time(), "event": event, **fields}
    try:
        with trace_path().open("ab") as fh:
            fh.write(orjson.dumps(row, default=str, option=orjson.OPT_SERIALIZE_NUMPY) + b"\n")
    except OSError as exc:
        logger.debug("trace write failed: %s", exc)
