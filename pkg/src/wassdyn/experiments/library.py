"""Packaged experiment configs (``builtin:NAME``) listed in ``configs/manifest.yaml``."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from wassdyn.errors import ExperimentConfigError

logger = logging.getLogger(__name__)

_CONFIGS_ROOT = Path(__file__).resolve().parent / "configs"

BUILTIN_PREFIX = "builtin:"


@dataclass(frozen=True)
class ConfigEntry:
    name: str
    file: str
    kind: str
    description: str = ""
    acceptance: bool = False

    def resolve_path(self) -> Path:
        return _CONFIGS_ROOT / self.file

    def as_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "file": self.file,
            "kind": self.kind,
            "description": self.description,
            "acceptance": self.acceptance,
        }


def configs_root() -> Path:
    return _CONFIGS_ROOT


def load_manifest() -> dict[str, Any]:
    path = _CONFIGS_ROOT / "manifest.yaml"
    if not path.is_file():
        logger.warning("config manifest missing at %s", path)
        return {"configs": []}
    return yaml.safe_load(path.read_text(encoding="utf-8")) or {}


def list_config_entries() -> list[ConfigEntry]:
    entries: list[ConfigEntry] = []
    for raw in load_manifest().get("configs") or []:
        if not isinstance(raw, dict) or not raw.get("name"):
            continue
        entries.append(
            ConfigEntry(
                name=str(raw["name"]),
                file=str(raw.get("file", f"{raw['name']}.yaml")),
                kind=str(raw.get("kind", "custom")),
                description=str(raw.get("description", "")),
                acceptance=bool(raw.get("acceptance", False)),
            )
        )
    return entries


def list_builtin_configs() -> list[dict[str, Any]]:
    return [entry.as_dict() for entry in list_config_entries()]


def builtin_config_path(name: str) -> Path:
    """Resolve a packaged config name (with or without ``builtin:``) to its file."""
    if name.startswith(BUILTIN_PREFIX):
        name = name[len(BUILTIN_PREFIX) :]
    for entry in list_config_entries():
        if entry.name != name:
            continue
        path = entry.resolve_path()
        if not path.is_file():
            raise ExperimentConfigError(f"builtin config {name!r} is listed but missing: {path}")
        return path
    known = ", ".join(e.name for e in list_config_entries())
    raise ExperimentConfigError(f"unknown builtin config {name!r}; known: {known}")


def acceptance_configs() -> list[str]:
    return [e.name for e in list_config_entries() if e.acceptance]
