"""Experiment configuration documents (JSON or YAML) and their loader."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Literal

import numpy as np
import yaml
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from wassdyn.dynamics import PITCHFORK_ATTRACTOR, PITCHFORK_EQUILIBRIA
from wassdyn.errors import ExperimentConfigError, WassdynError
from wassdyn.experiments.library import BUILTIN_PREFIX, builtin_config_path
from wassdyn.measure import DiscreteMeasure, as_points, load_measure, measure_from_json
from wassdyn.noise import KernelSpec
from wassdyn.registry import parse_kernel

logger = logging.getLogger(__name__)

ExperimentKind = Literal[
    "collapse",
    "pitchfork_gaussian",
    "noise_to_zero",
    "discontinuity",
    "local_compactness",
    "custom",
    "validation",
]

NAMED_ANCHORS: dict[str, NDArray[np.float64]] = {
    "pitchfork-attractor": PITCHFORK_ATTRACTOR,
    "pitchfork-equilibria": PITCHFORK_EQUILIBRIA,
}

# A measure source: a file path (str) or an inline document understood by measure_from_json.
MeasureSource = str | list[list[float]] | dict[str, Any]


class Budgets(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    max_iter: int = Field(1000, ge=1, description="Operator applications allowed per search")
    tol: float = Field(1e-3, gt=0, description="Target w_1 residual / distance")
    compression_cap: int | None = Field(None, ge=1, description="Support cap; WASSDYN_COMPRESSION_CAP when unset")


class InvarianceSettings(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    delta: float = Field(..., gt=0)
    delta_out: float = Field(..., gt=0)
    probes: int = Field(32, ge=1)

    @model_validator(mode="after")
    def _ordered(self) -> InvarianceSettings:
        if self.delta_out < self.delta:
            raise ValueError("invariance.delta_out must be >= invariance.delta")
        return self


class Expectations(BaseModel):
    """Optional thresholds for the custom pipeline; each one present becomes a verdict."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    max_residual: float | None = Field(None, gt=0)
    max_projection: float | None = Field(None, ge=0)
    support_within: tuple[float, float] | None = None
    max_steps: int | None = Field(None, ge=1)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = Field(..., min_length=1, pattern=r"^[A-Za-z0-9_.-]+$")
    kind: ExperimentKind
    description: str = ""
    seed: int = Field(..., ge=0, description="Seed for every randomized step")
    p: float = Field(1.0, ge=1.0)
    kernel: str | list[str] | None = None
    mu0: MeasureSource | None = None
    starts: list[MeasureSource] | None = None
    budgets: Budgets = Field(default_factory=Budgets)
    anchors: list[float] | list[list[float]] | str | None = None
    n_values: list[int] | None = None
    epsilon: float | None = Field(None, gt=0)
    sample_points: list[float] | list[list[float]] | None = None
    tail_radii: list[float] | None = None
    growth_radii: list[float] = Field(default_factory=lambda: [10.0, 100.0, 1000.0])
    invariance: InvarianceSettings | None = None
    expect: Expectations | None = None
    abs_slack: float = Field(1e-3, ge=0)
    instances: dict[str, int] = Field(default_factory=dict)
    check_determinism: bool = False
    output_dir: str | None = None

    @field_validator("n_values")
    @classmethod
    def _positive_ns(cls, v: list[int] | None) -> list[int] | None:
        if v is not None and (not v or any(n < 1 for n in v)):
            raise ValueError("n_values must be a non-empty list of positive integers")
        return v

    @field_validator("anchors")
    @classmethod
    def _known_anchors(cls, v: Any) -> Any:
        if isinstance(v, str) and v not in NAMED_ANCHORS:
            raise ValueError(f"unknown anchor set {v!r}; known: {', '.join(NAMED_ANCHORS)}")
        return v

    @field_validator("instances")
    @classmethod
    def _positive_counts(cls, v: dict[str, int]) -> dict[str, int]:
        if any(n < 1 for n in v.values()):
            raise ValueError("instances counts must be positive")
        return v

    @model_validator(mode="after")
    def _kind_requirements(self) -> ExperimentConfig:
        kind = self.kind
        single_kernel = kind in ("collapse", "pitchfork_gaussian", "custom")
        if single_kernel and not isinstance(self.kernel, str):
            raise ValueError(f"kind {kind!r} needs a single kernel spec string")
        if kind == "noise_to_zero" and (not isinstance(self.kernel, list) or len(self.kernel) < 2):
            raise ValueError("noise_to_zero needs a kernel sweep of at least two specs")
        if kind in ("pitchfork_gaussian", "noise_to_zero", "custom") and self.mu0 is None:
            raise ValueError(f"kind {kind!r} needs mu0")
        if kind == "collapse" and self.mu0 is None and not self.starts:
            raise ValueError("collapse needs mu0 or starts")
        if kind == "noise_to_zero" and self.anchors is None:
            raise ValueError("noise_to_zero needs an anchor set")
        if kind == "local_compactness" and self.p != 1.0 and self.epsilon is None:
            raise ValueError("local_compactness with p != 1 needs epsilon")
        for source in [self.mu0, *(self.starts or [])]:
            if isinstance(source, str) and not Path(source).is_file():
                raise ValueError(f"measure file not found: {source}")
        for spec in self.kernel_specs:
            try:
                parse_kernel(spec)
            except WassdynError as exc:
                raise ValueError(f"kernel {spec!r}: {exc}") from exc
        return self

    # ------------------------------------------------------------------ resolved views

    @property
    def kernel_specs(self) -> list[str]:
        if self.kernel is None:
            return []
        return [self.kernel] if isinstance(self.kernel, str) else list(self.kernel)

    def kernels(self) -> list[KernelSpec]:
        return [parse_kernel(spec) for spec in self.kernel_specs]

    def initial_measure(self) -> DiscreteMeasure:
        if self.mu0 is None:
            raise ExperimentConfigError(f"{self.name}: no mu0 configured")
        return resolve_measure(self.mu0)

    def start_measures(self) -> list[DiscreteMeasure]:
        sources = list(self.starts or []) or [self.mu0]
        return [resolve_measure(s) for s in sources if s is not None]

    def anchor_points(self, dim: int = 1) -> NDArray[np.float64] | None:
        if self.anchors is None:
            return None
        if isinstance(self.anchors, str):
            return NAMED_ANCHORS[self.anchors]
        return as_points(self.anchors, dim)

    def echo(self) -> dict[str, Any]:
        return self.model_dump(mode="json", exclude_none=True)


def resolve_measure(source: MeasureSource) -> DiscreteMeasure:
    if isinstance(source, str):
        return load_measure(source)
    return measure_from_json(source)


def _absolutize(raw: dict[str, Any], base: Path) -> dict[str, Any]:
    """Rewrite relative measure file paths against the config's directory."""
    out = dict(raw)

    def fix(src: Any) -> Any:
        if isinstance(src, str) and not Path(src).is_absolute():
            return str((base / src).resolve())
        return src

    if "mu0" in out:
        out["mu0"] = fix(out["mu0"])
    if isinstance(out.get("starts"), list):
        out["starts"] = [fix(s) for s in out["starts"]]
    return out


def parse_config(raw: Any, *, base_dir: str | Path = ".", source: str = "<config>") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ExperimentConfigError(f"{source}: top level must be a mapping")
    try:
        return ExperimentConfig.model_validate(_absolutize(raw, Path(base_dir)))
    except ValidationError as exc:
        problems = "; ".join(f"{'.'.join(str(x) for x in e['loc']) or '<root>'}: {e['msg']}" for e in exc.errors())
        raise ExperimentConfigError(f"{source}: {problems}") from exc


def load_config(path_or_name: str | Path) -> ExperimentConfig:
    """Load a config file (JSON is valid YAML) or a packaged ``builtin:NAME`` config."""
    text = str(path_or_name)
    path = builtin_config_path(text) if text.startswith(BUILTIN_PREFIX) else Path(text)
    if not path.is_file():
        raise ExperimentConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ExperimentConfigError(f"{path}: not valid JSON/YAML: {exc}") from exc
    config = parse_config(raw, base_dir=path.parent, source=str(path))
    logger.debug("loaded config %s (%s) from %s", config.name, config.kind, path)
    return config
