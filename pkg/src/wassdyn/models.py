"""Pydantic models for command requests and results.

Each CLI subcommand validates its arguments into a request model and returns a
``CommandResult``, so the same handlers can be driven from code or tests.
"""

from typing import Any, Literal

import orjson
from pydantic import BaseModel, Field


class DistanceRequest(BaseModel):
    """Request model for ``dist``."""

    mu: str = Field(..., description="Path of the first measure file.")
    nu: str = Field(..., description="Path of the second measure file.")
    p: float = Field(1.0, ge=1.0, description="Wasserstein order.")
    method: Literal["auto", "exact", "1d", "dual"] = Field("auto", description="Solver selection.")
    plan: str | None = Field(None, description="Where to write an optimal plan as CSV rows i,j,gamma_ij.")


class PushRequest(BaseModel):
    """Request model for ``push``."""

    mu: str = Field(..., description="Path of the input measure file.")
    map: str = Field(..., description="Map spec string, e.g. 'pitchfork', 'sqneg', 'affine:0.5,0', 'expr:x^2'.")
    output: str = Field(..., description="Path of the output measure file.")


class StationaryRequest(BaseModel):
    """Request model for ``stationary``."""

    kernel: str = Field(..., description="Kernel spec string, e.g. 'gauss(pitchfork,sigma=0.1)'.")
    mu0: str = Field(..., description="Path of the initial measure file.")
    p: float = Field(1.0, ge=1.0, description="Order used for compression bounds and the reported residual.")
    tol: float = Field(1e-3, gt=0, description="Target w_1 residual.")
    max_iter: int = Field(1000, ge=1, description="Operator applications allowed.")
    compression_cap: int | None = Field(None, ge=1, description="Support cap; WASSDYN_COMPRESSION_CAP when unset.")
    output: str | None = Field(None, description="Where to write the result JSON.")


class ExperimentRequest(BaseModel):
    """Request model for ``experiment``."""

    config: str = Field(..., description="Config file path or builtin:NAME.")
    output_dir: str | None = Field(None, description="Report directory; the config's output_dir when unset.")


class CommandResult(BaseModel):
    """Standardized result of every command handler."""

    status: Literal["success", "failed", "error"] = Field(
        ..., description="success; failed (ran, but a verdict failed); error (could not run)."
    )
    message: str = Field(..., description="A human-readable summary of the result.")
    data: Any | None = Field(None, description="Command-specific payload.")
    recovery_tip: str | None = Field(None, description="What to change when the command errored.")

    @property
    def exit_code(self) -> int:
        return {"success": 0, "failed": 1, "error": 2}[self.status]

    def to_json(self) -> bytes:
        return orjson.dumps(
            self.model_dump(mode="json"),
            option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY,
        )
