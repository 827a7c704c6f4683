"""Experiment reports: verdicts, metrics, plot series, deterministic JSON and CSV output."""

from __future__ import annotations

import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import orjson
from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

# Fields that legitimately differ between two runs of the same config.
VOLATILE_FIELDS = ("wall_clock_s", "version")


class Criterion(str, Enum):
    OT_CORRECTNESS = "ot-correctness"
    KR_DUALITY = "kr-duality"
    METRIC_AXIOMS = "metric-axioms"
    SEGMENT_IDENTITY = "segment-identity"
    CONVEX_INTERPOLATION = "convex-interpolation"
    NOISE_LEVEL_INEQUALITY = "noise-level-inequality"
    COLLAPSE_REPRODUCTION = "collapse-reproduction"
    DISCONTINUITY_REPRODUCTION = "discontinuity-reproduction"
    GAUSSIAN_BOUND = "gaussian-bound"
    PITCHFORK_INTEGRATOR = "pitchfork-integrator"
    NOISE_TO_ZERO = "noise-to-zero"
    TAIL_BOUND = "tail-bound"
    DETERMINISM = "determinism"
    STATIONARY_RESIDUAL = "stationary-residual"
    INVARIANCE = "invariance"
    SUPPORT_BOUND = "support-bound"
    LOCAL_COMPACTNESS = "local-compactness"


class Verdict(BaseModel):
    criterion: Criterion
    passed: bool
    detail: str = ""
    observed: float | None = None
    threshold: float | None = None


class ExperimentReport(BaseModel):
    """Structured record of one experiment run.

    ``series`` holds plot data: series name -> column name -> values (equal lengths).
    """

    name: str
    kind: str
    seed: int
    config: dict[str, Any]
    metrics: dict[str, Any] = Field(default_factory=dict)
    series: dict[str, dict[str, list[float | None]]] = Field(default_factory=dict)
    verdicts: list[Verdict] = Field(default_factory=list)
    wall_clock_s: float = 0.0
    version: str = ""

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def check(
        self,
        criterion: Criterion,
        passed: bool,
        detail: str = "",
        observed: float | None = None,
        threshold: float | None = None,
    ) -> Verdict:
        v = Verdict(
            criterion=criterion,
            passed=bool(passed),
            detail=detail,
            observed=_finite_or_none(observed),
            threshold=_finite_or_none(threshold),
        )
        self.verdicts.append(v)
        level = logging.INFO if v.passed else logging.WARNING
        logger.log(level, "[%s] %s %s: %s", self.name, criterion.value, "pass" if passed else "FAIL", detail)
        return v

    def record(self, **metrics: Any) -> None:
        self.metrics.update({k: sanitize(v) for k, v in metrics.items()})

    def add_series(self, name: str, **columns: Any) -> None:
        cols = {k: [float(x) for x in np.asarray(v, dtype=np.float64).ravel()] for k, v in columns.items()}
        lengths = {len(v) for v in cols.values()}
        if len(lengths) > 1:
            raise ValueError(f"series {name!r} has columns of unequal length")
        self.series[name] = cols

    def to_dict(self) -> dict[str, Any]:
        return sanitize(self.model_dump(mode="json"))

    def to_json(self) -> bytes:
        return orjson.dumps(self.to_dict(), option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2)

    def fingerprint(self) -> bytes:
        """Canonical bytes of every field except wall clock and version."""
        body = {k: v for k, v in self.to_dict().items() if k not in VOLATILE_FIELDS}
        return orjson.dumps(body, option=orjson.OPT_SORT_KEYS)


def _finite_or_none(x: float | None) -> float | None:
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def sanitize(value: Any) -> Any:
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to ``None``."""
    if isinstance(value, dict):
        return {str(k): sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return sanitize(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return _finite_or_none(float(value))
    if isinstance(value, Enum):
        return value.value
    return value


def write_report(report: ExperimentReport, out_dir: str | Path) -> list[Path]:
    """Write ``<name>.json`` plus one ``<name>__<series>.csv`` per plot series."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    path = out / f"{report.name}.json"
    path.write_bytes(report.to_json())
    written.append(path)
    for series, cols in report.series.items():
        csv = out / f"{report.name}__{series}.csv"
        names = list(cols)
        columns = [[math.nan if v is None else v for v in cols[c]] for c in names]
        data = np.column_stack(columns) if names and columns[0] else np.empty((0, len(names)))
        np.savetxt(csv, data, delimiter=",", header=",".join(names), comments="", fmt="%.17g")
        written.append(csv)
    logger.info("wrote %d report file(s) to %s", len(written), out)
    return written


def load_report(path: str | Path) -> ExperimentReport:
    return ExperimentReport.model_validate(orjson.loads(Path(path).read_bytes()))
