"""Command handlers behind the CLI: validate, run, and wrap the outcome in a ``CommandResult``."""

from __future__ import annotations

import logging
from pathlib import Path

import orjson

from wassdyn.config import get_settings
from wassdyn.dynamics import push_forward
from wassdyn.errors import (
    DimensionMismatchError,
    ExperimentConfigError,
    ExpressionError,
    MeasureConstructionError,
    MeasureValidationError,
    SolverError,
    SpecError,
    SupportTooLargeError,
    WassdynError,
)
from wassdyn.experiments.config import load_config
from wassdyn.experiments.library import list_builtin_configs
from wassdyn.experiments.report import write_report
from wassdyn.experiments.runners import run_experiment
from wassdyn.invariant import find_stationary
from wassdyn.measure import load_measure, save_measure
from wassdyn.models import CommandResult, DistanceRequest, ExperimentRequest, PushRequest, StationaryRequest
from wassdyn.noise import MWOperator
from wassdyn.registry import list_builtins, parse_kernel, parse_map
from wassdyn.transport import TransportPlan, plan_1d, wasserstein, wasserstein_exact

logger = logging.getLogger(__name__)

_RECOVERY_TIPS: list[tuple[type[BaseException], str]] = [
    (SupportTooLargeError, "Subsample or compress the measures (measure.empirical_measure / measure.compress) first."),
    (DimensionMismatchError, "Check that every measure, point and map lives in the same dimension."),
    (ExpressionError, "Fix the expression at the reported offset; run --list-builtins for the map grammar."),
    (SpecError, "Run --list-builtins for the map and kernel spec grammar."),
    (MeasureConstructionError, "The measure needs at least one atom with positive weight."),
    (MeasureValidationError, "Measure files hold 'weight x1 [x2 ...]' lines with finite values and weights >= 0."),
    (ExperimentConfigError, "Compare the config with the packaged examples (--list-builtins lists them)."),
    (SolverError, "This is an internal solver failure; please report the input measures."),
    (OSError, "Check that the path exists and is readable/writable."),
]


def _recovery_tip(exc: BaseException) -> str | None:
    for kind, tip in _RECOVERY_TIPS:
        if isinstance(exc, kind):
            return tip
    return None


def _error(what: str, exc: BaseException) -> CommandResult:
    logger.error("%s failed: %s", what, exc)
    return CommandResult(status="error", message=f"{what} failed: {exc}", recovery_tip=_recovery_tip(exc))


def _write_plan(plan: TransportPlan, path: str) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{i},{j},{g!r}" for i, j, g in plan.to_rows(tol=0.0)]
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out


def distance(request: DistanceRequest) -> CommandResult:
    try:
        mu = load_measure(request.mu)
        nu = load_measure(request.nu)
        value = wasserstein(mu, nu, request.p, request.method)
        data: dict[str, object] = {"distance": value, "p": request.p, "method": request.method}
        if request.plan:
            exact_1d = mu.dim == 1 and request.method in ("auto", "1d")
            plan = plan_1d(mu, nu, request.p) if exact_1d else wasserstein_exact(mu, nu, request.p)[1]
            data["plan"] = str(_write_plan(plan, request.plan))
        return CommandResult(status="success", message=repr(value), data=data)
    except (WassdynError, OSError) as exc:
        return _error("dist", exc)


def push(request: PushRequest) -> CommandResult:
    try:
        mu = load_measure(request.mu)
        f = parse_map(request.map)
        image = push_forward(mu, f)
        path = save_measure(image, request.output, header=f"push-forward of {request.mu} under {f.describe()}")
        return CommandResult(
            status="success",
            message=f"wrote {image.size} atoms to {path}",
            data={"output": str(path), "atoms": image.size},
        )
    except (WassdynError, OSError) as exc:
        return _error("push", exc)


def stationary(request: StationaryRequest) -> CommandResult:
    try:
        kernel = parse_kernel(request.kernel)
        cap = request.compression_cap or get_settings().COMPRESSION_CAP
        op = MWOperator(kernel=kernel, compression_cap=cap, p=request.p)
        result = find_stationary(op, load_measure(request.mu0), request.tol, request.max_iter)
        data = {"kernel": kernel.describe(), **result.summary(), "measure": result.measure.to_rows()}
        if request.output:
            out = Path(request.output)
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_bytes(orjson.dumps(data, option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY))
            data = {**result.summary(), "output": str(out)}
        if not result.converged:
            return CommandResult(
                status="failed",
                message=f"no convergence within {result.iterations} applications; best residual {result.residual:.3e}",
                data=data,
                recovery_tip="Raise --max-iter, loosen --tol or raise the compression cap.",
            )
        return CommandResult(
            status="success",
            message=f"converged in {result.iterations} applications, residual {result.residual:.3e}",
            data=data,
        )
    except (WassdynError, OSError) as exc:
        return _error("stationary", exc)


def experiment(request: ExperimentRequest) -> CommandResult:
    try:
        config = load_config(request.config)
        report = run_experiment(config)
        out_dir = request.output_dir or config.output_dir or "reports"
        written = write_report(report, Path(out_dir))
        failed = [f"{v.criterion.value}: {v.detail}" for v in report.verdicts if not v.passed]
        data = {
            "report": str(written[0]),
            "files": [str(p) for p in written],
            "verdicts": len(report.verdicts),
            "failed": failed,
            "wall_clock_s": report.wall_clock_s,
        }
        if failed:
            return CommandResult(
                status="failed",
                message=f"{config.name}: {len(failed)} of {len(report.verdicts)} verdicts failed",
                data=data,
            )
        return CommandResult(
            status="success", message=f"{config.name}: all {len(report.verdicts)} verdicts passed", data=data
        )
    except (WassdynError, OSError) as exc:
        return _error("experiment", exc)


def builtins() -> CommandResult:
    entries = list_builtins()
    configs = list_builtin_configs()
    return CommandResult(
        status="success",
        message=f"{len(entries)} maps/kernels, {len(configs)} packaged configs",
        data={"builtins": entries, "configs": configs},
    )
