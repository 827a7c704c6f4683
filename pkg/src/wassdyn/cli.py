"""Command-line entry point: ``wassdyn dist|push|stationary|experiment``."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence

from pydantic import ValidationError

from wassdyn import __version__, commands
from wassdyn.config import get_settings
from wassdyn.models import CommandResult, DistanceRequest, ExperimentRequest, PushRequest, StationaryRequest

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def create_argument_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wassdyn",
        description="Dynamics of Markov operators on Wasserstein spaces of discrete measures.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Environment Variables:
  WASSDYN_THREADS          Upper bound on worker threads (default: physical cores)
  WASSDYN_LOG_LEVEL        Log level (default: INFO)
  WASSDYN_LOG_FILE         Also log to this file
  WASSDYN_COMPRESSION_CAP  Default support cap for kernel operators (default: 200)
  WASSDYN_TRACE            Append one JSON line per experiment to WASSDYN_TRACE_DIR

Exit codes:
  0  success, every verdict passed
  1  ran, but a verdict failed or the stationary search did not converge
  2  invalid input or the command could not run

Examples:
  wassdyn dist --mu a.txt --nu b.txt --p 2
  wassdyn push --mu a.txt --map pitchfork -o b.txt
  wassdyn stationary --kernel "gauss(pitchfork, sigma=0.1)" --mu0 a.txt -o result.json
  wassdyn experiment --config builtin:collapse_pitchfork_p1 -o reports
""",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--list-builtins", action="store_true", help="List builtin maps, kernels and configs")
    parser.add_argument("--log-level", default=None, help="Override WASSDYN_LOG_LEVEL")
    parser.add_argument("--json", action="store_true", help="Print the full command result as JSON")

    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    dist = sub.add_parser("dist", help="Wasserstein distance between two measure files")
    dist.add_argument("--mu", required=True, help="First measure file")
    dist.add_argument("--nu", required=True, help="Second measure file")
    dist.add_argument("--p", type=float, default=1.0, help="Order p >= 1 (default: 1)")
    dist.add_argument("--method", choices=["auto", "exact", "1d", "dual"], default="auto", help="Solver")
    dist.add_argument("--plan", default=None, metavar="FILE", help="Write an optimal plan as CSV rows i,j,gamma_ij")

    push = sub.add_parser("push", help="Push a measure forward under a map")
    push.add_argument("--mu", required=True, help="Input measure file")
    push.add_argument("--map", required=True, help="Builtin name (pitchfork, sqneg, affine:a,b) or expr:...")
    push.add_argument("-o", "--output", required=True, help="Output measure file")

    stat = sub.add_parser("stationary", help="Search for a stationary measure of a kernel operator")
    stat.add_argument("--kernel", required=True, help="Kernel spec, e.g. 'gauss(pitchfork, sigma=0.1)'")
    stat.add_argument("--mu0", required=True, help="Initial measure file")
    stat.add_argument("--p", type=float, default=1.0, help="Order p >= 1 (default: 1)")
    stat.add_argument("--tol", type=float, default=1e-3, help="Target w_1 residual (default: 1e-3)")
    stat.add_argument("--max-iter", type=int, default=1000, help="Operator applications allowed (default: 1000)")
    stat.add_argument("--cap", type=int, default=None, help="Support cap (default: WASSDYN_COMPRESSION_CAP)")
    stat.add_argument("-o", "--output", default=None, help="Result JSON file")

    exp = sub.add_parser("experiment", help="Run a config-driven experiment and write its report")
    exp.add_argument("--config", required=True, help="Config file or builtin:NAME")
    exp.add_argument("-o", "--output-dir", default=None, help="Report directory")

    return parser


def configure_logging(level: str | None = None) -> None:
    settings = get_settings()
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if settings.LOG_FILE is not None:
        handlers.append(logging.FileHandler(settings.LOG_FILE, encoding="utf-8"))
    logging.basicConfig(
        level=(level or settings.LOG_LEVEL).upper(),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


def _build_request(
    args: argparse.Namespace,
) -> DistanceRequest | PushRequest | StationaryRequest | ExperimentRequest:
    if args.command == "dist":
        return DistanceRequest(mu=args.mu, nu=args.nu, p=args.p, method=args.method, plan=args.plan)
    if args.command == "push":
        return PushRequest(mu=args.mu, map=args.map, output=args.output)
    if args.command == "stationary":
        return StationaryRequest(
            kernel=args.kernel,
            mu0=args.mu0,
            p=args.p,
            tol=args.tol,
            max_iter=args.max_iter,
            compression_cap=args.cap,
            output=args.output,
        )
    return ExperimentRequest(config=args.config, output_dir=args.output_dir)


def dispatch(args: argparse.Namespace) -> CommandResult:
    if args.list_builtins:
        return commands.builtins()
    try:
        request = _build_request(args)
    except ValidationError as exc:
        return CommandResult(
            status="error",
            message=f"invalid arguments: {exc.errors()[0]['loc']}: {exc.errors()[0]['msg']}",
            recovery_tip="See 'wassdyn <command> --help'.",
        )
    if isinstance(request, DistanceRequest):
        return commands.distance(request)
    if isinstance(request, PushRequest):
        return commands.push(request)
    if isinstance(request, StationaryRequest):
        return commands.stationary(request)
    return commands.experiment(request)


def _print_builtins(result: CommandResult) -> None:
    data = result.data or {}
    print("Maps and kernels:")
    for entry in data.get("builtins", []):
        print(f"  {entry['kind']:<7} {entry['syntax']:<40} {entry['description']}")
    print("Experiment configs (use --config builtin:NAME):")
    for entry in data.get("configs", []):
        print(f"  {entry['name']:<32} {entry['kind']:<20} {entry['description']}")


def emit(args: argparse.Namespace, result: CommandResult) -> None:
    if args.json:
        sys.stdout.write(result.to_json().decode("utf-8") + "\n")
        return
    if result.status == "error":
        print(f"error: {result.message}", file=sys.stderr)
        if result.recovery_tip:
            print(f"hint: {result.recovery_tip}", file=sys.stderr)
        return
    if args.list_builtins:
        _print_builtins(result)
        return
    print(result.message)
    if result.status == "failed" and isinstance(result.data, dict):
        for line in result.data.get("failed", []):
            print(f"  FAILED {line}")
        if result.recovery_tip:
            print(f"hint: {result.recovery_tip}", file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    parser = create_argument_parser()
    args = parser.parse_args(argv)
    if args.command is None and not args.list_builtins:
        parser.print_help()
        return 2
    configure_logging(args.log_level)
    logger.debug("wassdyn %s: %s", __version__, args)
    result = dispatch(args)
    emit(args, result)
    return result.exit_code
