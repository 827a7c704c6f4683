"""Builtin maps and kernels, and the spec-string grammar used by the CLI and configs.

Maps::

    pitchfork[:h=STEP]   sqneg   affine:a,b   id | identity[:d]   expr:E1[,E2...]   ode:G1[,G2...]
    MAP >> MAP >> ...    (composition, left map applied first)

Kernels::

    det(MAP)   gauss(MAP,sigma=S[,n=N][,atoms=A])   ball(MAP,r=R[,n=N])
    collapse(MAP,eps=E[,x0=X][,p=P])   ucollapse(MAP,eps=E[,x0=X])   mix(K1@w1,K2@w2,...)

``X`` is ``a``, ``a;b`` or ``[a,b]`` and defaults to the origin.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from wassdyn.config import get_settings
from wassdyn.dynamics import (
    Affine,
    Expression,
    Identity,
    MapSpec,
    Ode,
    PitchforkTime1,
    SquareNegative,
    compose,
)
from wassdyn.errors import SpecError
from wassdyn.exprparse import parse_map_expression, split_components
from wassdyn.noise import (
    DEFAULT_GAUSSIAN_ATOMS,
    BoundedUniform,
    Collapse,
    Deterministic,
    Gaussian,
    KernelSpec,
    Mixture,
    UniformCollapse,
)

logger = logging.getLogger(__name__)

_CALL = re.compile(r"^\s*([A-Za-z_]\w*)\s*\((.*)\)\s*$", re.DOTALL)
_KEYWORD = re.compile(r"^\s*([A-Za-z_]\w*)\s*=(.*)$", re.DOTALL)


@dataclass(frozen=True)
class BuiltinEntry:
    name: str
    kind: str  # "map" | "kernel"
    syntax: str
    description: str = ""

    def as_dict(self) -> dict[str, str]:
        return {"name": self.name, "kind": self.kind, "syntax": self.syntax, "description": self.description}


BUILTINS: dict[str, BuiltinEntry] = {
    "pitchfork": BuiltinEntry(
        name="pitchfork",
        kind="map",
        syntax="pitchfork[:h=STEP]",
        description="time-1 map of x' = x - x^3 (RK4); attractor [-1, 1]",
    ),
    "sqneg": BuiltinEntry(
        name="sqneg",
        kind="map",
        syntax="sqneg",
        description="0 for x >= 0, x^2 for x < 0; f o f = 0 but f_* is discontinuous on P_p",
    ),
    "affine": BuiltinEntry(name="affine", kind="map", syntax="affine:a,b", description="x -> a*x + b on R"),
    "identity": BuiltinEntry(name="identity", kind="map", syntax="id | identity:d", description="identity of R^d"),
    "expr": BuiltinEntry(
        name="expr",
        kind="map",
        syntax="expr:E1[,E2,...]",
        description="one arithmetic expression per coordinate (variables x, x1..xd)",
    ),
    "ode": BuiltinEntry(
        name="ode",
        kind="map",
        syntax="ode:G1[,G2,...]",
        description="time-1 map of x' = g(x), RK4 with WASSDYN_RK4_STEP",
    ),
    "det": BuiltinEntry(name="det", kind="kernel", syntax="det(MAP)", description="delta_{f(x)}; noise level 0"),
    "gauss": BuiltinEntry(
        name="gauss",
        kind="kernel",
        syntax="gauss(MAP,sigma=S[,n=N][,atoms=A])",
        description="midpoint-quantile Gaussian around f(x); noise level sigma*m_p^(1/p)",
    ),
    "ball": BuiltinEntry(
        name="ball",
        kind="kernel",
        syntax="ball(MAP,r=R[,n=N])",
        description="uniform pattern in the closed r-ball around f(x); noise level r",
    ),
    "collapse": BuiltinEntry(
        name="collapse",
        kind="kernel",
        syntax="collapse(MAP,eps=E[,x0=X][,p=P])",
        description="moves mass eps^p/(1+|f(x)-x0|^p) to x0; noise level eps, unique stationary delta_x0",
    ),
    "ucollapse": BuiltinEntry(
        name="ucollapse",
        kind="kernel",
        syntax="ucollapse(MAP,eps=E[,x0=X])",
        description="moves a fixed mass eps to x0; weakly small, unbounded in w_p",
    ),
    "mix": BuiltinEntry(
        name="mix", kind="kernel", syntax="mix(K1@w1,K2@w2,...)", description="convex combination of kernels"
    ),
}


def get_builtin(name: str) -> BuiltinEntry | None:
    return BUILTINS.get(name.lower())


def list_builtins() -> list[dict[str, str]]:
    return [entry.as_dict() for entry in BUILTINS.values()]


# --------------------------------------------------------------------------- maps


def _float(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise SpecError(f"{what}: expected a number, got {text.strip()!r}") from None


def _int(text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise SpecError(f"{what}: expected an integer, got {text.strip()!r}") from None


def _single_map(spec: str) -> MapSpec:
    head, _, rest = spec.strip().partition(":")
    name = head.strip().lower()
    if name == "pitchfork":
        step = get_settings().RK4_STEP
        if rest.strip():
            key, eq, value = rest.partition("=")
            step = _float(value if eq else key, "pitchfork step")
            if eq and key.strip() != "h":
                raise SpecError(f"pitchfork accepts only h=STEP, got {rest!r}")
        if not 0 < step <= 1:
            raise SpecError(f"pitchfork step must lie in (0, 1], got {step}")
        return PitchforkTime1(step=step)
    if name == "sqneg":
        return SquareNegative()
    if name == "affine":
        parts = rest.split(",")
        if len(parts) != 2:
            raise SpecError(f"affine expects 'affine:a,b', got {spec!r}")
        return Affine.scalar(_float(parts[0], "affine slope"), _float(parts[1], "affine offset"))
    if name in ("id", "identity"):
        dim = _int(rest, "identity dimension") if rest.strip() else 1
        if dim < 1:
            raise SpecError(f"identity dimension must be >= 1, got {dim}")
        return Identity(dim)
    if name == "expr":
        return Expression(parse_map_expression(rest))
    if name == "ode":
        return Ode(parse_map_expression(rest), step=get_settings().RK4_STEP)
    raise SpecError(f"unknown map {head.strip()!r}; see --list-builtins")


def parse_map(spec: str) -> MapSpec:
    """Build a ``MapSpec`` from its spec string."""
    if not spec or not spec.strip():
        raise SpecError("empty map spec")
    pieces = spec.split(">>")
    if len(pieces) == 1:
        return _single_map(pieces[0])
    if any(not p.strip() for p in pieces):
        raise SpecError(f"empty stage in composition {spec!r}")
    return compose(*(_single_map(p) for p in pieces))


# --------------------------------------------------------------------------- kernels


def parse_point(text: str) -> tuple[float, ...]:
    body = text.strip()
    if body.startswith("[") and body.endswith("]"):
        body = body[1:-1]
    fields = [f for f in re.split(r"[;,]", body) if f.strip()]
    if not fields:
        raise SpecError(f"empty point {text!r}")
    return tuple(_float(f, "point coordinate") for f in fields)


def _split_call(spec: str) -> tuple[str, list[str]]:
    m = _CALL.match(spec)
    if m is None:
        raise SpecError(f"kernel spec must look like name(args), got {spec!r}")
    name, body = m.group(1).lower(), m.group(2)
    depth = 0
    for ch in body:
        depth += ch in "(["
        depth -= ch in ")]"
        if depth < 0:
            raise SpecError(f"unbalanced brackets in {spec!r}")
    if depth != 0:
        raise SpecError(f"unbalanced brackets in {spec!r}")
    return name, [text for text, _ in split_components(body)]


def _map_and_options(name: str, args: list[str], allowed: set[str]) -> tuple[MapSpec, dict[str, str]]:
    positional: list[str] = []
    options: dict[str, str] = {}
    for arg in args:
        kw = _KEYWORD.match(arg)
        if kw is not None and kw.group(1) in allowed:
            options[kw.group(1)] = kw.group(2).strip()
        elif options:
            raise SpecError(f"{name}: positional argument {arg.strip()!r} after keyword arguments")
        else:
            positional.append(arg)
    if not positional or not ",".join(positional).strip():
        raise SpecError(f"{name}: missing MAP argument")
    return parse_map(",".join(positional)), options


def _require(name: str, options: dict[str, str], key: str) -> str:
    if key not in options:
        raise SpecError(f"{name}: missing required argument {key}=")
    return options[key]


def parse_kernel(spec: str) -> KernelSpec:
    """Build a ``KernelSpec`` from its spec string."""
    name, args = _split_call(spec)
    if name == "det":
        f, _ = _map_and_options(name, args, set())
        return Deterministic(f)
    if name == "gauss":
        f, opt = _map_and_options(name, args, {"sigma", "n", "atoms"})
        return Gaussian(
            f,
            sigma=_float(_require(name, opt, "sigma"), "gauss sigma"),
            n_quantiles=_int(opt.get("n", "64"), "gauss n"),
            max_atoms=_int(opt.get("atoms", str(DEFAULT_GAUSSIAN_ATOMS)), "gauss atoms"),
        )
    if name == "ball":
        f, opt = _map_and_options(name, args, {"r", "n"})
        return BoundedUniform(f, radius=_float(_require(name, opt, "r"), "ball r"), n_points=_int(opt.get("n", "16"), "ball n"))
    if name in ("collapse", "ucollapse"):
        allowed = {"x0", "eps", "p"} if name == "collapse" else {"x0", "eps"}
        f, opt = _map_and_options(name, args, allowed)
        x0 = parse_point(opt["x0"]) if "x0" in opt else (0.0,) * f.dim
        eps = _float(_require(name, opt, "eps"), f"{name} eps")
        if name == "collapse":
            return Collapse(f, x0=x0, epsilon=eps, p=_float(opt.get("p", "1"), "collapse p"))
        return UniformCollapse(f, x0=x0, epsilon=eps)
    if name == "mix":
        parts: list[tuple[KernelSpec, float]] = []
        for arg in args:
            if not arg.strip():
                raise SpecError("mix: empty component")
            body, at, weight = arg.rpartition("@")
            if at and ")" not in weight:
                parts.append((parse_kernel(body), _float(weight, "mix weight")))
            else:
                parts.append((parse_kernel(arg), 1.0))
        return Mixture(tuple(parts))
    raise SpecError(f"unknown kernel {name!r}; see --list-builtins")
