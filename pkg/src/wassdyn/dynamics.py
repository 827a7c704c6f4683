"""Deterministic self-maps of R^d and their push-forward action on discrete measures.

Maps are immutable ``MapSpec`` values that evaluate batches of points (``(n, d)`` arrays).
ODE time-1 maps integrate with classical RK4; each nominal step ``h`` is split so that
``h * L(x)`` stays below ``8 h`` for the local Lipschitz estimate ``L``. Stiff starting points
(``|x0| = 10`` for the pitchfork) stay stable and the scheme keeps fourth order in ``h``.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Literal, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import qmc

from wassdyn.errors import DimensionMismatchError, EvaluationError
from wassdyn.exprparse import ExprAst, evaluate, to_source
from wassdyn.measure import DiscreteMeasure, Point, as_point, as_points, measure_from_arrays
from wassdyn.parallel import map_ordered
from wassdyn.transport import wasserstein

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1.0 / 64.0
STIFF_FACTOR = 8.0

Field = Callable[[NDArray[np.float64]], NDArray[np.float64]]


# --------------------------------------------------------------------------- integrator


def rk4_time1(
    g: Field,
    lipschitz: Callable[[NDArray[np.float64]], NDArray[np.float64]],
    x: NDArray[np.float64],
    step: float,
    horizon: float = 1.0,
) -> NDArray[np.float64]:
    """Integrate ``x' = g(x)`` from 0 to ``horizon`` for every row of ``x``.

    Each point keeps its own clock; the last substep is truncated to land on ``horizon``.
    """
    x = np.array(x, dtype=np.float64)
    t = np.zeros(x.shape[0])
    while True:
        active = np.flatnonzero(t < horizon)
        if active.size == 0:
            return x
        xa = x[active]
        lip = lipschitz(xa)
        h = step * np.minimum(1.0, STIFF_FACTOR / np.maximum(lip, 1e-300))
        left = horizon - t[active]
        h = np.where(left - h <= 1e-12 * horizon, left, h)
        hc = h[:, None]
        k1 = g(xa)
        k2 = g(xa + 0.5 * hc * k1)
        k3 = g(xa + 0.5 * hc * k2)
        k4 = g(xa + hc * k3)
        xn = xa + hc / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(xn)):
            raise EvaluationError("ODE solution left the representable range", 0)
        x[active] = xn
        tn = t[active] + h
        tn[h == left] = horizon
        t[active] = tn


def _pitchfork_field(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return x - x**3


def _pitchfork_lipschitz(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.abs(1.0 - 3.0 * x[:, 0] ** 2)


def pitchfork_closed_form(x0: ArrayLike, t: float = 1.0) -> NDArray[np.float64]:
    """Exact flow of ``x' = x - x^3``: ``x0 e^t / sqrt(1 - x0^2 + x0^2 e^(2t))``."""
    x = np.asarray(x0, dtype=np.float64)
    return x * math.exp(t) / np.sqrt(1.0 - x**2 + x**2 * math.exp(2.0 * t))


def _fd_lipschitz(g: Field) -> Callable[[NDArray[np.float64]], NDArray[np.float64]]:
    def estimate(x: NDArray[np.float64]) -> NDArray[np.float64]:
        base = g(x)
        delta = 1e-6 * (1.0 + np.abs(x))
        total = np.zeros(x.shape[0])
        for j in range(x.shape[1]):
            shifted = x.copy()
            shifted[:, j] += delta[:, j]
            col = (g(shifted) - base) / delta[:, j][:, None]
            total += np.sum(col**2, axis=1)
        return np.sqrt(total)

    return estimate


# --------------------------------------------------------------------------- map variants


@dataclass(frozen=True)
class PitchforkTime1:
    """Time-1 map of ``x' = x - x^3`` on R."""

    step: float = DEFAULT_STEP

    @property
    def dim(self) -> int:
        return 1

    def apply(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return rk4_time1(_pitchfork_field, _pitchfork_lipschitz, x, self.step)

    def describe(self) -> str:
        return "pitchfork" if self.step == DEFAULT_STEP else f"pitchfork:h={self.step!r}"


@dataclass(frozen=True)
class SquareNegative:
    """``f(x) = 0`` for ``x >= 0`` and ``x^2`` otherwise; ``f o f = 0``."""

    @property
    def dim(self) -> int:
        return 1

    def apply(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.where(x >= 0.0, 0.0, x * x)

    def describe(self) -> str:
        return "sqneg"


@dataclass(frozen=True, eq=False)
class Affine:
    matrix: NDArray[np.float64]
    shift: NDArray[np.float64]

    @classmethod
    def scalar(cls, a: float, b: float) -> Affine:
        return cls(np.array([[float(a)]]), np.array([float(b)]))

    @property
    def dim(self) -> int:
        return int(self.shift.shape[0])

    def apply(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return x @ self.matrix.T + self.shift

    def describe(self) -> str:
        if self.dim == 1:
            return f"affine:{self.matrix[0, 0]!r},{self.shift[0]!r}"
        return f"affine(dim={self.dim})"


@dataclass(frozen=True)
class Expression:
    """Map given by one parsed expression per output coordinate."""

    components: tuple[ExprAst, ...]

    @property
    def dim(self) -> int:
        return len(self.components)

    def apply(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.column_stack([evaluate(c, x) for c in self.components])

    def describe(self) -> str:
        return "expr:" + ",".join(to_source(c) for c in self.components)


@dataclass(frozen=True)
class Ode:
    """Time-1 map of the autonomous ODE ``x' = g(x)`` with ``g`` given by expressions."""

    components: tuple[ExprAst, ...]
    step: float = DEFAULT_STEP

    @property
    def dim(self) -> int:
        return len(self.components)

    def vector_field(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.column_stack([evaluate(c, x) for c in self.components])

    def apply(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return rk4_time1(self.vector_field, _fd_lipschitz(self.vector_field), x, self.step)

    def describe(self) -> str:
        return "ode:" + ",".join(to_source(c) for c in self.components)


@dataclass(frozen=True)
class Identity:
    dimension: int = 1

    @property
    def dim(self) -> int:
        return self.dimension

    def apply(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.array(x, dtype=np.float64)

    def describe(self) -> str:
        return "id" if self.dimension == 1 else f"identity:{self.dimension}"


@dataclass(frozen=True)
class Composition:
    """``maps[-1] o ... o maps[0]``: the first map is applied first."""

    maps: tuple[MapSpec, ...]

    def __post_init__(self) -> None:
        if not self.maps:
            raise ValueError("composition needs at least one map")
        d = self.maps[0].dim
        for m in self.maps[1:]:
            if m.dim != d:
                raise DimensionMismatchError(d, m.dim, "map")

    @property
    def dim(self) -> int:
        return self.maps[0].dim

    def apply(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        for m in self.maps:
            x = m.apply(x)
        return x

    def describe(self) -> str:
        return " >> ".join(m.describe() for m in self.maps)


MapSpec = Union[PitchforkTime1, SquareNegative, Affine, Expression, Ode, Identity, Composition]


def compose(*maps: MapSpec) -> Composition:
    flat: list[MapSpec] = []
    for m in maps:
        flat.extend(m.maps if isinstance(m, Composition) else (m,))
    return Composition(tuple(flat))


# --------------------------------------------------------------------------- evaluation


def apply_map(f: MapSpec, points: ArrayLike) -> NDArray[np.float64]:
    x = as_points(points, f.dim)
    y = f.apply(x)
    if not np.all(np.isfinite(y)):
        raise EvaluationError(f"map {f.describe()} produced a non-finite value", 0)
    return y


def eval_map(f: MapSpec, x: ArrayLike) -> Point:
    """Image of a single point."""
    pt = as_point(x, f.dim)
    return apply_map(f, pt.reshape(1, -1))[0]


def iterate_map(f: MapSpec, points: ArrayLike, m: int) -> NDArray[np.float64]:
    x = as_points(points, f.dim)
    for _ in range(m):
        x = apply_map(f, x)
    return x


def push_forward(mu: DiscreteMeasure, f: MapSpec) -> DiscreteMeasure:
    """``f_* mu``: every atom ``(x, w)`` moves to ``(f(x), w)``; coincident images merge."""
    if mu.dim != f.dim:
        raise DimensionMismatchError(f.dim, mu.dim, "measure")
    return measure_from_arrays(apply_map(f, mu.locations), mu.weights)


# --------------------------------------------------------------------------- anchor sets


def interval_anchors(a: float, b: float, spacing: float) -> NDArray[np.float64]:
    """Evenly spaced 1-D anchor points covering ``[a, b]`` with gaps at most ``spacing``."""
    if b < a or spacing <= 0:
        raise ValueError(f"bad interval [{a}, {b}] with spacing {spacing}")
    k = int(math.ceil((b - a) / spacing - 1e-9)) + 1
    return np.linspace(a, b, max(k, 1)).reshape(-1, 1)


PITCHFORK_ATTRACTOR = interval_anchors(-1.0, 1.0, 0.05)
PITCHFORK_EQUILIBRIA = np.array([[-1.0], [0.0], [1.0]])


# --------------------------------------------------------------------------- sampling patterns


def ball_pattern(dim: int, n: int) -> NDArray[np.float64]:
    """``n`` deterministic points in the closed unit ball of R^dim.

    1-D: midpoints of ``n`` equal cells of ``[-1, 1]``. Otherwise an unscrambled Halton
    sequence mapped radially from the cube onto the ball.
    """
    if n < 1:
        raise ValueError("pattern needs at least one point")
    if dim == 1:
        return (-1.0 + (2.0 * np.arange(n) + 1.0) / n).reshape(-1, 1)
    u = qmc.Halton(d=dim, scramble=False).random(n + 1)[1:]
    c = 2.0 * u - 1.0
    sup = np.abs(c).max(axis=1)
    eucl = np.linalg.norm(c, axis=1)
    scale = np.divide(sup, eucl, out=np.zeros_like(sup), where=eucl > 0)
    return c * scale[:, None]


def _shell_lattice(x0: Point, norms: NDArray[np.float64]) -> NDArray[np.float64]:
    d = x0.shape[0]
    eye = np.eye(d)
    dirs = np.vstack((eye, -eye))
    pts = [x0.reshape(1, -1)]
    for r in norms:
        pts.append(x0 + r * dirs)
    return np.vstack(pts)


def _ball_samples(x0: Point, radius: float, n: int, seed: int) -> NDArray[np.float64]:
    rng = np.random.default_rng(seed)
    d = x0.shape[0]
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / d)
    return x0 + g * r[:, None]


# --------------------------------------------------------------------------- criteria checks


@dataclass(frozen=True)
class GrowthProfile:
    """``sup |f(x) - x0| / (1 + |x - x0|)`` estimated on balls of growing radius."""

    rows: tuple[tuple[float, float], ...]
    verdict: Literal["bounded", "unbounded-suspect"]

    @property
    def ratios(self) -> list[float]:
        return [r for _, r in self.rows]


def growth_ratio_profile(
    f: MapSpec,
    x0: ArrayLike,
    radii: Sequence[float],
    samples_per_radius: int = 0,
    seed: int = 0,
    norms_per_radius: int = 32,
) -> GrowthProfile:
    """Finite-sample estimate of the linear-growth criterion for ``f_*`` continuity.

    The lattice holds ``2d + 1`` points on each of ``norms_per_radius`` log-spaced shells
    inside ``B_R(x0)``; ``samples_per_radius`` seeded uniform samples are added per ball.
    The verdict flags ``unbounded-suspect`` when the profile more than doubles over the last
    three radii. It is a heuristic, never a proof.
    """
    center = as_point(x0, f.dim)
    rs = [float(r) for r in radii]
    if not rs or any(r <= 0 for r in rs) or any(b <= a for a, b in zip(rs, rs[1:], strict=False)):
        raise ValueError("radii must be positive and strictly increasing")

    def one(indexed: tuple[int, float]) -> float:
        k, radius = indexed
        norms = np.geomspace(radius * 1e-3, radius, norms_per_radius)
        pts = _shell_lattice(center, norms)
        if samples_per_radius > 0:
            pts = np.vstack((pts, _ball_samples(center, radius, samples_per_radius, seed + k)))
        img = apply_map(f, pts)
        num = np.linalg.norm(img - center, axis=1)
        den = 1.0 + np.linalg.norm(pts - center, axis=1)
        return float(np.max(num / den))

    ratios = map_ordered(one, list(enumerate(rs)))
    ref = ratios[-3] if len(ratios) >= 3 else ratios[0]
    suspect = ratios[-1] > 2.0 * ref
    verdict: Literal["bounded", "unbounded-suspect"] = "unbounded-suspect" if suspect else "bounded"
    logger.debug("growth profile of %s: %s -> %s", f.describe(), ratios, verdict)
    return GrowthProfile(rows=tuple(zip(rs, ratios, strict=True)), verdict=verdict)


@dataclass(frozen=True)
class ContractionRow:
    radius: float
    max_norm: float
    threshold: float
    passed: bool


@dataclass(frozen=True)
class ContractionReport:
    m: int
    rows: tuple[ContractionRow, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def ball_grid(center: Point, radius: float, samples: int) -> NDArray[np.float64]:
    """Deterministic points of the closed ball, boundary axis points included."""
    d = center.shape[0]
    if d == 1:
        return center + np.linspace(-radius, radius, max(samples, 2)).reshape(-1, 1)
    inner = center + radius * ball_pattern(d, max(samples, 1))
    eye = np.eye(d)
    return np.vstack((inner, center + radius * eye, center - radius * eye))


def contraction_check(
    f: MapSpec,
    x0: ArrayLike,
    m: int,
    R_list: Sequence[float],
    c: float | None = None,
    samples: int = 201,
    finite_radius: float | None = None,
) -> ContractionReport:
    """Check ``f^m(B_R(x0)) subset B_{cR}(x0)``, or ``subset B_{finite_radius}(x0)``.

    Exactly one of ``c`` (exponential contraction) and ``finite_radius`` (finite-time
    compactness) selects the threshold.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if (c is None) == (finite_radius is None):
        raise ValueError("give exactly one of c and finite_radius")
    if c is not None and not 0.0 <= c < 1.0:
        raise ValueError(f"contraction factor must lie in [0, 1), got {c}")
    center = as_point(x0, f.dim)

    def one(radius: float) -> ContractionRow:
        pts = ball_grid(center, radius, samples)
        out = iterate_map(f, pts, m)
        worst = float(np.linalg.norm(out - center, axis=1).max())
        limit = c * radius if c is not None else float(finite_radius)  # type: ignore[arg-type]
        return ContractionRow(radius=float(radius), max_norm=worst, threshold=limit, passed=worst <= limit + 1e-12)

    rows = map_ordered(one, [float(r) for r in R_list])
    return ContractionReport(m=m, rows=tuple(rows))


@dataclass(frozen=True)
class LipschitzSample:
    distance_in: float
    distance_out: float

    @property
    def ratio(self) -> float:
        return self.distance_out / self.distance_in


@dataclass(frozen=True)
class LipschitzReport:
    """Sampled ``w_p(f_* mu, f_* nu) <= constant * w_p(mu, nu)`` over measure pairs."""

    constant: float
    p: float
    samples: tuple[LipschitzSample, ...]

    @property
    def max_ratio(self) -> float:
        return max((s.ratio for s in self.samples), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.constant * (1.0 + 1e-9)


def _measure_pair(
    rng: np.random.Generator, dim: int, atoms: int, scale: float, local: bool
) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    n = int(rng.integers(1, atoms + 1))
    x = rng.uniform(-scale, scale, size=(n, dim))
    w = rng.dirichlet(np.ones(n))
    if local:
        y = x + 1e-3 * scale * rng.standard_normal((n, dim))
        return measure_from_arrays(x, w), measure_from_arrays(y, w)
    k = int(rng.integers(1, atoms + 1))
    y = rng.uniform(-scale, scale, size=(k, dim))
    return measure_from_arrays(x, w), measure_from_arrays(y, rng.dirichlet(np.ones(k)))


def lipschitz_check(
    f: MapSpec,
    constant: float,
    pairs: int = 32,
    p: float = 1.0,
    atoms: int = 6,
    scale: float = 3.0,
    seed: int = 0,
) -> LipschitzReport:
    """Sample the Lipschitz constant of ``f_*`` on P_p.

    For the time-1 map of an ODE whose field has one-sided Lipschitz constant ``M`` the
    bound is ``constant = e^M``. Half the pairs are independent measures on ``[-scale, scale]^d``,
    the other half are small perturbations of one measure, where the local stretch shows.
    """
    if not constant > 0:
        raise ValueError(f"constant must be positive, got {constant}")
    if pairs < 1 or atoms < 1:
        raise ValueError("need at least one pair and one atom")
    rng = np.random.default_rng(seed)
    drawn = [_measure_pair(rng, f.dim, atoms, scale, local=i % 2 == 1) for i in range(pairs)]

    def one(pair: tuple[DiscreteMeasure, DiscreteMeasure]) -> LipschitzSample | None:
        mu, nu = pair
        d_in = wasserstein(mu, nu, p)
        if d_in <= 0.0:
            return None
        return LipschitzSample(distance_in=d_in, distance_out=wasserstein(push_forward(mu, f), push_forward(nu, f), p))

    samples = tuple(s for s in map_ordered(one, drawn) if s is not None)
    report = LipschitzReport(constant=constant, p=p, samples=samples)
    logger.debug("lipschitz check of %s: max ratio %.6g vs %.6g", f.describe(), report.max_ratio, constant)
    return report
