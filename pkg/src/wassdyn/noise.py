"""Markov kernels ``x -> p(dy|x)`` and the operators they induce on discrete measures.

Every kernel is evaluated as a list of *blocks* ``(Y, W)``: for a batch of points ``X``
(``(n, d)``), row ``i`` of each block contributes the atom ``W[i] * delta_{Y[i]}`` to the
measure ``p(dy|X[i])``. Applying a kernel to a measure is then one stack and one merge.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, stats

from wassdyn.config import get_settings
from wassdyn.dynamics import MapSpec, apply_map, ball_pattern, push_forward
from wassdyn.errors import DimensionMismatchError, SpecError
from wassdyn.measure import (
    DiscreteMeasure,
    _check_p,
    as_point,
    as_points,
    compress,
    measure_from_arrays,
)
from wassdyn.transport import wasserstein_exact

logger = logging.getLogger(__name__)

Block = tuple[NDArray[np.float64], NDArray[np.float64]]

DEFAULT_GAUSSIAN_ATOMS = 256


# --------------------------------------------------------------------------- gaussian helpers


@lru_cache(maxsize=64)
def gaussian_moment(p: float, dim: int = 1) -> float:
    """``E |Z|^p`` for a standard normal ``Z`` in R^dim, by adaptive quadrature."""
    _check_p(p)
    value, _ = integrate.quad(
        lambda r: r**p * stats.chi.pdf(r, dim), 0.0, np.inf, epsabs=0.0, epsrel=1e-10, limit=200
    )
    return float(value)


def gaussian_noise_bound(sigma: float, p: float, dim: int = 1) -> float:
    """``w_p(delta_x, N(x, sigma^2 I)) = sigma * (E|Z|^p)^(1/p)``."""
    return sigma * gaussian_moment(p, dim) ** (1.0 / p)


@lru_cache(maxsize=32)
def _gaussian_offsets(dim: int, n: int, max_atoms: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    q = stats.norm.ppf((np.arange(n) + 0.5) / n)
    if dim == 1:
        offsets = q.reshape(-1, 1)
        weights = np.full(n, 1.0 / n)
    else:
        mesh = np.meshgrid(*([q] * dim), indexing="ij")
        grid = np.column_stack([m.ravel() for m in mesh])
        unit, bound = compress(measure_from_arrays(grid, np.full(grid.shape[0], 1.0)), max_atoms, p=1.0)
        logger.debug("gaussian offsets dim=%d n=%d compressed to %d atoms (w_1 %.2e)", dim, n, unit.size, bound)
        offsets, weights = np.array(unit.locations), np.array(unit.weights)
    offsets.setflags(write=False)
    weights.setflags(write=False)
    return offsets, weights


# --------------------------------------------------------------------------- kernel variants


@dataclass(frozen=True)
class Deterministic:
    f: MapSpec

    @property
    def dim(self) -> int:
        return self.f.dim

    def blocks(self, x: NDArray[np.float64]) -> list[Block]:
        return [(apply_map(self.f, x), np.ones(x.shape[0]))]

    def noise_bound(self, p: float) -> float | None:
        return 0.0

    def describe(self) -> str:
        return f"det({self.f.describe()})"


@dataclass(frozen=True)
class Gaussian:
    """Midpoint-quantile discretization of ``N(f(x), sigma^2 I)``.

    In 1-D the atoms sit at ``f(x) + sigma * Phi^-1((i - 1/2) / n)`` with weights ``1/n``.
    In higher dimension the per-axis grid is compressed once to ``max_atoms`` atoms.
    """

    f: MapSpec
    sigma: float
    n_quantiles: int = 64
    max_atoms: int = DEFAULT_GAUSSIAN_ATOMS

    def __post_init__(self) -> None:
        if not self.sigma > 0 or not math.isfinite(self.sigma):
            raise SpecError(f"gaussian sigma must be positive, got {self.sigma}")
        if self.n_quantiles < 2:
            raise SpecError(f"gaussian needs at least 2 quantiles, got {self.n_quantiles}")

    @property
    def dim(self) -> int:
        return self.f.dim

    def offsets(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return _gaussian_offsets(self.dim, self.n_quantiles, self.max_atoms)

    def blocks(self, x: NDArray[np.float64]) -> list[Block]:
        fx = apply_map(self.f, x)
        offsets, weights = self.offsets()
        ones = np.ones(x.shape[0])
        return [(fx + self.sigma * o, w * ones) for o, w in zip(offsets, weights, strict=True)]

    def noise_bound(self, p: float) -> float | None:
        return gaussian_noise_bound(self.sigma, p, self.dim)

    def describe(self) -> str:
        return f"gauss({self.f.describe()},sigma={self.sigma!r},n={self.n_quantiles})"


@dataclass(frozen=True)
class BoundedUniform:
    """Equal weights on a deterministic pattern inside the closed ball ``B_radius(f(x))``."""

    f: MapSpec
    radius: float
    n_points: int = 16

    def __post_init__(self) -> None:
        if not self.radius > 0 or not math.isfinite(self.radius):
            raise SpecError(f"ball radius must be positive, got {self.radius}")
        if self.n_points < 1:
            raise SpecError(f"ball needs at least one point, got {self.n_points}")

    @property
    def dim(self) -> int:
        return self.f.dim

    def blocks(self, x: NDArray[np.float64]) -> list[Block]:
        fx = apply_map(self.f, x)
        pattern = self.radius * ball_pattern(self.dim, self.n_points)
        w = np.full(x.shape[0], 1.0 / self.n_points)
        return [(fx + o, w) for o in pattern]

    def noise_bound(self, p: float) -> float | None:
        return self.radius

    def describe(self) -> str:
        return f"ball({self.f.describe()},r={self.radius!r},n={self.n_points})"


@dataclass(frozen=True)
class Collapse:
    """``(1 - a(x)) delta_{f(x)} + a(x) delta_{x0}`` with ``a(x) = eps^p / (1 + |f(x) - x0|^p)``."""

    f: MapSpec
    x0: tuple[float, ...]
    epsilon: float
    p: float = 1.0

    def __post_init__(self) -> None:
        if len(self.x0) != self.f.dim:
            raise DimensionMismatchError(self.f.dim, len(self.x0), "collapse target")
        if not self.p >= 1 or not math.isfinite(self.p):
            raise SpecError(f"collapse order p must be >= 1, got {self.p}")
        if not self.epsilon > 0 or not math.isfinite(self.epsilon):
            raise SpecError(f"collapse epsilon must be positive, got {self.epsilon}")
        if self.epsilon**self.p > 1.0:
            raise SpecError(f"collapse needs eps^p <= 1 so that a(x) is a probability, got eps={self.epsilon}")

    @property
    def dim(self) -> int:
        return self.f.dim

    def transfer(self, fx: NDArray[np.float64]) -> NDArray[np.float64]:
        d = np.linalg.norm(fx - np.asarray(self.x0), axis=1)
        return self.epsilon**self.p / (1.0 + d**self.p)

    def blocks(self, x: NDArray[np.float64]) -> list[Block]:
        fx = apply_map(self.f, x)
        a = self.transfer(fx)
        target = np.broadcast_to(np.asarray(self.x0), fx.shape)
        return [(fx, 1.0 - a), (np.array(target), a)]

    def noise_bound(self, p: float) -> float | None:
        return self.epsilon if math.isclose(p, self.p) else None

    def describe(self) -> str:
        x0 = ";".join(repr(v) for v in self.x0)
        return f"collapse({self.f.describe()},x0={x0},eps={self.epsilon!r},p={self.p!r})"


@dataclass(frozen=True)
class UniformCollapse:
    """``(1 - eps) delta_{f(x)} + eps delta_{x0}``: small in the weak topology only."""

    f: MapSpec
    x0: tuple[float, ...]
    epsilon: float

    def __post_init__(self) -> None:
        if len(self.x0) != self.f.dim:
            raise DimensionMismatchError(self.f.dim, len(self.x0), "collapse target")
        if not 0 < self.epsilon <= 1:
            raise SpecError(f"uniform collapse epsilon must lie in (0, 1], got {self.epsilon}")

    @property
    def dim(self) -> int:
        return self.f.dim

    def blocks(self, x: NDArray[np.float64]) -> list[Block]:
        fx = apply_map(self.f, x)
        n = x.shape[0]
        target = np.broadcast_to(np.asarray(self.x0), fx.shape)
        return [(fx, np.full(n, 1.0 - self.epsilon)), (np.array(target), np.full(n, self.epsilon))]

    def noise_bound(self, p: float) -> float | None:
        # sup_x eps^(1/p) |f(x) - x0| is infinite for unbounded maps.
        return None

    def describe(self) -> str:
        x0 = ";".join(repr(v) for v in self.x0)
        return f"ucollapse({self.f.describe()},x0={x0},eps={self.epsilon!r})"


@dataclass(frozen=True)
class Mixture:
    parts: tuple[tuple[KernelSpec, float], ...]

    def __post_init__(self) -> None:
        if not self.parts:
            raise SpecError("mixture needs at least one component")
        d = self.parts[0][0].dim
        for k, w in self.parts:
            if k.dim != d:
                raise DimensionMismatchError(d, k.dim, "kernel")
            if not w >= 0 or not math.isfinite(w):
                raise SpecError(f"mixture weight must be nonnegative, got {w}")
        if sum(w for _, w in self.parts) <= 0:
            raise SpecError("mixture weights sum to zero")

    @property
    def dim(self) -> int:
        return self.parts[0][0].dim

    def normalized(self) -> list[tuple[KernelSpec, float]]:
        total = sum(w for _, w in self.parts)
        return [(k, w / total) for k, w in self.parts if w > 0]

    def blocks(self, x: NDArray[np.float64]) -> list[Block]:
        out: list[Block] = []
        for k, c in self.normalized():
            out.extend((y, c * w) for y, w in k.blocks(x))
        return out

    def noise_bound(self, p: float) -> float | None:
        acc = 0.0
        for k, c in self.normalized():
            m = k.noise_bound(p)
            if m is None:
                return None
            acc += c * m**p
        return acc ** (1.0 / p)

    def describe(self) -> str:
        return "mix(" + ",".join(f"{k.describe()}@{w!r}" for k, w in self.parts) + ")"


KernelSpec = Union[Deterministic, Gaussian, BoundedUniform, Collapse, UniformCollapse, Mixture]


def base_map(kernel: KernelSpec) -> MapSpec:
    """The deterministic map the kernel perturbs; mixture components must share it."""
    if isinstance(kernel, Mixture):
        maps = [base_map(k) for k, _ in kernel.parts]
        if len({f.describe() for f in maps}) != 1:
            raise SpecError("mixture components perturb different maps; noise level is undefined")
        return maps[0]
    return kernel.f


# --------------------------------------------------------------------------- operator


@dataclass(frozen=True)
class MWOperator:
    """Operator ``P(mu) = sum_i w_i p(dy|x_i)`` followed by support compression.

    ``compression_cap=None`` disables compression.
    """

    kernel: KernelSpec
    compression_cap: int | None = None
    p: float = 1.0

    @classmethod
    def with_default_cap(cls, kernel: KernelSpec, p: float = 1.0) -> MWOperator:
        return cls(kernel=kernel, compression_cap=get_settings().COMPRESSION_CAP, p=p)

    @property
    def dim(self) -> int:
        return self.kernel.dim

    def uncapped(self) -> MWOperator:
        return MWOperator(kernel=self.kernel, compression_cap=None, p=self.p)


def _stack(kernel: KernelSpec, x: NDArray[np.float64], w: NDArray[np.float64]) -> DiscreteMeasure:
    blocks = kernel.blocks(x)
    locs = np.vstack([y for y, _ in blocks])
    weights = np.concatenate([bw * w for _, bw in blocks])
    return measure_from_arrays(locs, weights)


def kernel_atom(k: KernelSpec, x: ArrayLike) -> DiscreteMeasure:
    """The measure ``p(dy|x)``."""
    pt = as_point(x, k.dim)
    return _stack(k, pt.reshape(1, -1), np.ones(1))


def apply_kernel_tracked(op: MWOperator, mu: DiscreteMeasure) -> tuple[DiscreteMeasure, float]:
    """``P(mu)`` together with the w_p bound of the compression step (0 when uncompressed)."""
    if mu.dim != op.dim:
        raise DimensionMismatchError(op.dim, mu.dim, "measure")
    out = _stack(op.kernel, mu.locations, mu.weights)
    if op.compression_cap is None:
        return out, 0.0
    return compress(out, op.compression_cap, op.p)


def apply_kernel(op: MWOperator, mu: DiscreteMeasure) -> DiscreteMeasure:
    return apply_kernel_tracked(op, mu)[0]


def atom_noise(kernel: KernelSpec, f: MapSpec, points: ArrayLike, p: float) -> NDArray[np.float64]:
    """``w_p(p(dy|x), delta_{f(x)})^p`` for every point, through the Dirac reduction."""
    x = as_points(points, kernel.dim)
    fx = apply_map(f, x)
    total = np.zeros(x.shape[0])
    for y, w in kernel.blocks(x):
        total += w * np.linalg.norm(y - fx, axis=1) ** p
    return total


def noise_level(op: MWOperator, f: MapSpec, sample_points: Sequence[ArrayLike] | ArrayLike) -> tuple[float, float | None]:
    """Estimated ``sup_x w_p(p(dy|x), delta_{f(x)})`` over the samples, plus the analytic bound."""
    x = as_points(sample_points, op.dim)
    if x.shape[0] == 0:
        raise ValueError("noise_level needs at least one sample point")
    levels = atom_noise(op.kernel, f, x, op.p)
    estimate = float(levels.max()) ** (1.0 / op.p)
    return estimate, op.kernel.noise_bound(op.p)


def integrated_noise(op: MWOperator, f: MapSpec, mu: DiscreteMeasure) -> float:
    """``int w_p(p(dy|x), delta_{f(x)})^p dmu(x)``: the right side of the gap inequality."""
    return float(np.dot(mu.weights, atom_noise(op.kernel, f, mu.locations, op.p)))


def operator_gap(op: MWOperator, f: MapSpec, mu: DiscreteMeasure) -> float:
    """``w_p(P(mu), f_* mu)`` with compression disabled, by the exact solver.

    Raises:
        SupportTooLargeError: the uncompressed image is too large; subsample ``mu`` first.

    """
    image = apply_kernel(op.uncapped(), mu)
    target = push_forward(mu, f)
    return wasserstein_exact(image, target, op.p)[0]
