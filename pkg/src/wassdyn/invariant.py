"""Orbits, stationary measures and attractor-proximity checks for MW operators."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from wassdyn.errors import MeasureValidationError
from wassdyn.measure import (
    DiscreteMeasure,
    _check_p,
    as_points,
    compress,
    distance_to_set,
    measure_from_arrays,
    mix_many,
    tail_mass,
)
from wassdyn.noise import MWOperator, apply_kernel_tracked
from wassdyn.parallel import map_ordered
from wassdyn.trajectory import log_trace
from wassdyn.transport import wasserstein

logger = logging.getLogger(__name__)

# A plain block whose last residual exceeds this fraction of its first is considered stalled.
STALL_RATIO = 0.9
# Shorter blocks are never judged stalled.
STALL_MIN_BLOCK = 4


def residual(op: MWOperator, mu: DiscreteMeasure, p: float = 1.0) -> float:
    """``w_p(P(mu), mu)``."""
    image, _ = apply_kernel_tracked(op, mu)
    return wasserstein(image, mu, p)


# --------------------------------------------------------------------------- orbits


@dataclass(frozen=True)
class OrbitRecord:
    """Thinned orbit ``mu, P^t mu, P^2t mu, ...`` plus the final state."""

    states: tuple[DiscreteMeasure, ...]
    step_gaps: tuple[float, ...]
    compression_cost_total: float
    steps: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not self.states:
            raise ValueError("an orbit holds at least one state")
        if len(self.step_gaps) != len(self.states) - 1:
            raise ValueError("step_gaps must have one entry fewer than states")

    @property
    def final(self) -> DiscreteMeasure:
        return self.states[-1]


def simulate_orbit(op: MWOperator, mu0: DiscreteMeasure, steps: int, thin: int = 1) -> OrbitRecord:
    """Iterate ``op`` ``steps`` times, keeping every ``thin``-th state and the last one."""
    if steps < 0 or thin < 1:
        raise ValueError(f"need steps >= 0 and thin >= 1, got steps={steps}, thin={thin}")
    states = [mu0]
    kept = [0]
    gaps: list[float] = []
    cost = 0.0
    mu = mu0
    for k in range(1, steps + 1):
        mu, bound = apply_kernel_tracked(op, mu)
        cost += bound
        if k % thin == 0 or k == steps:
            gaps.append(wasserstein(mu, states[-1], 1.0))
            states.append(mu)
            kept.append(k)
    log_trace("orbit", steps=steps, thin=thin, final_atoms=mu.size, compression=cost)
    return OrbitRecord(states=tuple(states), step_gaps=tuple(gaps), compression_cost_total=cost, steps=tuple(kept))


def _average(measures: Sequence[DiscreteMeasure], cap: int | None, p: float) -> tuple[DiscreteMeasure, float]:
    avg = mix_many([(m, 1.0) for m in measures])
    if cap is None:
        return avg, 0.0
    return compress(avg, cap, p)


def cesaro_average(op: MWOperator, mu0: DiscreteMeasure, m: int) -> DiscreteMeasure:
    """``(1/m) sum_{k<m} P^k(mu0)``; the running average is compressed after every step."""
    return cesaro_average_tracked(op, mu0, m)[0]


def cesaro_average_tracked(op: MWOperator, mu0: DiscreteMeasure, m: int) -> tuple[DiscreteMeasure, float]:
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    avg = mu0
    mu = mu0
    cost = 0.0
    for k in range(1, m):
        mu, bound = apply_kernel_tracked(op, mu)
        cost += bound
        avg = mix_many([(mu, 1.0 / (k + 1)), (avg, k / (k + 1))])
        if op.compression_cap is not None:
            avg, bound = compress(avg, op.compression_cap, op.p)
            cost += bound
    return avg, cost


# --------------------------------------------------------------------------- stationary search


@dataclass(frozen=True)
class StationaryResult:
    measure: DiscreteMeasure
    residual: float  # w_1(P(mu*), mu*)
    iterations: int
    converged: bool
    history: tuple[float, ...] = ()
    residual_p: float = math.nan  # w_p(P(mu*), mu*) in the operator's order
    compression_cost_total: float = 0.0

    def summary(self) -> dict[str, Any]:
        return {
            "residual": self.residual,
            "residual_p": self.residual_p,
            "iterations": self.iterations,
            "converged": self.converged,
            "atoms": self.measure.size,
            "compression_cost_total": self.compression_cost_total,
        }


@dataclass
class _Best:
    measure: DiscreteMeasure
    residual: float = math.inf

    def offer(self, mu: DiscreteMeasure, r: float) -> None:
        if r < self.residual:
            self.measure = mu
            self.residual = r


def find_stationary(op: MWOperator, mu0: DiscreteMeasure, tol: float, max_iter: int = 1000) -> StationaryResult:
    """Search a fixed point of ``op`` near ``mu0``.

    Plain iteration runs in blocks of length 2, 4, 8, ... After a block of length 4 or more
    that failed to cut its residual by 10% the Cesaro average of the block's states is
    tested, and the next block starts from the average's image when that beats the last
    plain residual. Every operator application counts toward ``max_iter``. The state with
    the smallest w_1 residual is returned whether or not ``tol`` was reached.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")

    best = _Best(mu0)
    history: list[float] = []
    cost = 0.0
    used = 0
    mu = mu0
    block = 2
    converged = False

    while used < max_iter and not converged:
        states: list[DiscreteMeasure] = []
        block_residuals: list[float] = []
        for _ in range(block):
            if used >= max_iter:
                break
            nxt, bound = apply_kernel_tracked(op, mu)
            used += 1
            cost += bound
            r = wasserstein(nxt, mu, 1.0)
            history.append(r)
            block_residuals.append(r)
            best.offer(mu, r)
            logger.debug("iteration %d: residual %.3e (%d atoms)", used, r, mu.size)
            if r <= tol:
                converged = True
                break
            states.append(nxt)
            mu = nxt
        if converged or used >= max_iter or not states:
            break
        block *= 2
        if len(block_residuals) < STALL_MIN_BLOCK or block_residuals[-1] <= STALL_RATIO * block_residuals[0]:
            continue

        # Stalled or cycling: test the block's Cesaro average.
        avg, bound = _average(states, op.compression_cap, op.p)
        cost += bound
        nxt, bound = apply_kernel_tracked(op, avg)
        used += 1
        cost += bound
        r = wasserstein(nxt, avg, 1.0)
        history.append(r)
        best.offer(avg, r)
        logger.debug("cesaro block of %d: residual %.3e", len(states), r)
        if r <= tol:
            converged = True
            break
        if r < block_residuals[-1]:
            mu = nxt

    mu_star = best.measure
    res_p = residual(op, mu_star, op.p) if op.p != 1.0 else best.residual
    if converged:
        logger.info("stationary measure found after %d applications (residual %.3e)", used, best.residual)
    else:
        logger.warning(
            "no stationary measure within tol %.1e after %d applications; best residual %.3e",
            tol,
            used,
            best.residual,
        )
    log_trace(
        "stationary",
        iterations=used,
        residual=best.residual,
        converged=converged,
        atoms=mu_star.size,
        compression=cost,
    )
    return StationaryResult(
        measure=mu_star,
        residual=best.residual,
        iterations=used,
        converged=converged,
        history=tuple(history),
        residual_p=res_p,
        compression_cost_total=cost,
    )


# --------------------------------------------------------------------------- attractor proximity


def projection_distance(mu: DiscreteMeasure, anchor_set: ArrayLike, p: float = 1.0) -> float:
    """``(sum_i w_i d(x_i, A)^p)^(1/p)``: the w_p distance from ``mu`` to measures on ``A``."""
    _check_p(p)
    d = distance_to_set(mu.locations, as_points(anchor_set, mu.dim))
    return float(np.dot(mu.weights, d**p)) ** (1.0 / p)


def projection_measure(mu: DiscreteMeasure, anchor_set: ArrayLike) -> DiscreteMeasure:
    """Nearest-point projection of ``mu`` onto the anchors (lowest anchor index on ties)."""
    anchors = as_points(anchor_set, mu.dim)
    d = np.linalg.norm(mu.locations[:, None, :] - anchors[None, :, :], axis=2)
    return measure_from_arrays(anchors[np.argmin(d, axis=1)], mu.weights)


@dataclass(frozen=True)
class InvarianceWitness:
    probe: int
    distance_in: float
    distance_out: float
    atoms: list[list[float]]


@dataclass(frozen=True)
class InvarianceReport:
    delta: float
    delta_out: float
    probes: int
    max_distance_out: float
    failures: tuple[InvarianceWitness, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return not self.failures


def _probe_measures(anchors: NDArray[np.float64], delta: float, probes: int, p: float, seed: int) -> list[DiscreteMeasure]:
    rng = np.random.default_rng(seed)
    dim = anchors.shape[1]
    out = []
    for _ in range(probes):
        k = int(rng.integers(2, 9))
        base = anchors[rng.integers(0, anchors.shape[0], size=k)]
        weights = rng.dirichlet(np.ones(k))
        dirs = rng.standard_normal((k, dim))
        dirs /= np.maximum(np.linalg.norm(dirs, axis=1, keepdims=True), 1e-300)
        raw = rng.random(k)
        size = float(np.dot(weights, raw**p)) ** (1.0 / p)
        scale = delta * float(rng.random()) / size if size > 0 else 0.0
        out.append(measure_from_arrays(base + scale * raw[:, None] * dirs, weights))
    return out


def invariance_check(
    op: MWOperator,
    anchor_set: ArrayLike,
    delta: float,
    delta_out: float,
    probes: int = 32,
    seed: int = 0,
) -> InvarianceReport:
    """Probe positive invariance of ``{mu : projection_distance(mu, A) <= delta}``.

    Seeded probe measures inside the ``delta`` sublevel set are pushed through ``op`` once;
    every image farther than ``delta_out`` from ``A`` is reported as a witness.
    """
    if not 0 < delta <= delta_out:
        raise ValueError(f"need 0 < delta <= delta_out, got {delta}, {delta_out}")
    anchors = as_points(anchor_set, op.dim)
    measures = _probe_measures(anchors, delta, probes, op.p, seed)

    def one(indexed: tuple[int, DiscreteMeasure]) -> tuple[int, float, float, DiscreteMeasure]:
        i, mu = indexed
        image, _ = apply_kernel_tracked(op, mu)
        return i, projection_distance(mu, anchors, op.p), projection_distance(image, anchors, op.p), mu

    results = map_ordered(one, list(enumerate(measures)))
    failures = tuple(
        InvarianceWitness(probe=i, distance_in=d_in, distance_out=d_out, atoms=mu.to_rows())
        for i, d_in, d_out, mu in results
        if d_out > delta_out
    )
    worst = max((d_out for _, _, d_out, _ in results), default=0.0)
    if failures:
        logger.info("invariance check: %d of %d probes left the %.3g-neighborhood", len(failures), probes, delta_out)
    return InvarianceReport(delta=delta, delta_out=delta_out, probes=probes, max_distance_out=worst, failures=failures)


def tail_decay_profile(
    mu: DiscreteMeasure, anchor_set: ArrayLike, radii: Sequence[float], p: float = 1.0
) -> list[tuple[float, float, float]]:
    """Rows ``(R, tail_mass(R), tail_mass(R) * R^p)``."""
    _check_p(p)
    rs = [float(r) for r in radii]
    if any(r <= 0 for r in rs) or any(b <= a for a, b in zip(rs, rs[1:], strict=False)):
        raise MeasureValidationError("radii must be positive and increasing")
    rows = []
    for r in rs:
        t = tail_mass(mu, anchor_set, r)
        rows.append((r, t, t * r**p))
    return rows
