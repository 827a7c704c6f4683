"""Seeded property suites behind the ``validation`` experiment kind.

Each suite draws its own generator from the experiment seed, checks one family of
identities on random instances and returns the worst violation it saw.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from wassdyn.dynamics import (
    Affine,
    MapSpec,
    PitchforkTime1,
    SquareNegative,
    apply_map,
    eval_map,
    pitchfork_closed_form,
)
from wassdyn.experiments.report import Criterion
from wassdyn.measure import DiscreteMeasure, measure_from_arrays, mix, moment_p, tail_mass
from wassdyn.noise import (
    BoundedUniform,
    Collapse,
    Gaussian,
    KernelSpec,
    MWOperator,
    atom_noise,
    gaussian_noise_bound,
    integrated_noise,
    operator_gap,
)
from wassdyn.parallel import map_ordered
from wassdyn.transport import (
    Method,
    brute_force_wasserstein,
    kr_dual,
    wasserstein,
    wasserstein_1d,
    wasserstein_exact,
)

logger = logging.getLogger(__name__)

DEFAULT_INSTANCES: dict[str, int] = {
    "ot-correctness": 500,
    "ot-1d": 200,
    "kr-duality": 200,
    "metric-axioms": 300,
    "segment-identity": 100,
    "convex-interpolation": 100,
    "noise-level-inequality": 100,
    "tail-bound": 300,
}


@dataclass(frozen=True)
class SuiteOutcome:
    criterion: Criterion
    passed: bool
    instances: int
    observed: float
    threshold: float
    detail: str


def random_measure(
    rng: np.random.Generator, n: int, dim: int, *, uniform: bool = False, scale: float = 2.0
) -> DiscreteMeasure:
    locs = scale * rng.standard_normal((n, dim))
    w = np.full(n, 1.0 / n) if uniform else rng.dirichlet(np.ones(n))
    return measure_from_arrays(locs, w)


def _method(mu: DiscreteMeasure) -> Method:
    return "1d" if mu.dim == 1 else "exact"


# --------------------------------------------------------------------------- transport


def ot_correctness(rng: np.random.Generator, count: int, count_1d: int) -> SuiteOutcome:
    worst = 0.0
    for i in range(count):
        n = int(rng.integers(1, 7))
        d = int(rng.integers(1, 4))
        p = 1.0 if i % 2 == 0 else 2.0
        mu = random_measure(rng, n, d, uniform=True)
        nu = random_measure(rng, n, d, uniform=True)
        if mu.size != n or nu.size != n:
            continue
        worst = max(worst, abs(wasserstein_exact(mu, nu, p)[0] - brute_force_wasserstein(mu, nu, p)))
    worst_1d = 0.0
    for i in range(count_1d):
        p = 1.0 if i % 2 == 0 else 2.0
        mu = random_measure(rng, int(rng.integers(1, 13)), 1)
        nu = random_measure(rng, int(rng.integers(1, 13)), 1)
        worst_1d = max(worst_1d, abs(wasserstein_1d(mu, nu, p) - wasserstein_exact(mu, nu, p)[0]))
    passed = worst <= 1e-9 and worst_1d <= 1e-8
    detail = f"simplex vs permutations max err {worst:.2e}; quantile vs simplex max err {worst_1d:.2e}"
    return SuiteOutcome(Criterion.OT_CORRECTNESS, passed, count + count_1d, max(worst, worst_1d), 1e-9, detail)


def kr_duality(rng: np.random.Generator, count: int) -> SuiteOutcome:
    worst_gap = 0.0
    worst_violation = 0.0
    for _ in range(count):
        d = int(rng.integers(1, 4))
        mu = random_measure(rng, int(rng.integers(1, 9)), d)
        nu = random_measure(rng, int(rng.integers(1, 9)), d)
        value, pot = kr_dual(mu, nu)
        worst_gap = max(worst_gap, abs(value - wasserstein_exact(mu, nu, 1.0)[0]))
        worst_violation = max(worst_violation, pot.max_violation(mu, nu))
    passed = worst_gap <= 1e-6 and worst_violation <= 1e-9
    detail = f"max primal-dual gap {worst_gap:.2e}; max potential violation {worst_violation:.2e}"
    return SuiteOutcome(Criterion.KR_DUALITY, passed, count, worst_gap, 1e-6, detail)


def metric_axioms(rng: np.random.Generator, count: int) -> SuiteOutcome:
    orders = (1.0, 1.5, 2.0)
    worst = 0.0
    identity = 0.0
    for i in range(count):
        p = orders[i % 3]
        d = int(rng.integers(1, 3))
        a, b, c = (random_measure(rng, int(rng.integers(1, 6)), d) for _ in range(3))
        ab = wasserstein(a, b, p, "exact")
        ba = wasserstein(b, a, p, "exact")
        bc = wasserstein(b, c, p, "exact")
        ac = wasserstein(a, c, p, "exact")
        worst = max(worst, abs(ab - ba), ac - ab - bc)
        identity = max(identity, wasserstein(a, a, p, "exact"))
    passed = worst <= 1e-9 and identity <= 1e-9
    detail = f"max symmetry/triangle violation {worst:.2e}; max w(mu, mu) {identity:.2e}"
    return SuiteOutcome(Criterion.METRIC_AXIOMS, passed, count, worst, 1e-9, detail)


def segment_identity(rng: np.random.Generator, count: int) -> SuiteOutcome:
    worst = 0.0
    for _ in range(count):
        d = int(rng.integers(1, 3))
        mu0 = random_measure(rng, int(rng.integers(1, 7)), d)
        mu1 = random_measure(rng, int(rng.integers(1, 7)), d)
        t = float(rng.random())
        m = _method(mu0)
        lhs = wasserstein(mix(mu1, mu0, t), mu0, 1.0, m)
        worst = max(worst, abs(lhs - t * wasserstein(mu1, mu0, 1.0, m)))
    return SuiteOutcome(
        Criterion.SEGMENT_IDENTITY, worst <= 1e-8, count, worst, 1e-8, f"max |w1(mu_t, mu0) - t w1(mu1, mu0)| {worst:.2e}"
    )


def convex_interpolation(rng: np.random.Generator, count: int) -> SuiteOutcome:
    worst = -math.inf
    for i in range(count):
        p = 1.0 if i % 2 == 0 else 2.0
        d = int(rng.integers(1, 3))
        mu0, mu1, nu0, nu1 = (random_measure(rng, int(rng.integers(1, 6)), d) for _ in range(4))
        t = float(rng.random())
        m = _method(mu0)
        lhs = wasserstein(mix(mu1, mu0, t), mix(nu1, nu0, t), p, m) ** p
        rhs = t * wasserstein(mu1, nu1, p, m) ** p + (1.0 - t) * wasserstein(mu0, nu0, p, m) ** p
        worst = max(worst, lhs - rhs)
    return SuiteOutcome(
        Criterion.CONVEX_INTERPOLATION,
        worst <= 1e-9,
        count,
        worst,
        1e-9,
        f"max excess of w_p(mu_t, nu_t)^p over the interpolated bound {worst:.2e}",
    )


# --------------------------------------------------------------------------- kernels


def _random_kernel(rng: np.random.Generator, family: int, p: float) -> KernelSpec:
    pick = int(rng.integers(0, 3))
    f: MapSpec
    if pick == 0:
        f = Affine.scalar(float(rng.uniform(-1.5, 1.5)), float(rng.uniform(-1.0, 1.0)))
    elif pick == 1:
        f = SquareNegative()
    else:
        f = PitchforkTime1()
    if family == 0:
        return Gaussian(f, sigma=float(rng.uniform(0.05, 0.5)), n_quantiles=16)
    if family == 1:
        return BoundedUniform(f, radius=float(rng.uniform(0.05, 0.5)), n_points=8)
    return Collapse(f, x0=(float(rng.uniform(-1.0, 1.0)),), epsilon=float(rng.uniform(0.05, 0.95)), p=p)


def noise_level_inequality(rng: np.random.Generator, count: int) -> SuiteOutcome:
    """``w_p(P mu, f_* mu)^p <= int noise^p dmu <= M^p`` for all three kernel families."""
    worst = -math.inf
    collapse_err = 0.0
    for i in range(count):
        p = 1.0 if i % 2 == 0 else 2.0
        kernel = _random_kernel(rng, i % 3, p)
        op = MWOperator(kernel, compression_cap=None, p=p)
        mu = random_measure(rng, int(rng.integers(1, 6)), 1)
        bound = kernel.noise_bound(p)
        if bound is None:
            continue
        gap_p = operator_gap(op, kernel.f, mu) ** p
        integrated = integrated_noise(op, kernel.f, mu)
        worst = max(worst, gap_p - integrated, integrated - bound**p)
        if isinstance(kernel, Collapse):
            fx = apply_map(kernel.f, mu.locations)
            d = np.abs(fx[:, 0] - kernel.x0[0])
            closed = kernel.epsilon**p * d**p / (1.0 + d**p)
            collapse_err = max(collapse_err, float(np.abs(atom_noise(kernel, kernel.f, mu.locations, p) - closed).max()))
    passed = worst <= 1e-9 and collapse_err <= 1e-12
    detail = f"max inequality violation {worst:.2e}; collapse closed-form error {collapse_err:.2e}"
    return SuiteOutcome(Criterion.NOISE_LEVEL_INEQUALITY, passed, count, worst, 1e-9, detail)


def gaussian_bound() -> SuiteOutcome:
    """Quantile kernel at n = 512 against ``sigma * m_p^(1/p)``."""
    worst = 0.0
    tolerance = {1.0: 5e-3, 2.0: 1e-2}
    passed = True
    for sigma in (0.05, 0.1, 0.5):
        kernel = Gaussian(Affine.scalar(1.0, 0.0), sigma=sigma, n_quantiles=512)
        for p, tol in tolerance.items():
            measured = float(atom_noise(kernel, kernel.f, [[0.0]], p)[0]) ** (1.0 / p)
            rel = abs(measured - gaussian_noise_bound(sigma, p)) / gaussian_noise_bound(sigma, p)
            worst = max(worst, rel)
            passed = passed and rel <= tol
    return SuiteOutcome(Criterion.GAUSSIAN_BOUND, passed, 6, worst, 1e-2, f"max relative deviation {worst:.3%}")


def pitchfork_integrator() -> SuiteOutcome:
    f = PitchforkTime1()
    at_two = float(eval_map(f, [2.0])[0])
    err = abs(at_two - 1.054972)
    fixed = max(abs(float(eval_map(f, [x])[0]) - x) for x in (-1.0, 0.0, 1.0))
    closed = float(np.abs(pitchfork_closed_form([2.0]) - at_two).max())
    passed = err <= 1e-5 and fixed <= 1e-9
    detail = f"f(2) = {at_two:.7f} (closed form gap {closed:.1e}); fixed-point drift {fixed:.1e}"
    return SuiteOutcome(Criterion.PITCHFORK_INTEGRATOR, passed, 4, err, 1e-5, detail)


def chebyshev_tail(rng: np.random.Generator, count: int) -> SuiteOutcome:
    """``tail_mass(mu, {x0}, R) <= moment_1(mu, x0) / R`` on random measures."""
    worst = -math.inf
    for _ in range(count):
        d = int(rng.integers(1, 4))
        mu = random_measure(rng, int(rng.integers(1, 10)), d)
        x0 = rng.standard_normal(d)
        radius = float(rng.uniform(0.1, 5.0))
        worst = max(worst, tail_mass(mu, x0.reshape(1, -1), radius) - moment_p(mu, x0, 1.0) / radius)
    return SuiteOutcome(Criterion.TAIL_BOUND, worst <= 1e-12, count, worst, 1e-12, f"max Chebyshev excess {worst:.2e}")


# --------------------------------------------------------------------------- driver


def run_suites(seed: int, instances: dict[str, int] | None = None) -> list[SuiteOutcome]:
    """Run every suite with an independent child generator; results in a fixed order."""
    counts = {**DEFAULT_INSTANCES, **(instances or {})}
    children = np.random.SeedSequence(seed).spawn(7)

    def rng(i: int) -> np.random.Generator:
        return np.random.default_rng(children[i])

    suites: list[Callable[[], SuiteOutcome]] = [
        lambda: ot_correctness(rng(0), counts["ot-correctness"], counts["ot-1d"]),
        lambda: kr_duality(rng(1), counts["kr-duality"]),
        lambda: metric_axioms(rng(2), counts["metric-axioms"]),
        lambda: segment_identity(rng(3), counts["segment-identity"]),
        lambda: convex_interpolation(rng(4), counts["convex-interpolation"]),
        lambda: noise_level_inequality(rng(5), counts["noise-level-inequality"]),
        gaussian_bound,
        pitchfork_integrator,
        lambda: chebyshev_tail(rng(6), counts["tail-bound"]),
    ]
    outcomes = map_ordered(lambda suite: suite(), suites)
    for o in outcomes:
        logger.info("suite %s: %s (%d instances)", o.criterion.value, "pass" if o.passed else "FAIL", o.instances)
    return outcomes
