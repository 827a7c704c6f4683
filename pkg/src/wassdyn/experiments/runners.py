"""Experiment runners, one per config kind, plus the ``run_experiment`` dispatcher.

Runners never raise on a failed assertion: every check becomes a ``Verdict`` in the report.
Configuration problems detected at run time raise ``ExperimentConfigError``.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from wassdyn import __version__
from wassdyn.config import get_settings
from wassdyn.dynamics import (
    PITCHFORK_ATTRACTOR,
    MapSpec,
    PitchforkTime1,
    SquareNegative,
    apply_map,
    ball_grid,
    contraction_check,
    growth_ratio_profile,
    push_forward,
)
from wassdyn.errors import ExperimentConfigError
from wassdyn.experiments.config import ExperimentConfig
from wassdyn.experiments.report import Criterion, ExperimentReport
from wassdyn.experiments.validation import pitchfork_integrator, run_suites
from wassdyn.invariant import (
    find_stationary,
    invariance_check,
    projection_distance,
    tail_decay_profile,
)
from wassdyn.measure import DiscreteMeasure, as_points, dirac, mix, moment_p, tail_mass
from wassdyn.noise import (
    BoundedUniform,
    Collapse,
    Deterministic,
    Gaussian,
    KernelSpec,
    Mixture,
    MWOperator,
    UniformCollapse,
    apply_kernel_tracked,
    atom_noise,
    base_map,
    gaussian_noise_bound,
    noise_level,
)
from wassdyn.parallel import map_ordered
from wassdyn.trajectory import log_trace
from wassdyn.transport import wasserstein

logger = logging.getLogger(__name__)

# Relative tolerance of the discontinuity formulas and the gaussian bound at n = 64.
FORMULA_RTOL = 2e-3
GAUSSIAN_RTOL = 2e-2
# Relative slack of the noise-to-zero monotonicity and envelope checks.
SWEEP_SLACK = 0.1
TAIL_GRID_RATIO = 1.5


def _new_report(config: ExperimentConfig) -> ExperimentReport:
    return ExperimentReport(
        name=config.name,
        kind=config.kind,
        seed=config.seed,
        config=config.echo(),
        version=__version__,
    )


def _operator(config: ExperimentConfig, kernel: KernelSpec) -> MWOperator:
    cap = config.budgets.compression_cap or get_settings().COMPRESSION_CAP
    return MWOperator(kernel=kernel, compression_cap=cap, p=config.p)


def _sample_points(config: ExperimentConfig, dim: int) -> NDArray[np.float64]:
    if config.sample_points is not None:
        return as_points(config.sample_points, dim)
    if dim == 1:
        near = np.linspace(-10.0, 10.0, 201)
        far = np.geomspace(10.0, 1e3, 9)[1:]
        return np.concatenate((-far[::-1], near, far)).reshape(-1, 1)
    return ball_grid(np.zeros(dim), 10.0, 201)


def _single_kernel(config: ExperimentConfig) -> KernelSpec:
    kernels = config.kernels()
    if len(kernels) != 1:
        raise ExperimentConfigError(f"{config.name}: expected a single kernel, got {len(kernels)}")
    return kernels[0]


def noise_parameter(kernel: KernelSpec, p: float = 1.0) -> float:
    """The scale a sweep decreases: sigma, epsilon, radius, or 0 for a deterministic kernel."""
    if isinstance(kernel, Gaussian):
        return kernel.sigma
    if isinstance(kernel, (Collapse, UniformCollapse)):
        return kernel.epsilon
    if isinstance(kernel, BoundedUniform):
        return kernel.radius
    if isinstance(kernel, Deterministic):
        return 0.0
    if isinstance(kernel, Mixture):
        bound = kernel.noise_bound(p)
        if bound is None:
            raise ExperimentConfigError(f"mixture {kernel.describe()} has no finite noise level")
        return bound
    raise ExperimentConfigError(f"no noise parameter for {kernel!r}")


# --------------------------------------------------------------------------- collapse


@dataclass(frozen=True)
class _CollapseRun:
    steps: int
    distance: float
    converged: bool
    curve: tuple[float, ...]
    compression: float


def _collapse_orbit(op: MWOperator, x0: tuple[float, ...], mu0: DiscreteMeasure, tol: float, budget: int) -> _CollapseRun:
    mu = mu0
    curve = [moment_p(mu, x0, 1.0)]
    cost = 0.0
    while curve[-1] > tol and len(curve) <= budget:
        mu, bound = apply_kernel_tracked(op, mu)
        cost += bound
        curve.append(moment_p(mu, x0, 1.0))
    steps = len(curve) - 1
    return _CollapseRun(steps, curve[-1], curve[-1] <= tol, tuple(curve), cost)


def run_collapse(config: ExperimentConfig) -> ExperimentReport:
    """Iterate a collapse kernel from every start until ``w_1(mu, delta_x0) <= tol``."""
    report = _new_report(config)
    kernel = _single_kernel(config)
    if not isinstance(kernel, (Collapse, UniformCollapse)):
        raise ExperimentConfigError(f"{config.name}: collapse experiments need a collapse or ucollapse kernel")
    op = _operator(config, kernel)
    f = kernel.f
    samples = _sample_points(config, kernel.dim)

    measured, bound = noise_level(op, f, samples)
    report.record(noise_level=measured, noise_bound=bound, epsilon=kernel.epsilon)
    if isinstance(kernel, Collapse):
        report.check(
            Criterion.COLLAPSE_REPRODUCTION,
            measured <= kernel.epsilon + 1e-12,
            f"measured noise level {measured:.6g} vs eps {kernel.epsilon:g}",
            observed=measured,
            threshold=kernel.epsilon,
        )
        fx = apply_map(f, samples)
        d = np.linalg.norm(fx - np.asarray(kernel.x0), axis=1)
        closed = kernel.epsilon**op.p * d**op.p / (1.0 + d**op.p)
        err = float(np.abs(atom_noise(kernel, f, samples, op.p) - closed).max())
        report.check(
            Criterion.NOISE_LEVEL_INEQUALITY,
            err <= 1e-12,
            f"per-point noise matches eps^p d^p / (1 + d^p) to {err:.1e}",
            observed=err,
            threshold=1e-12,
        )
    else:
        report.record(noise_level_unbounded=True)

    starts = config.start_measures()
    tol, budget = config.budgets.tol, config.budgets.max_iter
    runs = map_ordered(lambda mu: _collapse_orbit(op, kernel.x0, mu, tol, budget), starts)
    for i, (mu0, run) in enumerate(zip(starts, runs, strict=True)):
        monotone = all(b <= a + 1e-12 for a, b in zip(run.curve, run.curve[1:], strict=False))
        report.add_series(f"convergence_{i}", step=np.arange(len(run.curve)), distance=run.curve)
        report.record(
            **{
                f"start_{i}": {
                    "atoms": mu0.size,
                    "steps": run.steps,
                    "final_distance": run.distance,
                    "monotone": monotone,
                    "compression_cost_total": run.compression,
                }
            }
        )
        report.check(
            Criterion.COLLAPSE_REPRODUCTION,
            run.converged,
            f"start {i}: w_1 to delta_x0 is {run.distance:.3e} after {run.steps} steps (budget {budget})",
            observed=run.distance,
            threshold=tol,
        )
    return report


# --------------------------------------------------------------------------- pitchfork + gaussian


def _tail_radii(start: float, mu: DiscreteMeasure, anchors: NDArray[np.float64]) -> list[float]:
    radii = [start]
    while tail_mass(mu, anchors, radii[-1]) > 0 and len(radii) < 40:
        radii.append(radii[-1] * TAIL_GRID_RATIO)
    return radii


def _nonincreasing_excess(values: list[float]) -> float:
    return max((b - a for a, b in zip(values, values[1:], strict=False)), default=0.0)


def run_pitchfork_gaussian(config: ExperimentConfig) -> ExperimentReport:
    report = _new_report(config)
    kernel = _single_kernel(config)
    if not isinstance(kernel, Gaussian):
        raise ExperimentConfigError(f"{config.name}: pitchfork_gaussian needs a gauss(...) kernel")
    op = _operator(config, kernel)
    f = kernel.f

    integrator = pitchfork_integrator()
    report.check(integrator.criterion, integrator.passed, integrator.detail, integrator.observed, integrator.threshold)

    measured, _ = noise_level(op, f, _sample_points(config, kernel.dim))
    exact = gaussian_noise_bound(kernel.sigma, op.p, kernel.dim)
    rel = abs(measured - exact) / exact
    report.record(noise_level=measured, gaussian_bound=exact)
    report.check(
        Criterion.GAUSSIAN_BOUND,
        rel <= GAUSSIAN_RTOL,
        f"quantile kernel (n={kernel.n_quantiles}) noise {measured:.6g} vs sigma*m_p^(1/p) {exact:.6g}",
        observed=rel,
        threshold=GAUSSIAN_RTOL,
    )

    result = find_stationary(op, config.initial_measure(), config.budgets.tol, config.budgets.max_iter)
    report.record(stationary=result.summary())
    report.add_series("residuals", iteration=np.arange(1, len(result.history) + 1), residual=result.history)
    report.check(
        Criterion.STATIONARY_RESIDUAL,
        result.residual <= config.budgets.tol,
        f"residual {result.residual:.3e} after {result.iterations} applications",
        observed=result.residual,
        threshold=config.budgets.tol,
    )
    mu = result.measure
    if mu.dim == 1:
        report.add_series("stationary", x=mu.locations[:, 0], weight=mu.weights)

    anchors = config.anchor_points(kernel.dim)
    if anchors is None:
        anchors = PITCHFORK_ATTRACTOR
    proj = projection_distance(mu, anchors, op.p)
    limit = config.expect.max_projection if config.expect and config.expect.max_projection is not None else 0.15
    report.record(projection_distance=proj)
    report.check(
        Criterion.SUPPORT_BOUND,
        proj <= limit,
        f"projection distance to the attractor {proj:.4f}",
        observed=proj,
        threshold=limit,
    )

    start = 2.0 * exact
    rows = tail_decay_profile(mu, anchors, _tail_radii(start, mu, anchors), op.p)
    scaled = [s for _, _, s in rows]
    report.add_series("tail_profile", radius=[r for r, _, _ in rows], tail=[t for _, t, _ in rows], scaled=scaled)
    excess = _nonincreasing_excess(scaled)
    report.check(
        Criterion.TAIL_BOUND,
        excess <= 1e-12,
        f"tail(R) * R^p over {len(rows)} radii from R = {start:.3g}: largest increase {excess:.2e}",
        observed=excess,
        threshold=0.0,
    )
    return report


# --------------------------------------------------------------------------- noise to zero


@dataclass(frozen=True)
class _SweepMember:
    noise: float
    projection: float
    residual: float
    iterations: int
    converged: bool


def envelope_constant(noise: list[float], projection: list[float]) -> float:
    """Linear envelope constant C, fitted on the largest-noise run and applied to the rest."""
    if not noise or noise[0] <= 0.0:
        raise ExperimentConfigError("envelope constant needs a sweep that starts with positive noise")
    return projection[0] / noise[0]


def run_noise_to_zero(config: ExperimentConfig) -> ExperimentReport:
    """Stationary measures along a decreasing noise sweep, against the noise-free anchor set."""
    report = _new_report(config)
    kernels = config.kernels()
    params = [noise_parameter(k, config.p) for k in kernels]
    if any(b > a for a, b in zip(params, params[1:], strict=False)):
        raise ExperimentConfigError(f"{config.name}: sweep noise parameters must decrease, got {params}")
    dim = kernels[0].dim
    anchors = config.anchor_points(dim)
    if anchors is None:
        raise ExperimentConfigError(f"{config.name}: noise_to_zero needs anchors")
    mu0 = config.initial_measure()
    tol, budget = config.budgets.tol, config.budgets.max_iter

    def member(indexed: tuple[int, KernelSpec]) -> _SweepMember:
        i, kernel = indexed
        op = _operator(config, kernel)
        result = find_stationary(op, mu0, tol, budget)
        return _SweepMember(
            noise=params[i],
            projection=projection_distance(result.measure, anchors, config.p),
            residual=result.residual,
            iterations=result.iterations,
            converged=result.converged,
        )

    members = map_ordered(member, list(enumerate(kernels)))
    report.add_series(
        "sweep",
        noise=[m.noise for m in members],
        projection=[m.projection for m in members],
        residual=[m.residual for m in members],
        iterations=[m.iterations for m in members],
    )
    report.record(
        members=[
            {"kernel": spec, "noise": m.noise, "projection": m.projection, "converged": m.converged}
            for spec, m in zip(config.kernel_specs, members, strict=True)
        ]
    )
    if not all(m.converged for m in members):
        logger.warning("%s: %d sweep member(s) did not converge", config.name, sum(not m.converged for m in members))

    slack = config.abs_slack
    d = [m.projection for m in members]
    excess = max(b - ((1.0 + SWEEP_SLACK) * a + slack) for a, b in zip(d, d[1:], strict=False))
    report.check(
        Criterion.NOISE_TO_ZERO,
        excess <= 0.0,
        "projection distances " + ", ".join(f"{x:.4g}" for x in d),
        observed=excess,
        threshold=0.0,
    )

    final = members[-1]
    if final.noise == 0.0:
        report.check(
            Criterion.NOISE_TO_ZERO,
            final.projection <= 1e-6,
            f"noise-free member: projection distance {final.projection:.2e}",
            observed=final.projection,
            threshold=1e-6,
        )
        return report
    c = envelope_constant([m.noise for m in members], d)
    envelope = (1.0 + SWEEP_SLACK) * c * final.noise + slack
    report.record(envelope_constant=c)
    report.check(
        Criterion.NOISE_TO_ZERO,
        final.projection <= envelope,
        f"final projection {final.projection:.4g} vs envelope {envelope:.4g} (C = {c:.4g})",
        observed=final.projection,
        threshold=envelope,
    )
    return report


# --------------------------------------------------------------------------- discontinuity


def discontinuity_sequence(n: int, p: float = 1.0) -> DiscreteMeasure:
    """``m_n delta_{-n} + (1 - m_n) delta_0`` with ``m_n = (1 + n^p) / n^(3p)``."""
    if n < 2:
        raise ExperimentConfigError(f"the discontinuity sequence starts at n = 2, got {n}")
    m = (1.0 + n**p) / n ** (3.0 * p)
    return mix(dirac(-float(n)), dirac(0.0), m)


def discontinuity_formulas(n: int, p: float = 1.0) -> tuple[float, float]:
    """Closed forms of ``w_p(mu_n, delta_0)`` and ``w_p(f_* mu_n, delta_0)`` for the square-negative map."""
    return ((1.0 + n**p) / n ** (2.0 * p)) ** (1.0 / p), ((1.0 + n**p) / n**p) ** (1.0 / p)


def run_discontinuity(config: ExperimentConfig) -> ExperimentReport:
    report = _new_report(config)
    p = config.p
    ns = sorted(config.n_values or [10, 100, 1000])
    sqneg = SquareNegative()
    origin = dirac(0.0)
    rows = []
    worst = 0.0
    for n in ns:
        mu = discontinuity_sequence(n, p)
        near = wasserstein(mu, origin, p)
        far = wasserstein(push_forward(mu, sqneg), origin, p)
        fn, ff = discontinuity_formulas(n, p)
        worst = max(worst, abs(near - fn) / fn, abs(far - ff) / ff)
        rows.append((n, near, far, fn, ff))
    report.add_series(
        "sequence",
        n=[r[0] for r in rows],
        distance=[r[1] for r in rows],
        pushed_distance=[r[2] for r in rows],
        formula=[r[3] for r in rows],
        pushed_formula=[r[4] for r in rows],
    )
    report.record(final_n=ns[-1], final_distance=rows[-1][1], final_pushed_distance=rows[-1][2])
    report.check(
        Criterion.DISCONTINUITY_REPRODUCTION,
        worst <= FORMULA_RTOL,
        f"largest relative deviation from the closed forms {worst:.2e}",
        observed=worst,
        threshold=FORMULA_RTOL,
    )
    near_trend = all(b[1] < a[1] for a, b in zip(rows, rows[1:], strict=False))
    n_last, near_last, far_last = rows[-1][0], rows[-1][1], rows[-1][2]
    gap = max(near_last, abs(far_last - 1.0))
    fn_last, ff_last = discontinuity_formulas(n_last, p)
    limit = (1.0 + FORMULA_RTOL) * max(fn_last, ff_last - 1.0)
    report.check(
        Criterion.DISCONTINUITY_REPRODUCTION,
        near_trend and gap <= limit,
        f"n = {n_last}: w_p(mu_n, delta_0) = {near_last:.6g} -> 0 while w_p(f_* mu_n, delta_0) = {far_last:.6g} -> 1",
        observed=gap,
        threshold=limit,
    )

    radii = config.growth_radii
    for label, f, expected in (("sqneg", sqneg, "unbounded-suspect"), ("pitchfork", PitchforkTime1(), "bounded")):
        profile = growth_ratio_profile(f, [0.0], radii, seed=config.seed)
        report.add_series(f"growth_{label}", radius=[r for r, _ in profile.rows], ratio=profile.ratios)
        report.check(
            Criterion.DISCONTINUITY_REPRODUCTION,
            profile.verdict == expected,
            f"growth profile of {label}: {profile.verdict}, ratios "
            + ", ".join(f"{x:.4g}" for x in profile.ratios),
            observed=profile.ratios[-1],
        )

    # f o f = 0: finite-time compactness holds although f_* is discontinuous.
    finite = contraction_check(sqneg, [0.0], m=2, R_list=radii, finite_radius=1e-12)
    report.record(finite_time_max_norm=max(r.max_norm for r in finite.rows))
    report.check(
        Criterion.DISCONTINUITY_REPRODUCTION,
        finite.passed,
        f"sqneg^2 maps every ball of radius up to {radii[-1]:g} onto 0",
        observed=max(r.max_norm for r in finite.rows),
        threshold=1e-12,
    )
    return report


# --------------------------------------------------------------------------- local compactness


def local_compactness_sequence(n: int, epsilon: float = 1.0, p: float = 1.0) -> DiscreteMeasure:
    """``m_n delta_n + (1 - m_n) delta_0`` with ``m_n = eps^p n^-p``, so ``w_p(mu_n, delta_0) = eps``."""
    m = epsilon**p * float(n) ** (-p)
    if not 0.0 < m <= 1.0:
        raise ExperimentConfigError(f"mass eps^p n^-p = {m:g} at n = {n} is not a probability")
    return mix(dirac(float(n)), dirac(0.0), m)


def run_local_compactness(config: ExperimentConfig) -> ExperimentReport:
    report = _new_report(config)
    p = config.p
    eps = config.epsilon if config.epsilon is not None else 1.0
    ns = sorted(config.n_values or [1, 10, 100, 1000])
    origin = dirac(0.0)
    masses, distances, tails = [], [], []
    for n in ns:
        mu = local_compactness_sequence(n, eps, p)
        masses.append(eps**p * float(n) ** (-p))
        distances.append(wasserstein(mu, origin, p))
        tails.append(tail_mass(mu, [[0.0]], n / 2.0))
    report.add_series("sequence", n=ns, mass=masses, distance=distances, tail=tails)
    dist_err = max(abs(d - eps) for d in distances)
    tail_err = max(abs(t - m) for t, m in zip(tails, masses, strict=True))
    report.record(distance_error=dist_err, tail_error=tail_err, final_mass=masses[-1])
    report.check(
        Criterion.LOCAL_COMPACTNESS,
        dist_err <= 1e-9,
        f"w_p(mu_n, delta_0) stays at eps = {eps:g} (max deviation {dist_err:.1e})",
        observed=dist_err,
        threshold=1e-9,
    )
    decreasing = all(b < a for a, b in zip(masses, masses[1:], strict=False))
    report.check(
        Criterion.LOCAL_COMPACTNESS,
        decreasing and tail_err <= 1e-12,
        f"escaping mass tail_mass(mu_n, {{0}}, n/2) = m_n -> {masses[-1]:.3g}",
        observed=tail_err,
        threshold=1e-12,
    )
    return report


# --------------------------------------------------------------------------- custom


def run_custom(config: ExperimentConfig) -> ExperimentReport:
    """Noise level, stationary search, invariance probe and tail profile for any kernel."""
    report = _new_report(config)
    kernel = _single_kernel(config)
    op = _operator(config, kernel)
    f: MapSpec = base_map(kernel)
    expect = config.expect

    measured, bound = noise_level(op, f, _sample_points(config, kernel.dim))
    report.record(noise_level=measured, noise_bound=bound)
    if bound is not None:
        report.check(
            Criterion.NOISE_LEVEL_INEQUALITY,
            measured <= bound + 1e-9,
            f"measured noise level {measured:.6g} vs analytic bound {bound:.6g}",
            observed=measured,
            threshold=bound,
        )

    result = find_stationary(op, config.initial_measure(), config.budgets.tol, config.budgets.max_iter)
    mu = result.measure
    report.record(stationary=result.summary())
    report.add_series("residuals", iteration=np.arange(1, len(result.history) + 1), residual=result.history)
    if mu.dim == 1:
        report.add_series("stationary", x=mu.locations[:, 0], weight=mu.weights)

    if expect is not None and expect.max_residual is not None:
        report.check(
            Criterion.STATIONARY_RESIDUAL,
            result.residual <= expect.max_residual,
            f"residual {result.residual:.3e} after {result.iterations} applications",
            observed=result.residual,
            threshold=expect.max_residual,
        )
    if expect is not None and expect.max_steps is not None:
        report.check(
            Criterion.STATIONARY_RESIDUAL,
            result.converged and result.iterations <= expect.max_steps,
            f"converged={result.converged} in {result.iterations} applications",
            observed=float(result.iterations),
            threshold=float(expect.max_steps),
        )
    if expect is not None and expect.support_within is not None:
        lo, hi = expect.support_within
        inside = bool(np.all((mu.locations >= lo - 1e-12) & (mu.locations <= hi + 1e-12)))
        report.check(
            Criterion.SUPPORT_BOUND,
            inside,
            f"support spans [{mu.locations.min():.4g}, {mu.locations.max():.4g}] vs [{lo:g}, {hi:g}]",
            observed=float(np.abs(mu.locations).max()),
            threshold=max(abs(lo), abs(hi)),
        )

    anchors = config.anchor_points(kernel.dim)
    if anchors is not None:
        proj = projection_distance(mu, anchors, op.p)
        report.record(projection_distance=proj)
        if expect is not None and expect.max_projection is not None:
            report.check(
                Criterion.SUPPORT_BOUND,
                proj <= expect.max_projection,
                f"projection distance to the anchor set {proj:.4g}",
                observed=proj,
                threshold=expect.max_projection,
            )
        if config.invariance is not None:
            inv = config.invariance
            check = invariance_check(op, anchors, inv.delta, inv.delta_out, inv.probes, config.seed)
            report.record(invariance={"probes": check.probes, "max_distance_out": check.max_distance_out})
            report.check(
                Criterion.INVARIANCE,
                check.passed,
                f"{len(check.failures)} of {check.probes} probes left the {inv.delta_out:g}-neighborhood",
                observed=check.max_distance_out,
                threshold=inv.delta_out,
            )
        if config.tail_radii:
            rows = tail_decay_profile(mu, anchors, config.tail_radii, op.p)
            report.add_series(
                "tail_profile",
                radius=[r for r, _, _ in rows],
                tail=[t for _, t, _ in rows],
                scaled=[s for _, _, s in rows],
            )
    return report


# --------------------------------------------------------------------------- validation


def run_validation(config: ExperimentConfig) -> ExperimentReport:
    report = _new_report(config)
    for o in run_suites(config.seed, config.instances):
        report.record(**{o.criterion.value: {"instances": o.instances, "observed": o.observed}})
        report.check(o.criterion, o.passed, o.detail, observed=o.observed, threshold=o.threshold)
    return report


# --------------------------------------------------------------------------- dispatch

RUNNERS: dict[str, Callable[[ExperimentConfig], ExperimentReport]] = {
    "collapse": run_collapse,
    "pitchfork_gaussian": run_pitchfork_gaussian,
    "noise_to_zero": run_noise_to_zero,
    "discontinuity": run_discontinuity,
    "local_compactness": run_local_compactness,
    "custom": run_custom,
    "validation": run_validation,
}


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run the config's kind, stamp wall clock, and optionally re-run to check determinism."""
    runner = RUNNERS[config.kind]
    logger.info("experiment %s (%s) started, seed %d", config.name, config.kind, config.seed)
    t0 = time.perf_counter()
    report = runner(config)
    if config.check_determinism:
        again = runner(config)
        same = report.fingerprint() == again.fingerprint()
        report.check(
            Criterion.DETERMINISM,
            same,
            "second run is byte-identical" if same else "second run differs outside wall clock and version",
        )
    report.wall_clock_s = time.perf_counter() - t0
    passed = sum(v.passed for v in report.verdicts)
    logger.info(
        "experiment %s finished in %.1fs: %d/%d verdicts passed",
        config.name,
        report.wall_clock_s,
        passed,
        len(report.verdicts),
    )
    log_trace(
        "experiment",
        name=config.name,
        kind=config.kind,
        passed=report.passed,
        verdicts=len(report.verdicts),
        wall_clock_s=report.wall_clock_s,
    )
    return report
