"""Tests for Markov kernels, the MW operator and noise levels."""

import math

import numpy as np
import pytest

from wassdyn.config import get_settings
from wassdyn.dynamics import Identity, push_forward
from wassdyn.errors import DimensionMismatchError, SpecError
from wassdyn.measure import barycenter, dirac, mix, uniform_grid_measure
from wassdyn.noise import (
    BoundedUniform,
    Collapse,
    Deterministic,
    Gaussian,
    Mixture,
    MWOperator,
    UniformCollapse,
    apply_kernel,
    apply_kernel_tracked,
    atom_noise,
    base_map,
    gaussian_moment,
    gaussian_noise_bound,
    integrated_noise,
    kernel_atom,
    noise_level,
    operator_gap,
)

SAMPLES = np.linspace(-20.0, 20.0, 81).reshape(-1, 1)


class TestGaussianMoments:
    @pytest.mark.parametrize(
        ("p", "dim", "expected"),
        [(1.0, 1, math.sqrt(2.0 / math.pi)), (2.0, 1, 1.0), (2.0, 3, 3.0), (4.0, 1, 3.0)],
    )
    def test_closed_forms(self, p, dim, expected):
        assert gaussian_moment(p, dim) == pytest.approx(expected, rel=1e-8)

    def test_bound_scales_with_sigma(self):
        assert gaussian_noise_bound(0.3, 2.0) == pytest.approx(0.3)


class TestDeterministic:
    def test_atom_is_dirac(self, sqneg):
        assert kernel_atom(Deterministic(sqneg), -2.0).allclose(dirac(4.0))

    def test_operator_is_push_forward(self, pitchfork, random_measure):
        mu = random_measure(10, 1)
        out = apply_kernel(MWOperator(Deterministic(pitchfork)), mu)
        assert out.allclose(push_forward(mu, pitchfork))

    def test_zero_noise(self, sqneg):
        estimate, bound = noise_level(MWOperator(Deterministic(sqneg)), sqneg, SAMPLES)
        assert estimate == 0.0
        assert bound == 0.0


class TestGaussian:
    def test_atom_is_centred(self, halve):
        atom = kernel_atom(Gaussian(halve, sigma=0.2), 4.0)
        assert atom.size == 64
        np.testing.assert_allclose(barycenter(atom), [2.0], atol=1e-12)

    @pytest.mark.parametrize("p", [1.0, 2.0])
    def test_estimate_near_bound(self, halve, p):
        op = MWOperator(Gaussian(halve, sigma=0.25), p=p)
        estimate, bound = noise_level(op, halve, SAMPLES)
        assert bound == pytest.approx(gaussian_noise_bound(0.25, p))
        assert estimate == pytest.approx(bound, rel=0.05)

    @pytest.mark.parametrize("p", [1.0, 2.0])
    def test_quantile_moment_converges(self, halve, p):
        bound = gaussian_noise_bound(0.3, p)
        gaps = []
        for n in (8, 32, 128, 512):
            estimate, _ = noise_level(MWOperator(Gaussian(halve, sigma=0.3, n_quantiles=n), p=p), halve, [[0.0]])
            assert estimate <= bound
            gaps.append(bound - estimate)
        assert gaps == sorted(gaps, reverse=True)
        assert len(set(gaps)) == len(gaps)
        assert gaps[-1] <= 5e-3 * bound

    def test_two_dimensional_atoms_capped(self):
        k = Gaussian(Identity(2), sigma=0.1, n_quantiles=8, max_atoms=32)
        atom = kernel_atom(k, [1.0, -1.0])
        assert atom.size <= 32
        np.testing.assert_allclose(barycenter(atom), [1.0, -1.0], atol=1e-9)

    @pytest.mark.parametrize("sigma", [0.0, -1.0, float("inf")])
    def test_bad_sigma(self, halve, sigma):
        with pytest.raises(SpecError):
            Gaussian(halve, sigma=sigma)


class TestBoundedUniform:
    def test_noise_within_radius(self, pitchfork):
        op = MWOperator(BoundedUniform(pitchfork, radius=0.4))
        estimate, bound = noise_level(op, pitchfork, SAMPLES)
        assert bound == 0.4
        assert 0.0 < estimate <= 0.4

    def test_bad_radius(self, pitchfork):
        with pytest.raises(SpecError):
            BoundedUniform(pitchfork, radius=0.0)


class TestCollapse:
    @pytest.mark.parametrize(("p", "expected"), [(1.0, 0.5 * 3.0 / 4.0), (2.0, 0.25 * 9.0 / 10.0)])
    def test_closed_form(self, p, expected):
        k = Collapse(Identity(), x0=(0.0,), epsilon=0.5, p=p)
        assert atom_noise(k, Identity(), [[3.0]], p)[0] == pytest.approx(expected)

    def test_bound_approached_far_out(self):
        k = Collapse(Identity(), x0=(0.0,), epsilon=0.5)
        estimate, bound = noise_level(MWOperator(k), Identity(), [[1e6]])
        assert bound == 0.5
        assert estimate == pytest.approx(0.5, rel=1e-5)
        assert estimate <= bound

    def test_bound_only_in_its_own_order(self):
        assert Collapse(Identity(), x0=(0.0,), epsilon=0.5, p=1.0).noise_bound(2.0) is None

    def test_mass_moves_to_target(self, sqneg):
        atom = kernel_atom(Collapse(sqneg, x0=(1.0,), epsilon=0.5), -3.0)
        # |f(-3) - 1| = 8, so a = 0.5 / 9
        assert atom.mass_at(1.0) == pytest.approx(0.5 / 9.0)
        assert atom.mass_at(9.0) == pytest.approx(1.0 - 0.5 / 9.0)

    def test_eps_power_must_be_probability(self):
        with pytest.raises(SpecError):
            Collapse(Identity(), x0=(0.0,), epsilon=1.5)

    def test_target_dimension(self):
        with pytest.raises(DimensionMismatchError):
            Collapse(Identity(), x0=(0.0, 0.0), epsilon=0.5)

    def test_uniform_collapse_is_unbounded(self):
        k = UniformCollapse(Identity(), x0=(0.0,), epsilon=0.1)
        assert k.noise_bound(1.0) is None
        near = atom_noise(k, Identity(), [[1.0]], 1.0)[0]
        far = atom_noise(k, Identity(), [[100.0]], 1.0)[0]
        assert far == pytest.approx(100.0 * near)

    def test_uniform_collapse_range(self):
        with pytest.raises(SpecError):
            UniformCollapse(Identity(), x0=(0.0,), epsilon=0.0)


class TestMixture:
    def test_bound_is_power_mean(self, halve):
        k = Mixture(((Deterministic(halve), 1.0), (BoundedUniform(halve, radius=0.4), 1.0)))
        assert k.noise_bound(1.0) == pytest.approx(0.2)
        assert k.noise_bound(2.0) == pytest.approx(math.sqrt(0.5 * 0.16))

    def test_unbounded_component(self, halve):
        k = Mixture(((Deterministic(halve), 1.0), (UniformCollapse(halve, x0=(0.0,), epsilon=0.1), 1.0)))
        assert k.noise_bound(1.0) is None

    def test_atom_weights(self, sqneg):
        k = Mixture(((Deterministic(sqneg), 3.0), (Collapse(sqneg, x0=(5.0,), epsilon=1.0), 1.0)))
        atom = kernel_atom(k, 0.0)
        # f(0) = 0, |f(0) - 5| = 5, collapse moves 1/6 of its quarter
        assert atom.mass_at(5.0) == pytest.approx(0.25 / 6.0)

    def test_base_map_must_agree(self, sqneg, halve):
        k = Mixture(((Deterministic(sqneg), 1.0), (Deterministic(halve), 1.0)))
        with pytest.raises(SpecError):
            base_map(k)

    def test_base_map_shared(self, sqneg):
        k = Mixture(((Deterministic(sqneg), 1.0), (Gaussian(sqneg, sigma=0.1), 1.0)))
        assert base_map(k) == sqneg

    def test_zero_weights_rejected(self, sqneg):
        with pytest.raises(SpecError):
            Mixture(((Deterministic(sqneg), 0.0),))


class TestOperator:
    def test_compression_cap_respected(self, pitchfork):
        op = MWOperator(Gaussian(pitchfork, sigma=0.1), compression_cap=20)
        out, bound = apply_kernel_tracked(op, uniform_grid_measure(-2.0, 2.0, 30))
        assert out.size <= 20
        assert abs(out.weights.sum() - 1.0) <= 1e-12
        assert bound > 0.0

    def test_uncapped_has_no_cost(self, pitchfork):
        op = MWOperator(Gaussian(pitchfork, sigma=0.1, n_quantiles=4))
        out, bound = apply_kernel_tracked(op, uniform_grid_measure(-2.0, 2.0, 5))
        assert out.size == 20
        assert bound == 0.0

    @pytest.mark.parametrize("t", [0.0, 0.3, 0.5, 1.0])
    def test_linear_on_mixtures(self, pitchfork, random_measure, t):
        mu = random_measure(5, 1, scale=3.0)
        nu = random_measure(4, 1, scale=3.0)
        for kernel in (
            Gaussian(pitchfork, sigma=0.2, n_quantiles=8),
            Collapse(pitchfork, x0=(0.0,), epsilon=0.5),
            Mixture(((Deterministic(pitchfork), 1.0), (BoundedUniform(pitchfork, radius=0.3, n_points=3), 2.0))),
        ):
            op = MWOperator(kernel)
            assert op.compression_cap is None
            lhs = apply_kernel(op, mix(mu, nu, t))
            rhs = mix(apply_kernel(op, mu), apply_kernel(op, nu), t)
            assert lhs.allclose(rhs, atol=1e-12)

    def test_default_cap_from_settings(self, monkeypatch, sqneg):
        monkeypatch.setenv("WASSDYN_COMPRESSION_CAP", "7")
        get_settings.cache_clear()
        assert MWOperator.with_default_cap(Deterministic(sqneg)).compression_cap == 7

    def test_dimension_mismatch(self, sqneg):
        with pytest.raises(DimensionMismatchError):
            apply_kernel(MWOperator(Deterministic(sqneg)), dirac([0.0, 0.0]))

    @pytest.mark.parametrize("p", [1.0, 2.0])
    def test_gap_below_integrated_noise(self, pitchfork, random_measure, p):
        mu = random_measure(6, 1, scale=3.0)
        for kernel in (
            Gaussian(pitchfork, sigma=0.3, n_quantiles=8),
            BoundedUniform(pitchfork, radius=0.2, n_points=5),
            Collapse(pitchfork, x0=(0.0,), epsilon=0.5, p=p),
        ):
            op = MWOperator(kernel, p=p)
            gap = operator_gap(op, pitchfork, mu)
            assert gap <= integrated_noise(op, pitchfork, mu) ** (1.0 / p) + 1e-9
