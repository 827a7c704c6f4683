"""Tests for discrete measures: construction, moments, mixing, compression, tail mass, files."""

from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wassdyn.errors import DimensionMismatchError, MeasureConstructionError, MeasureValidationError
from wassdyn.measure import (
    barycenter,
    compress,
    dirac,
    distance_to_set,
    empirical_measure,
    load_measure,
    measure_from_json,
    mix,
    moment_p,
    new_measure,
    parse_measure_text,
    save_measure,
    support_diameter,
    tail_mass,
    uniform_grid_measure,
)
from wassdyn.transport import wasserstein, wasserstein_exact

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
weight = st.one_of(st.just(0.0), st.floats(min_value=1e-6, max_value=10.0))


class TestConstruction:
    def test_valid_two_atoms(self):
        mu = new_measure([(0, 0.5), (1, 0.5)])
        assert mu.size == 2
        np.testing.assert_allclose(mu.weights, [0.5, 0.5])

    def test_duplicates_merge(self):
        mu = new_measure([(0, 1.0), (0, 1.0)])
        assert mu.size == 1
        assert mu.weights[0] == pytest.approx(1.0)

    def test_renormalizes(self):
        mu = new_measure([(0, 3.0), (1, 1.0)])
        np.testing.assert_allclose(mu.weights, [0.75, 0.25])

    def test_zero_weights_dropped(self):
        mu = new_measure([(0, 0.0), (2, 1.0)])
        assert mu.size == 1
        assert mu.locations[0, 0] == 2.0

    def test_empty_rejected(self):
        with pytest.raises(MeasureConstructionError):
            new_measure([])

    def test_all_zero_rejected(self):
        with pytest.raises(MeasureConstructionError):
            new_measure([(0, 0.0), (1, 0.0)])

    @pytest.mark.parametrize("atoms", [[(float("nan"), 1.0)], [(0.0, float("inf"))], [(0.0, -0.5), (1.0, 1.0)]])
    def test_invalid_values_rejected(self, atoms):
        with pytest.raises(MeasureValidationError):
            new_measure(atoms)

    def test_mixed_dimensions_rejected(self):
        with pytest.raises(MeasureValidationError):
            new_measure([(0.0, 0.5), ((0.0, 1.0), 0.5)])

    def test_arrays_are_read_only(self):
        mu = new_measure([(0, 1.0)])
        with pytest.raises(ValueError):
            mu.weights[0] = 2.0

    @given(st.lists(st.tuples(finite, weight), min_size=1, max_size=30))
    @settings(max_examples=200)
    def test_construction_invariants(self, atoms):
        if not any(w > 0 for _, w in atoms):
            with pytest.raises(MeasureConstructionError):
                new_measure(atoms)
            return
        mu = new_measure(atoms)
        assert np.all(mu.weights > 0)
        assert abs(mu.weights.sum() - 1.0) <= 1e-12
        assert mu.dim == 1


class TestMoments:
    def test_dirac_distance(self):
        assert moment_p(dirac(2.0), 0.0, 1.0) == pytest.approx(2.0)

    def test_symmetric_two_point(self):
        assert moment_p(new_measure([(0, 0.5), (1, 0.5)]), 0.5, 1.0) == pytest.approx(0.5)

    @pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
    def test_two_point_sequence(self, p):
        m, xn, x0 = 0.01, 7.0, 1.0
        mu = mix(dirac(xn), dirac(x0), m)
        assert moment_p(mu, x0, p) == pytest.approx(m * abs(xn - x0) ** p)

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0])
    def test_matches_exact_distance_to_dirac(self, random_measure, p):
        mu = random_measure(12, 2)
        exact, _ = wasserstein_exact(mu, dirac([0.3, -0.2]), p)
        assert moment_p(mu, [0.3, -0.2], p) ** (1.0 / p) == pytest.approx(exact, abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            moment_p(dirac(0.0), [0.0, 0.0], 1.0)

    def test_p_below_one_rejected(self):
        with pytest.raises(MeasureValidationError):
            moment_p(dirac(0.0), 0.0, 0.5)


class TestMix:
    def test_endpoint_zero_is_second(self):
        mu, nu = dirac(0.0), new_measure([(3, 0.5), (4, 0.5)])
        assert mix(mu, nu, 0.0).allclose(nu)

    def test_definition(self):
        out = mix(dirac(0.0), dirac(1.0), 0.25)
        assert out.mass_at(1.0) == pytest.approx(0.75)
        assert out.mass_at(0.0) == pytest.approx(0.25)

    def test_shared_locations_merge(self):
        out = mix(new_measure([(0, 0.5), (1, 0.5)]), dirac(1.0), 0.5)
        assert out.size == 2
        assert out.mass_at(1.0) == pytest.approx(0.75)

    @pytest.mark.parametrize("t", [-0.1, 1.5, float("nan")])
    def test_out_of_range(self, t):
        with pytest.raises(MeasureValidationError):
            mix(dirac(0.0), dirac(1.0), t)

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    @settings(max_examples=100)
    def test_nested_mix_bookkeeping(self, t, s):
        mu, nu = dirac(-1.0), dirac(1.0)
        out = mix(mix(mu, nu, t), nu, s)
        assert out.mass_at(-1.0) == pytest.approx(t * s, abs=1e-12)


class TestCompress:
    def test_under_cap_is_identity(self):
        out, bound = compress(dirac(0.0), 10)
        assert out.allclose(dirac(0.0))
        assert bound == 0.0

    def test_two_atoms_to_one(self):
        out, bound = compress(new_measure([(0, 0.5), (2, 0.5)]), 1, p=1.0)
        assert out.allclose(dirac(1.0))
        assert bound == pytest.approx(1.0)

    @pytest.mark.parametrize("p", [1.0, 2.0])
    def test_bound_dominates_exact_distance(self, random_measure, p):
        for _ in range(10):
            mu = random_measure(12, 2)
            out, bound = compress(mu, 4, p)
            assert out.size <= 4
            assert abs(out.weights.sum() - 1.0) <= 1e-12
            exact, _ = wasserstein_exact(mu, out, p)
            assert bound >= exact - 1e-9

    def test_preserves_barycenter(self, random_measure):
        mu = random_measure(40, 1)
        out, _ = compress(mu, 5)
        np.testing.assert_allclose(barycenter(out), barycenter(mu), atol=1e-12)

    def test_large_support_is_prebinned(self, rng):
        mu = new_measure([(x, 1.0) for x in rng.normal(size=1000)])
        out, bound = compress(mu, 100)
        assert out.size <= 100
        exact = wasserstein(mu, out, 1.0)
        assert bound >= exact - 1e-9

    def test_invalid_cap(self):
        with pytest.raises(MeasureValidationError):
            compress(dirac(0.0), 0)


class TestTailMass:
    def test_all_inside(self):
        assert tail_mass(dirac(0.0), [0.0], 1.0) == 0.0

    def test_one_atom_outside(self):
        assert tail_mass(new_measure([(0, 0.5), (5, 0.5)]), [0.0], 2.0) == pytest.approx(0.5)

    def test_chebyshev_tightness(self, random_measure):
        for _ in range(50):
            mu = random_measure(20, 1, scale=5.0)
            m1 = moment_p(mu, 0.0, 1.0)
            for radius in (0.5, 1.0, 2.0, 4.0):
                assert tail_mass(mu, [0.0], radius) <= m1 / radius + 1e-12

    def test_monotone_in_radius(self, random_measure):
        mu = random_measure(30, 2)
        tails = [tail_mass(mu, [[0.0, 0.0]], r) for r in np.linspace(0.0, 4.0, 17)]
        assert all(b <= a for a, b in zip(tails, tails[1:], strict=False))

    def test_negative_radius(self):
        with pytest.raises(MeasureValidationError):
            tail_mass(dirac(0.0), [0.0], -1.0)


class TestHelpers:
    def test_distance_to_set(self):
        d = distance_to_set([[0.0], [2.5], [-4.0]], [[-1.0], [1.0]])
        np.testing.assert_allclose(d, [1.0, 1.5, 3.0])

    def test_support_diameter(self):
        assert support_diameter(uniform_grid_measure(-3.0, 3.0, 10)) == pytest.approx(6.0)
        assert support_diameter(dirac([1.0, 2.0])) == 0.0

    def test_empirical_measure_is_seeded(self, random_measure):
        mu = random_measure(50, 1)
        a = empirical_measure(mu, 20, seed=3)
        b = empirical_measure(mu, 20, seed=3)
        assert a.allclose(b)
        assert a.size <= 20
        assert set(map(float, a.locations[:, 0])) <= set(map(float, mu.locations[:, 0]))


class TestFileFormat:
    def test_parse_with_comments(self):
        mu = parse_measure_text("# header\n0.5 0 0  # origin\n\n0.5 1 1\n")
        assert mu.dim == 2
        assert mu.size == 2

    def test_parse_error_carries_line(self):
        with pytest.raises(MeasureValidationError, match=":2:"):
            parse_measure_text("1 0\nabc 1\n", source="m.txt")

    def test_save_and_load(self, tmp_path: Path, random_measure):
        mu = random_measure(8, 3)
        path = save_measure(mu, tmp_path / "sub" / "mu.txt", header="random")
        assert path.read_text(encoding="utf-8").startswith("# random\n")
        assert load_measure(path).allclose(mu)

    @pytest.mark.parametrize(
        ("doc", "size"),
        [
            ([[0.5, 0.0], [0.5, 1.0]], 2),
            ({"dirac": [2.0]}, 1),
            ({"uniform_grid": {"low": -3, "high": 3, "n": 10}}, 10),
            ({"uniform": [[0.0], [1.0], [2.0]]}, 3),
        ],
    )
    def test_inline_documents(self, doc, size):
        assert measure_from_json(doc).size == size

    def test_inline_unknown(self):
        with pytest.raises(MeasureValidationError):
            measure_from_json({"gaussian": 1})
