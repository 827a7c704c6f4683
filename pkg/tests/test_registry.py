"""Tests for the map/kernel spec-string grammar and the builtin table."""

import pytest

from wassdyn.config import get_settings
from wassdyn.dynamics import Composition, Expression, Identity, Ode, PitchforkTime1, SquareNegative
from wassdyn.errors import ParseError, SpecError
from wassdyn.noise import BoundedUniform, Collapse, Deterministic, Gaussian, Mixture, UniformCollapse
from wassdyn.registry import BUILTINS, get_builtin, list_builtins, parse_kernel, parse_map, parse_point


class TestParseMap:
    def test_pitchfork(self):
        f = parse_map("pitchfork")
        assert isinstance(f, PitchforkTime1)
        assert f.describe() == "pitchfork"

    def test_pitchfork_step(self):
        assert parse_map("pitchfork:h=0.01").step == 0.01
        assert parse_map("pitchfork:0.01").step == 0.01

    def test_pitchfork_step_from_settings(self, monkeypatch):
        monkeypatch.setenv("WASSDYN_RK4_STEP", "0.125")
        get_settings.cache_clear()
        assert parse_map("pitchfork").step == 0.125

    def test_simple_maps(self):
        assert isinstance(parse_map("sqneg"), SquareNegative)
        assert parse_map("affine:2,1").describe() == "affine:2.0,1.0"
        assert parse_map("id") == Identity(1)
        assert parse_map("identity:3").dim == 3

    def test_expression_maps(self):
        f = parse_map("expr:x2, -x1")
        assert isinstance(f, Expression)
        assert f.dim == 2
        assert isinstance(parse_map("ode:x - x^3"), Ode)

    def test_composition(self):
        f = parse_map("sqneg >> affine:0.5,0")
        assert isinstance(f, Composition)
        assert f.describe() == "sqneg >> affine:0.5,0.0"

    def test_describe_reparses(self):
        for spec in ("pitchfork", "sqneg", "affine:0.5,0.25", "id", "identity:2", "sqneg >> id"):
            f = parse_map(spec)
            assert parse_map(f.describe()).describe() == f.describe()

    @pytest.mark.parametrize(
        "spec",
        ["", "   ", "foo", "affine:1", "affine:a,b", "pitchfork:k=0.1", "pitchfork:h=2", "identity:0", "sqneg >> "],
    )
    def test_errors(self, spec):
        with pytest.raises(SpecError):
            parse_map(spec)

    def test_expression_errors_carry_offset(self):
        with pytest.raises(ParseError) as info:
            parse_map("expr:x + ")
        assert info.value.offset == 4


class TestParseKernel:
    def test_gauss(self):
        k = parse_kernel("gauss(pitchfork, sigma=0.1)")
        assert isinstance(k, Gaussian)
        assert k.sigma == 0.1
        assert k.n_quantiles == 64

    def test_gauss_with_options_and_comma_map(self):
        k = parse_kernel("gauss(affine:0.5,0, sigma=0.2, n=16)")
        assert isinstance(k, Gaussian)
        assert k.f.describe() == "affine:0.5,0.0"
        assert k.n_quantiles == 16

    def test_det_and_ball(self):
        assert parse_kernel("det(sqneg)") == Deterministic(SquareNegative())
        k = parse_kernel("ball(sqneg, r=0.5)")
        assert isinstance(k, BoundedUniform)
        assert (k.radius, k.n_points) == (0.5, 16)

    def test_collapse_defaults(self):
        k = parse_kernel("collapse(pitchfork, eps=0.5)")
        assert isinstance(k, Collapse)
        assert k.x0 == (0.0,)
        assert k.p == 1.0

    def test_collapse_options(self):
        k = parse_kernel("collapse(id, eps=0.5, x0=2, p=2)")
        assert (k.x0, k.epsilon, k.p) == ((2.0,), 0.5, 2.0)
        k2 = parse_kernel("collapse(identity:2, eps=0.1, x0=[1,2])")
        assert k2.x0 == (1.0, 2.0)

    def test_uniform_collapse(self):
        k = parse_kernel("ucollapse(id, eps=0.1)")
        assert isinstance(k, UniformCollapse)

    def test_mixture(self):
        k = parse_kernel("mix(det(sqneg)@0.3, gauss(sqneg, sigma=0.1)@0.7)")
        assert isinstance(k, Mixture)
        assert [w for _, w in k.parts] == [0.3, 0.7]
        unweighted = parse_kernel("mix(det(id), det(id))")
        assert [w for _, w in unweighted.parts] == [1.0, 1.0]

    def test_describe_reparses(self):
        for spec in (
            "gauss(pitchfork, sigma=0.1)",
            "ball(sqneg, r=0.5, n=4)",
            "collapse(pitchfork, eps=0.5, p=1)",
            "collapse(identity:2, eps=0.1, x0=[1,2])",
            "mix(det(sqneg)@0.3, gauss(sqneg, sigma=0.1)@0.7)",
            "det(affine:0.5,0)",
        ):
            k = parse_kernel(spec)
            assert parse_kernel(k.describe()).describe() == k.describe()

    @pytest.mark.parametrize(
        "spec",
        [
            "gauss(pitchfork)",
            "gauss(pitchfork, sigma=-1)",
            "gauss(sigma=0.1)",
            "nope(id)",
            "det pitchfork",
            "det((id)",
            "mix()",
            "collapse(id, eps=2)",
            "ucollapse(id, eps=0.1, p=2)",
            "ball(id, r=abc)",
        ],
    )
    def test_errors(self, spec):
        with pytest.raises(SpecError):
            parse_kernel(spec)


class TestBuiltins:
    def test_table_entries(self):
        entries = list_builtins()
        names = {e["name"] for e in entries}
        assert {"pitchfork", "sqneg", "gauss", "collapse", "mix"} <= names
        assert all(set(e) == {"name", "kind", "syntax", "description"} for e in entries)
        assert {e["kind"] for e in entries} == {"map", "kernel"}
        assert len(entries) == len(BUILTINS)

    def test_lookup_is_case_insensitive(self):
        assert get_builtin("PITCHFORK") is BUILTINS["pitchfork"]
        assert get_builtin("nope") is None

    @pytest.mark.parametrize(
        ("text", "point"),
        [("3", (3.0,)), ("1;2", (1.0, 2.0)), ("[1, 2]", (1.0, 2.0)), (" [0.5] ", (0.5,))],
    )
    def test_parse_point(self, text, point):
        assert parse_point(text) == point

    def test_parse_point_errors(self):
        with pytest.raises(SpecError):
            parse_point("[]")
        with pytest.raises(SpecError):
            parse_point("1;x")
