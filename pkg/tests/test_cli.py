"""Tests for the command-line interface and the command handlers behind it."""

import orjson
import pytest

from wassdyn import __version__
from wassdyn.cli import create_argument_parser, main
from wassdyn.commands import builtins, distance
from wassdyn.measure import load_measure
from wassdyn.models import CommandResult, DistanceRequest


@pytest.fixture
def two_point(measure_file):
    return measure_file("two.txt", "# two atoms\n0.5 0\n0.5 1\n")


@pytest.fixture
def half(measure_file):
    return measure_file("half.txt", "1 0.5\n")


class TestParser:
    def test_no_command_prints_help(self, capsys):
        assert main([]) == 2
        assert "usage: wassdyn" in capsys.readouterr().out

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--version"])
        assert info.value.code == 0
        assert __version__ in capsys.readouterr().out

    def test_subcommands(self):
        parser = create_argument_parser()
        args = parser.parse_args(["stationary", "--kernel", "det(sqneg)", "--mu0", "m.txt", "--max-iter", "5"])
        assert (args.command, args.max_iter, args.tol) == ("stationary", 5, 1e-3)

    def test_list_builtins(self, capsys):
        assert main(["--list-builtins"]) == 0
        out = capsys.readouterr().out
        assert "pitchfork" in out
        assert "collapse_pitchfork_p1" in out


class TestDist:
    def test_prints_value(self, capsys, two_point, half):
        assert main(["dist", "--mu", str(two_point), "--nu", str(half)]) == 0
        assert capsys.readouterr().out.strip() == "0.5"

    def test_json_output(self, capsys, two_point, half):
        assert main(["--json", "dist", "--mu", str(two_point), "--nu", str(half), "--p", "2"]) == 0
        doc = orjson.loads(capsys.readouterr().out)
        assert doc["status"] == "success"
        assert doc["data"]["distance"] == pytest.approx(0.5)

    def test_plan_file(self, tmp_path, two_point, half):
        plan = tmp_path / "plans" / "plan.csv"
        assert main(["dist", "--mu", str(two_point), "--nu", str(half), "--plan", str(plan)]) == 0
        rows = [line.split(",") for line in plan.read_text(encoding="utf-8").splitlines()]
        assert [(r[0], r[1]) for r in rows] == [("0", "0"), ("1", "0")]
        assert sum(float(r[2]) for r in rows) == pytest.approx(1.0)

    def test_exact_method_plan_in_two_dimensions(self, tmp_path, measure_file):
        a = measure_file("a.txt", "0.5 0 0\n0.5 1 1\n")
        b = measure_file("b.txt", "1 0 1\n")
        plan = tmp_path / "plan.csv"
        assert main(["dist", "--mu", str(a), "--nu", str(b), "--method", "exact", "--plan", str(plan)]) == 0
        assert len(plan.read_text(encoding="utf-8").splitlines()) == 2

    def test_dimension_mismatch_is_an_error(self, capsys, two_point, measure_file):
        planar = measure_file("planar.txt", "1 0 0\n")
        assert main(["dist", "--mu", str(two_point), "--nu", str(planar)]) == 2
        err = capsys.readouterr().err
        assert "error:" in err
        assert "hint:" in err

    def test_missing_file(self, capsys, half):
        assert main(["dist", "--mu", "absent.txt", "--nu", str(half)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_invalid_order(self, capsys, two_point, half):
        assert main(["dist", "--mu", str(two_point), "--nu", str(half), "--p", "0.5"]) == 2
        assert "invalid arguments" in capsys.readouterr().err


class TestPush:
    def test_writes_image(self, tmp_path, measure_file):
        src = measure_file("src.txt", "0.5 -2\n0.5 3\n")
        out = tmp_path / "image.txt"
        assert main(["push", "--mu", str(src), "--map", "sqneg", "-o", str(out)]) == 0
        image = load_measure(out)
        assert image.mass_at(4.0) == pytest.approx(0.5)
        assert image.mass_at(0.0) == pytest.approx(0.5)
        assert out.read_text(encoding="utf-8").startswith("# push-forward of")

    def test_bad_map(self, capsys, tmp_path, two_point):
        assert main(["push", "--mu", str(two_point), "--map", "warp", "-o", str(tmp_path / "x.txt")]) == 2
        assert "--list-builtins" in capsys.readouterr().err


class TestStationary:
    def test_converges_and_writes_json(self, tmp_path, measure_file):
        grid = measure_file("grid.txt", "".join(f"1 {x}\n" for x in (-2, -1, 0, 1, 2)))
        out = tmp_path / "result.json"
        code = main(["stationary", "--kernel", "det(sqneg)", "--mu0", str(grid), "--tol", "1e-9", "-o", str(out)])
        assert code == 0
        doc = orjson.loads(out.read_bytes())
        assert doc["converged"] is True
        assert doc["iterations"] == 3
        assert doc["kernel"] == "det(sqneg)"
        assert doc["measure"] == [[1.0, 0.0]]

    def test_budget_exhausted_is_failure(self, capsys, measure_file):
        start = measure_file("start.txt", "1 1\n")
        code = main(["stationary", "--kernel", "det(affine:0.5,0)", "--mu0", str(start), "--max-iter", "1"])
        assert code == 1
        assert "no convergence" in capsys.readouterr().out

    def test_bad_kernel(self, measure_file):
        start = measure_file("start.txt", "1 1\n")
        assert main(["stationary", "--kernel", "gauss(sqneg)", "--mu0", str(start)]) == 2


class TestExperiment:
    def test_builtin_config(self, capsys, tmp_path):
        out = tmp_path / "reports"
        assert main(["experiment", "--config", "builtin:local_compactness", "-o", str(out)]) == 0
        assert "all 2 verdicts passed" in capsys.readouterr().out
        report = orjson.loads((out / "local_compactness.json").read_bytes())
        assert report["kind"] == "local_compactness"
        assert (out / "local_compactness__sequence.csv").is_file()

    def test_unknown_config(self, capsys):
        assert main(["experiment", "--config", "builtin:nope"]) == 2
        assert "unknown builtin" in capsys.readouterr().err

    def test_failed_verdicts_exit_one(self, capsys, tmp_path):
        cfg = tmp_path / "strict.yaml"
        cfg.write_text(
            "name: strict\nkind: custom\nseed: 0\nkernel: det(affine:0.5,0)\n"
            "mu0: {dirac: [1.0]}\nbudgets: {max_iter: 2}\nexpect: {max_residual: 1.0e-9}\n",
            encoding="utf-8",
        )
        assert main(["experiment", "--config", str(cfg), "-o", str(tmp_path / "r")]) == 1
        out = capsys.readouterr().out
        assert "1 of" in out
        assert "FAILED stationary-residual" in out


class TestHandlers:
    def test_result_exit_codes(self):
        assert CommandResult(status="success", message="").exit_code == 0
        assert CommandResult(status="failed", message="").exit_code == 1
        assert CommandResult(status="error", message="").exit_code == 2

    def test_distance_handler(self, two_point, half):
        result = distance(DistanceRequest(mu=str(two_point), nu=str(half), method="dual"))
        assert result.status == "success"
        assert result.data["distance"] == pytest.approx(0.5)

    def test_builtins_payload(self):
        data = builtins().data
        assert {"builtins", "configs"} == set(data)
        assert all("syntax" in entry for entry in data["builtins"])
