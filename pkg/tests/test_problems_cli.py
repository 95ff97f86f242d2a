import math

import pytest
import yaml

from lipcut.cli import main
from lipcut.core import NormKind
from lipcut.lipschitz import EstimateMethod
from lipcut.problems import (
    build,
    builtin_problems,
    definition_from_dict,
    get_builtin,
    load_problem_file,
)

SIN_FILE = {
    "dimension": 2,
    "bounds": [[-1.0, 1.0], [-1.0, 1.0]],
    "norm": "2",
    "image_norm": "2",
    "objective": "abs(x1 - x2) + x1",
    "objective_L": math.sqrt(5.0),
    "constraints": [{"expr": "-sin(x1) - x2", "L": math.sqrt(2.0)}],
    "global_L": math.sqrt(2.0),
    "epsilon": 1.0e-4,
}


class TestBuiltins:
    def test_catalog_has_exactly_five(self):
        catalog = builtin_problems()
        assert sorted(catalog) == [
            "bad-local", "comp-example", "comp-example-manipulated", "infeasible-1d", "sin-example",
        ]

    def test_comp_example_second_constraint(self):
        defn = get_builtin("comp-example")
        assert defn.constraints[1].expr == "-2*sin(4*x1)/sqrt(x1) + x2 - 2"
        assert defn.constraints[0].L**2 == pytest.approx(10.0)
        assert defn.constraints[1].L**2 == pytest.approx(42.83)
        assert defn.global_L**2 == pytest.approx(50.83)

    def test_manipulated_variant(self):
        defn = get_builtin("comp-example-manipulated")
        assert defn.constraints[0].expr == defn.constraints[1].expr == "cos(6*x1)/2 - x2 + 1.8"
        assert defn.constraints[0].L**2 == pytest.approx(15.0)
        assert defn.global_L**2 == pytest.approx(20.0)

    def test_builtins_carry_fixed_constants(self):
        for name in builtin_problems():
            built = build(get_builtin(name))
            assert built.estimated == {}

    def test_unknown_builtin(self):
        with pytest.raises(KeyError):
            get_builtin("nope")


class TestProblemFiles:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "sin.yaml"
        path.write_text(yaml.safe_dump(SIN_FILE))
        defn = load_problem_file(path)
        assert defn.dimension == 2
        assert defn.norm is NormKind.Two
        built = build(defn)
        assert built.problem.constraint.global_L == pytest.approx(math.sqrt(2.0))
        assert built.epsilon == pytest.approx(1e-4)

    def test_unknown_key_rejected(self):
        bad = dict(SIN_FILE, typo_key=1)
        with pytest.raises(ValueError):
            definition_from_dict(bad)

    def test_missing_key_rejected(self):
        bad = {k: v for k, v in SIN_FILE.items() if k != "objective"}
        with pytest.raises(ValueError):
            definition_from_dict(bad)

    def test_missing_L_is_estimated_with_grid(self):
        data = {k: v for k, v in SIN_FILE.items() if k not in ("global_L", "objective_L")}
        built = build(definition_from_dict(data))
        assert set(built.estimated) == {"global_L", "objective_L"}
        est = built.estimated["global_L"]
        assert est.method is EstimateMethod.JacobianGrid
        assert est.safety_factor == pytest.approx(1.05)
        assert est.value == pytest.approx(math.sqrt(2.0) * 1.05, rel=1e-3)
        # the objective contains abs: safety doubled
        assert built.estimated["objective_L"].safety_factor == pytest.approx(2.1)

    def test_constraint_mask(self):
        data = dict(SIN_FILE)
        data["constraints"] = [{"expr": "-sin(x1) - x2", "L": 1.5, "mask": [1]}]
        built = build(definition_from_dict(data))
        assert built.problem.constraint.active_mask[0].tolist() == [True, False]


class TestCliSolve:
    def test_sin_example(self, tmp_path, capsys):
        trace = tmp_path / "t.csv"
        code = main(["solve", "--builtin", "sin-example", "--eps", "1e-4",
                     "--oracle-tol", "1e-8", "--trace", str(trace)])
        out = capsys.readouterr().out
        assert code == 0
        assert "status: solved" in out
        lines = trace.read_text().splitlines()
        assert lines[0].startswith("k,x1,x2,")
        assert len(lines) == 5  # header + 4 iterations (exact oracle)

    def test_trace_determinism(self, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for p in paths:
            assert main(["solve", "--builtin", "sin-example", "--eps", "1e-4",
                         "--trace", str(p)]) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_bad_local_local_oracle(self, tmp_path):
        trace = tmp_path / "bad.csv"
        code = main(["solve", "--builtin", "bad-local", "--oracle", "local",
                     "--start", "-1", "--max-iters", "20", "--trace", str(trace)])
        assert code == 3  # iteration limit
        rows = trace.read_text().splitlines()[1:]
        xs = [float(r.split(",")[1]) for r in rows]
        assert len(xs) == 20
        for prev, cur in zip(xs, xs[1:]):
            assert cur == pytest.approx(prev - prev**3 / 3.0, abs=1e-5)

    def test_bad_local_global_oracle(self, capsys):
        code = main(["solve", "--builtin", "bad-local", "--oracle", "global"])
        out = capsys.readouterr().out
        assert code == 0
        final = [l for l in out.splitlines() if l.startswith("final point:")][0]
        assert float(final.split(":")[1]) == pytest.approx(1.0, abs=1e-6)

    def test_infeasible_exit_code(self):
        assert main(["solve", "--builtin", "infeasible-1d"]) == 2

    def test_component_mode_flag(self, capsys):
        code = main(["solve", "--builtin", "comp-example", "--mode", "component",
                     "--max-iters", "3"])
        assert code == 3

    def test_error_exit_code(self, capsys):
        assert main(["solve", "--problem", "/nonexistent/file.yaml"]) == 1

    def test_exit_code_contract_over_all_builtins(self):
        # 0 solved / 2 infeasible / 3 iteration limit, nothing else
        expected = {
            "sin-example": 0,
            "bad-local": 0,
            "comp-example": 3,
            "comp-example-manipulated": 3,
            "infeasible-1d": 2,
        }
        for name, code in expected.items():
            assert main(["solve", "--builtin", name, "--max-iters", "4"]) == code, name

    def test_sampling_refused_without_flag(self, tmp_path, capsys):
        data = {k: v for k, v in SIN_FILE.items() if k != "global_L"}
        path = tmp_path / "p.yaml"
        path.write_text(yaml.safe_dump(data))
        assert main(["solve", "--problem", str(path), "--lipschitz-method", "sampling"]) == 1
        err = capsys.readouterr().err
        assert "allow-heuristic-L" in err

    def test_sampling_allowed_with_flag(self, tmp_path, capsys):
        data = {k: v for k, v in SIN_FILE.items() if k != "global_L"}
        path = tmp_path / "p.yaml"
        path.write_text(yaml.safe_dump(data))
        code = main(["solve", "--problem", str(path), "--lipschitz-method", "sampling",
                     "--allow-heuristic-L", "--seed", "4"])
        assert code in (0, 3)
        captured = capsys.readouterr()
        assert "estimated global_L" in captured.out
        assert "heuristic" in captured.err

    def test_normalize_flag(self):
        assert main(["solve", "--builtin", "sin-example", "--normalize",
                     "--eps", "5e-5"]) == 0

    def test_threads_flag(self):
        assert main(["solve", "--builtin", "bad-local", "--threads", "2"]) == 0


class TestCliBounds:
    def test_infeasible_1d_packing_bound(self, capsys):
        code = main(["bounds", "--builtin", "infeasible-1d", "--delta", "1"])
        out = capsys.readouterr().out
        assert code == 0
        line = [l for l in out.splitlines() if "packing bound" in l][0]
        assert float(line.split(":")[1]) == pytest.approx(5.0)

    def test_lattice_bound(self, tmp_path, capsys):
        data = dict(SIN_FILE)
        data.update(
            dimension=2, bounds=[[0.0, 3.0], [0.0, 2.0]], integral=[True, True],
            objective="x1 + x2", objective_L=2.0,
            constraints=[{"expr": "x1 - 10", "L": 1.0}], global_L=1.0,
        )
        path = tmp_path / "lattice.yaml"
        path.write_text(yaml.safe_dump(data))
        code = main(["bounds", "--problem", str(path), "--delta", "0.5"])
        out = capsys.readouterr().out
        assert code == 0
        line = [l for l in out.splitlines() if "packing bound" in l][0]
        assert "lattice-count" in line
        assert float(line.split(":")[1]) == 12.0

    def test_complexity_bounds(self, capsys):
        code = main(["bounds", "--builtin", "sin-example", "--eps", "0.1", "--c", "1.0"])
        out = capsys.readouterr().out
        assert code == 0
        rho = math.sqrt(2.0)
        upper = [l for l in out.splitlines() if "complexity upper" in l][0]
        assert float(upper.split(":")[1]) == pytest.approx(((2 * rho + 0.1) / 0.1) ** 2)
        lower = [l for l in out.splitlines() if "complexity lower" in l][0]
        assert float(lower.split(":")[1].split("(")[0]) == pytest.approx(
            (1.0 / (math.sqrt(2.0) * 0.1)) ** 2
        )

    def test_requires_delta_or_eps(self, capsys):
        assert main(["bounds", "--builtin", "sin-example"]) == 1


class TestCliEstimate:
    def test_sin_example_grid(self, capsys):
        code = main(["estimate-lipschitz", "--builtin", "sin-example", "--method", "grid"])
        out = capsys.readouterr().out
        assert code == 0
        line = [l for l in out.splitlines() if l.startswith("constraint 1")][0]
        value = float(line.split("L = ")[1].split(" ")[0])
        assert value == pytest.approx(math.sqrt(2.0), abs=1e-3)

    def test_comp_example_prints_squares(self, capsys):
        code = main(["estimate-lipschitz", "--builtin", "comp-example", "--grid", "128"])
        out = capsys.readouterr().out
        assert code == 0
        assert "L^2 = " in out
        first = [l for l in out.splitlines() if l.startswith("constraint 1")][0]
        l1_sq = float(first.split("L^2 = ")[1].split(")")[0])
        assert l1_sq == pytest.approx(10.0, rel=0.02)

    def test_constant_constraint_sampling_floor(self, tmp_path, capsys):
        data = dict(SIN_FILE)
        data["constraints"] = [{"expr": "0*x1 - 1", "L": 1.0}]
        path = tmp_path / "const.yaml"
        path.write_text(yaml.safe_dump(data))
        with pytest.warns(UserWarning):
            code = main(["estimate-lipschitz", "--problem", str(path),
                         "--method", "sampling", "--pairs", "50"])
        assert code == 0
        out = capsys.readouterr().out
        line = [l for l in out.splitlines() if l.startswith("constraint 1")][0]
        assert float(line.split("L = ")[1].split(" ")[0]) == pytest.approx(1e-12)


class TestCliEmitMilp:
    def test_two_cuts_from_flags(self, tmp_path, capsys):
        out_path = tmp_path / "cuts.lp"
        code = main(["emit-milp", "--builtin", "sin-example", "--norm", "1",
                     "--cut", "0,0;1", "--cut", "0.5,0.5;0.25", "--out", str(out_path)])
        assert code == 0
        text = out_path.read_text()
        rows = [l for l in text.splitlines() if l.lstrip().startswith("cut")]
        assert len(rows) == 22  # 11 per 1-norm cut
        printed = capsys.readouterr().out
        assert "4 binaries" in printed

    def test_cuts_from_trace(self, tmp_path):
        trace = tmp_path / "t.csv"
        assert main(["solve", "--builtin", "sin-example", "--eps", "1e-4",
                     "--trace", str(trace)]) == 0
        out_path = tmp_path / "from_trace.lp"
        assert main(["emit-milp", "--builtin", "sin-example", "--norm", "inf",
                     "--trace", str(trace), "--out", str(out_path)]) == 0
        text = out_path.read_text()
        # 3 cutting iterations -> 3 inf-norm systems of 9n+2 = 20 rows
        rows = [l for l in text.splitlines() if l.lstrip().startswith("cut")]
        assert len(rows) == 60

    def test_zero_cuts(self, tmp_path):
        out_path = tmp_path / "empty.lp"
        assert main(["emit-milp", "--builtin", "sin-example", "--norm", "1",
                     "--out", str(out_path)]) == 0
        text = out_path.read_text()
        assert "Bounds" in text and "cut0" not in text

    def test_bad_cut_flag(self, tmp_path):
        assert main(["emit-milp", "--builtin", "sin-example", "--norm", "1",
                     "--cut", "garbage", "--out", str(tmp_path / "x.lp")]) == 1
