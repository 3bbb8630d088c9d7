import json
import math

import pytest

from booksis.cli import (
    EXIT_DOMAIN,
    EXIT_INPUT,
    EXIT_PASS,
    EXIT_TOLERANCE,
    build_adapter,
    compare_scenario,
    load_scenario,
    main,
    run_scenario,
)
from booksis.errors import ScenarioError


def write_scenario(tmp_path, name="scen.json", **overrides):
    doc = {
        "model": "sis-constant",
        "coefficients": {"rho0": "1"},
        "initial": {"chart": "qp", "values": [2.0 / 3.0, 3.0]},
        "grid": {"t_start": 0.0, "t_end": 5.0, "n_samples": 101},
    }
    doc.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def deformed_book_doc(z=0.01, t_end=3.0, n=31):
    return {
        "model": "deformed-book",
        "coefficients": {"bA": "0.5 + 0.3*sin(t)", "bB": "0.5"},
        "z": z,
        "initial": {"chart": "xy", "values": [0.4, 0.8]},
        "grid": {"t_start": 0.0, "t_end": t_end, "n_samples": n},
    }


class TestLoadScenario:
    def test_round_trip(self, tmp_path):
        path = write_scenario(tmp_path)
        scenario = load_scenario(path)
        assert scenario.model == "sis-constant"
        assert scenario.a == 0.0
        assert scenario.n_samples == 101

    def test_rejects_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ScenarioError):
            load_scenario(path)

    def test_rejects_unknown_model(self, tmp_path):
        path = write_scenario(tmp_path, model="sir")
        with pytest.raises(ScenarioError):
            load_scenario(path)

    def test_rejects_wrong_chart(self, tmp_path):
        path = write_scenario(
            tmp_path, initial={"chart": "xy", "values": [1.0, 2.0]}
        )
        with pytest.raises(ScenarioError):
            load_scenario(path)

    def test_rejects_unknown_field(self, tmp_path):
        path = write_scenario(tmp_path, plot=True)
        with pytest.raises(ScenarioError):
            load_scenario(path)

    def test_rejects_mismatched_base_point(self, tmp_path):
        path = write_scenario(tmp_path, a=1.0)
        with pytest.raises(ScenarioError):
            load_scenario(path)

    def test_rejects_z_on_classical_model(self, tmp_path):
        path = write_scenario(tmp_path, z=0.5)
        with pytest.raises(ScenarioError):
            load_scenario(path)

    def test_rejects_bad_coefficient_key(self, tmp_path):
        path = write_scenario(tmp_path, coefficients={"rho0": "1", "bA": "1"})
        with pytest.raises(ScenarioError):
            load_scenario(path)

    def test_rejects_singular_initial_state(self, tmp_path):
        path = write_scenario(
            tmp_path, initial={"chart": "qp", "values": [1.0, 1.0]}
        )
        with pytest.raises(ScenarioError):
            build_adapter(load_scenario(path))


class TestRunScenario:
    def test_constant_rate_sis_passes(self, tmp_path):
        path = write_scenario(tmp_path)
        trajectory, metadata, code = run_scenario(path, out_dir=tmp_path / "out")
        assert code == EXIT_PASS
        assert metadata["max_deviation"] < 1e-6
        assert metadata["samples_evaluated"] == 101
        assert (tmp_path / "out" / "scen.csv").exists()
        assert (tmp_path / "out" / "scen.report.json").exists()
        header = (tmp_path / "out" / "scen.csv").read_text().splitlines()[0]
        assert header == "t,q,p,x,y,deviation,residual,physical"

    def test_degenerate_scenario_is_frozen(self, tmp_path):
        path = write_scenario(
            tmp_path,
            model="book-canonical",
            coefficients={"bA": "0", "bB": "0"},
            initial={"chart": "xy", "values": [1.5, -0.5]},
            grid={"t_start": 0.0, "t_end": 4.0, "n_samples": 17},
        )
        trajectory, metadata, code = run_scenario(path)
        assert code == EXIT_PASS
        for s in trajectory.samples:
            assert s.state[0] == pytest.approx(1.5, abs=1e-12)
            assert s.state[1] == pytest.approx(-0.5, abs=1e-12)

    def test_window_exit_gives_exit_code_3(self, tmp_path):
        # z*c1 > 0 with the grid crossing t_max = ln 2
        doc = {
            "model": "deformed-book",
            "coefficients": {"bA": "1", "bB": "1"},
            "z": 1.0,
            "initial": {"chart": "xy", "values": [math.log(2.0), 1.0]},
            "grid": {"t_start": 0.0, "t_end": 2.0, "n_samples": 41},
        }
        path = tmp_path / "window.json"
        path.write_text(json.dumps(doc))
        trajectory, metadata, code = run_scenario(path, out_dir=tmp_path / "out")
        assert code == EXIT_DOMAIN
        assert metadata["domain_exit"] is not None
        # x0 = ln 2 with z = 1 gives c1 = 1 - e^{-ln 2} = 0.5: t_max = ln 2
        assert metadata["validity_t_max"] == pytest.approx(math.log(2.0), abs=1e-9)
        report = json.loads((tmp_path / "out" / "window.report.json").read_text())
        assert report["validity_t_max"] == pytest.approx(math.log(2.0), abs=1e-9)
        # evaluated samples stop strictly below t_max
        assert all(s.t < metadata["validity_t_max"] for s in trajectory.samples)

    def test_tolerance_violation_gives_exit_code_1(self, tmp_path):
        path = write_scenario(tmp_path, tolerances={"deviation": 1e-18})
        _, metadata, code = run_scenario(path)
        assert code == EXIT_TOLERANCE
        assert metadata["result"] == "tolerance-violation"

    def test_moments_model(self, tmp_path):
        path = write_scenario(
            tmp_path,
            model="moments",
            coefficients={"rho0": "1"},
            initial={"chart": "moments", "values": [2.0 / 3.0, 1.0 / 9.0]},
            grid={"t_start": 0.0, "t_end": 3.0, "n_samples": 31},
        )
        trajectory, metadata, code = run_scenario(path)
        assert code == EXIT_PASS
        assert metadata["max_deviation"] < 1e-6
        # mean relaxes toward the equilibrium density
        assert trajectory.samples[-1].state[0] == pytest.approx(1.0, abs=0.05)

    def test_seasonal_sis(self, tmp_path):
        path = write_scenario(
            tmp_path,
            model="sis",
            coefficients={"rho0": "1 + 0.5*sin(t)", "b": "1"},
            initial={"chart": "qp", "values": [2.0 / 3.0, 3.0]},
        )
        _, metadata, code = run_scenario(path)
        assert code == EXIT_PASS
        assert metadata["max_deviation"] < 1e-6
        assert metadata["max_residual"] < 1e-5

    def test_fixed_method(self, tmp_path):
        path = write_scenario(
            tmp_path,
            grid={"t_start": 0.0, "t_end": 2.0, "n_samples": 21},
        )
        _, metadata, code = run_scenario(path, method="fixed")
        assert code == EXIT_PASS
        assert metadata["max_deviation"] < 1e-6

    def test_deterministic_outputs(self, tmp_path):
        path = write_scenario(tmp_path, seed=7)
        run_scenario(path, out_dir=tmp_path / "a")
        run_scenario(path, out_dir=tmp_path / "b")
        assert (tmp_path / "a" / "scen.csv").read_bytes() == \
            (tmp_path / "b" / "scen.csv").read_bytes()
        assert (tmp_path / "a" / "scen.report.json").read_bytes() == \
            (tmp_path / "b" / "scen.report.json").read_bytes()

    def test_csv_columns_reload_consistently(self, tmp_path):
        path = write_scenario(tmp_path)
        trajectory, _, _ = run_scenario(path, out_dir=tmp_path / "out")
        lines = (tmp_path / "out" / "scen.csv").read_text().splitlines()
        rows = [line.split(",") for line in lines[1:]]
        assert len(rows) == len(trajectory.samples)
        for row, sample in zip(rows, trajectory.samples):
            # repr round-trip: the stored text parses back to the exact value
            assert float(row[0]) == sample.t
            assert float(row[1]) == sample.state[0]
            assert float(row[2]) == sample.state[1]
            assert abs(float(row[5]) - sample.deviation) <= 1e-12
            assert abs(float(row[6]) - sample.residual) <= 1e-12
            assert row[7] == ("1" if sample.physical else "0")

    def test_residual_recomputation_matches(self, tmp_path):
        path = write_scenario(tmp_path)
        run_scenario(path, out_dir=tmp_path / "out")
        lines = (tmp_path / "out" / "scen.csv").read_text().splitlines()
        stored = [float(line.split(",")[6]) for line in lines[1:]]
        trajectory, _, _ = run_scenario(path)  # independent recomputation
        for value, sample in zip(stored, trajectory.samples):
            assert abs(value - sample.residual) <= 1e-12


class TestCompare:
    def test_orders(self, tmp_path):
        path = tmp_path / "deformed.json"
        path.write_text(json.dumps(deformed_book_doc()))
        rows, code = compare_scenario(path, [1e-2, 5e-3, 2.5e-3])
        assert code == EXIT_PASS
        for row in rows[:-1]:
            # deviation from classical is first order, the truncation
            # residual second order in z
            assert 0.8 <= row["deviation_order"] <= 1.2
            assert 1.8 <= row["residual_order"] <= 2.2

    def test_zero_z_rows_identical(self, tmp_path):
        path = tmp_path / "deformed.json"
        path.write_text(json.dumps(deformed_book_doc()))
        rows, _ = compare_scenario(path, [0.0])
        assert rows[0]["deviation_vs_classical"] <= 1e-12
        assert rows[0]["first_order_residual"] <= 1e-12

    def test_rejects_classical_scenario(self, tmp_path):
        path = write_scenario(tmp_path)
        with pytest.raises(ScenarioError):
            compare_scenario(path, [1e-2])

    def test_csv_output(self, tmp_path):
        path = tmp_path / "deformed.json"
        path.write_text(json.dumps(deformed_book_doc()))
        compare_scenario(path, [1e-2, 5e-3], out_dir=tmp_path / "out")
        text = (tmp_path / "out" / "deformed.compare.csv").read_text()
        assert text.splitlines()[0] == (
            "z,deviation_vs_classical,deviation_order,"
            "first_order_residual,residual_order"
        )


class TestMainEntryPoint:
    def test_run_pass(self, tmp_path, capsys):
        path = write_scenario(tmp_path)
        code = main(["run", str(path), "--output", str(tmp_path / "out")])
        assert code == EXIT_PASS
        assert "pass" in capsys.readouterr().out

    def test_run_missing_file(self, tmp_path, capsys):
        code = main(["run", str(tmp_path / "nope.json")])
        assert code == EXIT_INPUT

    def test_run_invalid_scenario(self, tmp_path, capsys):
        path = write_scenario(tmp_path, model="sir")
        assert main(["run", str(path)]) == EXIT_INPUT

    def test_run_window_exit(self, tmp_path, capsys):
        doc = {
            "model": "deformed-book",
            "coefficients": {"bA": "1", "bB": "1"},
            "z": 1.0,
            "initial": {"chart": "xy", "values": [math.log(2.0), 1.0]},
            "grid": {"t_start": 0.0, "t_end": 2.0, "n_samples": 21},
        }
        path = tmp_path / "w.json"
        path.write_text(json.dumps(doc))
        assert main(["run", str(path)]) == EXIT_DOMAIN

    def test_window_verb(self, tmp_path, capsys):
        doc = deformed_book_doc(z=1.0)
        doc["coefficients"] = {"bA": "1", "bB": "1"}
        doc["initial"] = {"chart": "xy", "values": [math.log(2.0), 1.0]}
        path = tmp_path / "w.json"
        path.write_text(json.dumps(doc))
        assert main(["window", str(path)]) == EXIT_PASS
        out = capsys.readouterr().out
        assert "t_max=" in out
        assert f"{math.log(2.0)!r}"[:8] in out

    def test_window_verb_unbounded(self, tmp_path, capsys):
        path = tmp_path / "w.json"
        path.write_text(json.dumps(deformed_book_doc(z=-0.5)))
        assert main(["window", str(path)]) == EXIT_PASS
        assert "inf" in capsys.readouterr().out

    def test_invariants_verb(self, capsys):
        assert main(["invariants", "--seed", "0", "--count", "40"]) == EXIT_PASS
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out

    def test_compare_verb(self, tmp_path, capsys):
        path = tmp_path / "d.json"
        path.write_text(json.dumps(deformed_book_doc()))
        code = main(["compare", str(path), "--z-sweep", "1e-2,5e-3"])
        assert code == EXIT_PASS
        assert "dev_vs_classical" in capsys.readouterr().out
