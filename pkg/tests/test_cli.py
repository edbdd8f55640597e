"""Command line front end: configs, reports, exit codes, round trips."""

import json

import numpy as np
import pytest

from phtune.cli import main

E1 = {"kp": [7.3972, 9.2], "ki": [35.0, 20.0], "kd": [0.0, 0.0]}
E2 = {"kp": [3.9136, 4.171], "ki": [50.0, 45.0], "kd": [0.08, 0.15]}
RT = {"kp": [1.0, 0.5], "ki": [50.0, 30.0]}


def write_config(tmp_path, name="config.json", **body):
    cfg = {"schema": 1}
    cfg.update(body)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def arm_config(tmp_path, **extra):
    return write_config(
        tmp_path,
        model={"builtin": "manipulator2dof"},
        q_star=[0.6, 0.8],
        **extra,
    )


class TestAnalyze:
    def test_e1_report(self, tmp_path, capsys):
        cfg = arm_config(tmp_path, gains=E1)
        assert main(["analyze", "--config", cfg, "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["scenario"] == "S1"
        assert report["no_overshoot"]["satisfied"] is True
        assert report["rise_time"]["t_ru"] == pytest.approx(1.846, rel=1e-2)
        assert "1.846" in capsys.readouterr().out

    def test_rt_fails_rule(self, tmp_path):
        cfg = arm_config(tmp_path, gains=RT)
        assert main(["analyze", "--config", cfg, "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["no_overshoot"]["satisfied"] is False
        assert report["rise_time"]["t_ru"] == pytest.approx(3.397, rel=1e-2)

    def test_malformed_json_exits_2(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{"schema": 1, "model": }')
        assert main(["analyze", "--config", str(path)]) == 2
        assert "line 1" in capsys.readouterr().err

    def test_missing_gains_exits_2(self, tmp_path, capsys):
        cfg = arm_config(tmp_path)
        assert main(["analyze", "--config", cfg]) == 2
        assert "gains" in capsys.readouterr().err

    def test_wrong_q_star_length_exits_2(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path, model={"builtin": "manipulator2dof"}, q_star=[0.6], gains=E1
        )
        assert main(["analyze", "--config", cfg]) == 2
        assert "q_star" in capsys.readouterr().err

    def test_wrong_schema_exits_2(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"schema": 99}))
        assert main(["analyze", "--config", str(path)]) == 2

    def test_assumption_failure_exits_3(self, tmp_path, capsys):
        # unactuated negative-curvature direction: stiffness block indefinite
        cfg = write_config(
            tmp_path,
            model={
                "mass": [[1.0, 0.0], [0.0, 1.0]],
                "stiffness": [[1.0, 0.0], [0.0, -1.0]],
                "damping": [[0.0, 0.0], [0.0, 0.0]],
                "input_matrix": [[1.0], [0.0]],
            },
            q_star=[0.0, 0.0],
            gains={"kp": [[4.0]], "ki": [[3.0]], "kd": [[0.0]]},
        )
        assert main(["analyze", "--config", cfg, "--out", str(tmp_path)]) == 3
        assert "positive definite" in capsys.readouterr().err

    def test_unassignable_target_exits_2(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            model={
                "mass": [[1.0, 0.0], [0.0, 1.0]],
                "stiffness": [[1.0, 0.0], [0.0, 1.0]],
                "damping": [[0.0, 0.0], [0.0, 0.0]],
                "input_matrix": [[1.0], [0.0]],
            },
            q_star=[0.0, 1.0],
            gains={"kp": [[4.0]], "ki": [[3.0]], "kd": [[0.0]]},
        )
        assert main(["analyze", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "assignable" in capsys.readouterr().err

    def test_pendulum_builtin_with_params(self, tmp_path):
        cfg = write_config(
            tmp_path,
            model={"builtin": "pendulum", "params": {"mass_kg": 1.0, "gravity": 1.0}},
            q_star=[0.0],
            gains={"kp": 2.0, "ki": 1.0},
        )
        assert main(["analyze", "--config", cfg, "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        # closed form: double pole at 1
        assert report["eigenvalues"]["real"] == [1.0, 1.0]


class TestTune:
    def test_no_overshoot_feasible(self, tmp_path):
        cfg = arm_config(
            tmp_path,
            target={"mode": "no_overshoot", "ki": [35.0, 20.0]},
        )
        assert main(["tune", "--config", cfg, "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["feasible"] is True
        assert report["no_overshoot"]["margin"] >= 0.0
        assert report["scenario"] == "S1"
        assert len(report["search_trace"]) >= 1

    def test_round_trip_spectra_identical(self, tmp_path):
        cfg = arm_config(
            tmp_path, target={"mode": "no_overshoot", "ki": [35.0, 20.0]}
        )
        assert main(["tune", "--config", cfg, "--out", str(tmp_path)]) == 0
        tune_report = json.loads((tmp_path / "report.json").read_text())

        cfg2 = arm_config(tmp_path, name="reread.json", gains=tune_report["gains"])
        out2 = tmp_path / "again"
        assert main(["analyze", "--config", cfg2, "--out", str(out2)]) == 0
        analyze_report = json.loads((out2 / "report.json").read_text())

        a = np.array(tune_report["eigenvalues"]["real"]) + 1j * np.array(
            tune_report["eigenvalues"]["imag"]
        )
        b = np.array(analyze_report["eigenvalues"]["real"]) + 1j * np.array(
            analyze_report["eigenvalues"]["imag"]
        )
        assert np.max(np.abs(a - b)) <= 1e-12

    def test_damping_band_feasible(self, tmp_path):
        cfg = arm_config(
            tmp_path,
            target={
                "mode": "damping_band",
                "zeta_lo": 0.4,
                "zeta_hi": 0.8,
                "ki": [50.0, 45.0],
                "kd": [0.08, 0.15],
            },
        )
        assert main(["tune", "--config", cfg, "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["feasible"] is True
        assert report["damping_ratio_bounds"]["min"] >= 0.4
        assert report["damping_ratio_bounds"]["max"] <= 0.8

    def test_infeasible_band_exits_4_with_report(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            model={"builtin": "pendulum", "params": {"gravity": 1.0}},
            q_star=[0.0],
            target={"mode": "damping_band", "zeta_lo": 0.9999, "zeta_hi": 1.0, "ki": 1e14},
        )
        assert main(["tune", "--config", cfg, "--out", str(tmp_path)]) == 4
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["feasible"] is False
        assert "achievable" in report["error"]

    def test_gains_block_rejected(self, tmp_path):
        cfg = arm_config(
            tmp_path, gains=E1, target={"mode": "no_overshoot", "ki": [35.0, 20.0]}
        )
        assert main(["tune", "--config", cfg]) == 2

    def test_rise_time_target(self, tmp_path):
        cfg = arm_config(
            tmp_path,
            target={"mode": "rise_time", "t_r_max": 1.9, "ki": [35.0, 20.0]},
        )
        assert main(["tune", "--config", cfg, "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["rise_time"]["t_ru"] <= 1.9


class TestSimulate:
    def test_e1_run_writes_csv_and_metrics(self, tmp_path):
        cfg = arm_config(
            tmp_path,
            gains=E1,
            sim={"x0": [0.0, 0.0, 0.0, 0.0], "dt": 1e-3, "T": 2.5},
        )
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 0
        metrics = json.loads((tmp_path / "metrics.json").read_text())
        assert metrics["t_ru_nominal"] == pytest.approx(1.846, rel=1e-2)
        for row in metrics["per_output"]:
            assert row["rise_time_98"] <= metrics["t_ru_nominal"]
        # the linearized companion of this no-overshoot set barely overshoots
        for row in metrics["per_output_linearized"]:
            assert row["overshoot_pct"] <= 0.5
        lines = (tmp_path / "trajectory.csv").read_text().splitlines()
        assert lines[0] == "t,q1,q2,p1,p2,u1,u2,Hd"
        assert len(lines) == 2502

    def test_equilibrium_start_is_flat(self, tmp_path):
        cfg = arm_config(
            tmp_path,
            gains=E1,
            sim={"x0": [0.6, 0.8, 0.0, 0.0], "dt": 1e-3, "T": 0.2},
        )
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 0
        data = np.loadtxt(tmp_path / "trajectory.csv", delimiter=",", skiprows=1)
        assert np.allclose(data[:, 1], 0.6, atol=1e-9)
        assert np.allclose(data[:, 2], 0.8, atol=1e-9)

    def test_e2_oscillates(self, tmp_path):
        cfg = arm_config(
            tmp_path,
            gains=E2,
            sim={"x0": [0.0, 0.0, 0.0, 0.0], "dt": 1e-3, "T": 3.0},
        )
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 0
        metrics = json.loads((tmp_path / "metrics.json").read_text())
        assert any(row["oscillation_count"] >= 1 for row in metrics["per_output"])

    def test_divergence_exits_5(self, tmp_path, capsys):
        cfg = arm_config(
            tmp_path,
            gains=E2,
            sim={"x0": [0.0, 0.0, 0.0, 0.0], "dt": 0.5, "T": 20.0},
        )
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 5
        assert "diverged" in capsys.readouterr().err

    def test_missing_sim_block_exits_2(self, tmp_path):
        cfg = arm_config(tmp_path, gains=E1)
        assert main(["simulate", "--config", cfg]) == 2


class TestVerify:
    def test_e2_meets_band(self, tmp_path):
        cfg = arm_config(
            tmp_path,
            gains=E2,
            target={"mode": "damping_band", "zeta_lo": 0.4, "zeta_hi": 0.8},
        )
        assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["feasible"] is True

    def test_rt_fails_no_overshoot_exits_4(self, tmp_path):
        cfg = arm_config(tmp_path, gains=RT, target={"mode": "no_overshoot"})
        assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == 4
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["feasible"] is False


class TestShippedConfigs:
    """The example configuration files in demos/configs stay runnable."""

    @pytest.mark.parametrize(
        "name,command",
        [
            ("arm_e1_analyze.json", "analyze"),
            ("arm_no_overshoot_tune.json", "tune"),
            ("arm_e2_simulate.json", "simulate"),
        ],
    )
    def test_config_runs_clean(self, tmp_path, name, command):
        from pathlib import Path

        cfg = Path(__file__).resolve().parent.parent / "demos" / "configs" / name
        assert cfg.exists()
        assert main([command, "--config", str(cfg), "--out", str(tmp_path)]) == 0
        assert any(tmp_path.iterdir())


class TestDemo:
    @pytest.mark.parametrize(
        "name,nominal", [("e1", "1.846"), ("rt", "3.397"), ("e2", "0.966")]
    )
    def test_presets_print_nominal(self, tmp_path, capsys, name, nominal):
        assert main(["demo", name, "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert nominal in out
        assert (tmp_path / f"demo_{name}_report.json").exists()
        assert (tmp_path / f"demo_{name}_trajectory.csv").exists()

    def test_unknown_name_exits_2(self, tmp_path, capsys):
        assert main(["demo", "nope", "--out", str(tmp_path)]) == 2
        assert "unknown demo" in capsys.readouterr().err

    def test_parallel_jobs(self, tmp_path, capsys):
        assert main(["demo", "rt", "e1", "--jobs", "2", "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "3.397" in out and "1.846" in out
