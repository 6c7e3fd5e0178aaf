"""CLI: exit codes, output files, byte-stability, config layering."""

import json

import numpy as np
import pytest

from parityshift.cli import run_cli

SEED = "424242"


def read(path):
    return path.read_bytes()


class TestKernelsCommand:
    def test_writes_csv_and_passes(self, tmp_path, capsys):
        code = run_cli(["kernels", "--a", "1.2", "--xmin", "-4", "--xmax", "4",
                        "--step", "0.05", "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "[PASS] max_abs_fp_residual" in out
        lines = (tmp_path / "kernels.csv").read_text().strip().splitlines()
        assert lines[0] == "x,p,g,gamma,phi,fp_residual"
        assert len(lines) == 162
        residuals = [abs(float(row.split(",")[5])) for row in lines[1:]]
        assert max(residuals) <= 1e-9

    def test_byte_identical_rerun(self, tmp_path):
        args = ["kernels", "--a", "0.9", "--xmin", "-2", "--xmax", "2",
                "--step", "0.1", "--out"]
        run_cli(args + [str(tmp_path / "one")])
        run_cli(args + [str(tmp_path / "two")])
        assert read(tmp_path / "one" / "kernels.csv") == read(tmp_path / "two" / "kernels.csv")

    def test_grid_outside_domain_rejected(self, tmp_path):
        code = run_cli(["kernels", "--a", "1.0", "--xmin", "-40", "--xmax", "40",
                        "--step", "1", "--out", str(tmp_path)])
        assert code == 2


class TestExperimentCommand:
    def test_preset_runs_and_writes_summary(self, tmp_path, capsys):
        code = run_cli(["experiment", "--preset", "thm2-detectable", "--trials", "150",
                        "--seed", SEED, "--out", str(tmp_path), "--format", "json,jsonl"])
        assert code == 0
        out = capsys.readouterr().out
        assert "[PASS] overlap_zero" in out
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["counts"]["overlap_count"] == 0
        assert summary["passed"] is True
        records = [json.loads(line) for line in (tmp_path / "trials.jsonl").read_text().splitlines()]
        assert len(records) == 150
        assert all(rec["accepted_pre"] != rec["accepted_post"] or not rec["accepted_pre"]
                   for rec in records)

    def test_violating_n_exits_2_with_minimal_n(self, tmp_path, capsys):
        code = run_cli(["experiment", "--preset", "thm2-detectable", "--n", "100",
                        "--seed", SEED, "--out", str(tmp_path)])
        assert code == 2
        err = capsys.readouterr().err
        assert "3600" in err and "3601" in err

    def test_missing_seed_exits_2(self, tmp_path, capsys):
        code = run_cli(["experiment", "--preset", "hoeffding", "--out", str(tmp_path)])
        assert code == 2
        assert "master_seed" in capsys.readouterr().err

    def test_unknown_preset_exits_2(self, tmp_path, capsys):
        code = run_cli(["experiment", "--preset", "nope", "--seed", SEED,
                        "--out", str(tmp_path)])
        assert code == 2
        assert "preset" in capsys.readouterr().err

    def test_byte_identical_rerun(self, tmp_path):
        args = ["experiment", "--preset", "thm2-undetectable", "--trials", "60",
                "--n", "500", "--seed", SEED, "--out"]
        run_cli(args + [str(tmp_path / "one")])
        run_cli(args + [str(tmp_path / "two")])
        assert read(tmp_path / "one" / "summary.json") == read(tmp_path / "two" / "summary.json")

    def test_config_file_layering(self, tmp_path):
        config = tmp_path / "spec.json"
        config.write_text(json.dumps({
            "operation": "coupling_validation",
            "regime": "fixed_a", "a": 2.0, "n": 400, "trials": 50,
            "master_seed": 7,
        }))
        code = run_cli(["experiment", "--config", str(config), "--trials", "40",
                        "--out", str(tmp_path / "run")])
        assert code == 0
        summary = json.loads((tmp_path / "run" / "summary.json").read_text())
        assert summary["spec"]["trials"] == 40  # flag beats file
        assert summary["spec"]["n"] == 400

    def test_config_unknown_field_exits_2(self, tmp_path, capsys):
        config = tmp_path / "bad.json"
        config.write_text(json.dumps({"regime": "fixed_a", "bogus": 1}))
        code = run_cli(["experiment", "--config", str(config), "--seed", SEED,
                        "--out", str(tmp_path)])
        assert code == 2
        assert "bogus" in capsys.readouterr().err

    def test_run_meta_written(self, tmp_path):
        run_cli(["experiment", "--preset", "thm2-undetectable", "--trials", "30",
                 "--n", "200", "--seed", SEED, "--out", str(tmp_path)])
        meta = json.loads((tmp_path / "run_meta.json").read_text())
        assert meta["master_seed"] == int(SEED)
        assert meta["backend"] in ("numba", "numpy")
        assert "numpy" in meta["versions"]


class TestSweepCommand:
    def test_writes_csv_and_monotone(self, tmp_path, capsys):
        code = run_cli(["sweep", "--preset", "sweep-t", "--trials", "120",
                        "--seed", SEED, "--out", str(tmp_path)])
        assert code == 0
        assert "[PASS] success_monotone_in_t" in capsys.readouterr().out
        lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
        assert len(lines) == 8  # header + 7 cells
        header = lines[0].split(",")
        assert "attacker_success_rate" in header and "t_offset" in header

    def test_byte_identical_rerun(self, tmp_path):
        args = ["sweep", "--preset", "sweep-t", "--trials", "50", "--n", "400",
                "--seed", SEED, "--out"]
        run_cli(args + [str(tmp_path / "one")])
        run_cli(args + [str(tmp_path / "two")])
        assert read(tmp_path / "one" / "sweep.csv") == read(tmp_path / "two" / "sweep.csv")
        assert read(tmp_path / "one" / "summary.json") == read(tmp_path / "two" / "summary.json")

    def test_cube_sweep(self, tmp_path):
        code = run_cli(["sweep", "--preset", "sweep-c", "--trials", "40", "--n", "300",
                        "--seed", SEED, "--out", str(tmp_path)])
        assert code == 0
        lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
        assert len(lines) == 14
        assert "detector_win_rate" in lines[0].split(",")


class TestDemoCommands:
    def test_attack_demo(self, capsys):
        assert run_cli(["attack", "--a", "1", "--n", "50", "--seed", "3"]) == 0
        out = capsys.readouterr().out
        assert "sparsity_ratio=" in out and "[PASS] flip_identity_zero" in out

    def test_detect_demo(self, capsys):
        assert run_cli(["detect", "--a", "2", "--n", "500", "--seed", "3"]) == 0
        assert "accept_h0=" in capsys.readouterr().out


class TestFiniteGuard:
    def test_non_finite_payload_rejected(self, tmp_path):
        from parityshift.cli import _assert_finite

        with pytest.raises(AssertionError):
            _assert_finite({"x": [1.0, float("nan")]})
        with pytest.raises(AssertionError):
            _assert_finite({"x": {"y": float("inf")}})
        _assert_finite({"x": [1.0, 2, "s", None, True]})
