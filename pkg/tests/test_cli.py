"""CLI contract tests: subcommands, file outputs, exit codes."""

import csv
import json

import pytest

from anyonsim.cli import main


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestPotentialCmd:
    def test_emits_csv_with_params_echo(self, tmp_path):
        out = tmp_path / "u.csv"
        rc = main(["potential", "--mu-over-j", "-0.1", "--grid", "8", "-o", str(out)])
        assert rc == 0
        text = out.read_text().splitlines()
        assert text[0].startswith("#") and "J=3.0" in text[0]
        assert text[1] == "dx,dy,U"
        assert len(text) == 2 + 9 * 9  # signed displacements -4..4

    def test_rejects_positive_mu(self, tmp_path):
        rc = main(["potential", "--mu-over-j", "0.1", "--grid", "8",
                   "-o", str(tmp_path / "u.csv")])
        assert rc == 1


class TestRepairCmd:
    def test_three_preset_curves(self, tmp_path):
        out = tmp_path / "r.csv"
        rc = main(["repair", "--emin", "-0.3", "--emax", "0.0", "--step", "0.01",
                   "-o", str(out)])
        assert rc == 0
        rows = read_csv(out)
        assert rows[0] == ["spec_id", "delta_e", "gamma_r"]
        labels = {r[0] for r in rows[1:]}
        assert len(labels) == 3

    def test_spec_file_input(self, tmp_path):
        spec = tmp_path / "spec.txt"
        spec.write_text("[primary]\ngamma_s = 0.33\nqubit = 59.33, 0.33\n")
        out = tmp_path / "r.csv"
        rc = main(["repair", "--spec-file", str(spec), "--emin", "-60",
                   "--emax", "-59", "--step", "0.1", "-o", str(out)])
        assert rc == 0

    def test_unknown_preset_is_config_error(self, tmp_path):
        rc = main(["repair", "--preset", "-0.3", "-o", str(tmp_path / "r.csv")])
        assert rc == 1


class TestSimulateCmd:
    def test_runs_and_persists(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "L": 6, "mu_over_j": -0.4, "gamma_p": 3e-3, "n_runs": 2, "base_seed": 5,
        }))
        out = tmp_path / "res"
        rc = main(["simulate", "--config", str(cfg), "--out", str(out)])
        assert rc == 0
        rows = read_csv(out / "runs.csv")
        assert len(rows) == 3

    def test_event_log(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "L": 6, "mu_over_j": -0.4, "gamma_p": 3e-3, "n_runs": 1, "base_seed": 5,
        }))
        log = tmp_path / "events.csv"
        rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "r"),
                   "--event-log", str(log)])
        assert rc == 0
        lines = log.read_text().splitlines()
        assert lines[0] == "time,spin,kind,delta_e,labels,logical_error"
        assert lines[-1].endswith(",1")  # final event carries the logical flag

    def test_bad_config_exit_code(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"L": 6, "mu_over_j": -0.4, "gamma_p": 3e-3,
                                   "integrator": "bogus"}))
        rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "r")])
        assert rc == 1

    def test_missing_config_file(self, tmp_path):
        rc = main(["simulate", "--config", str(tmp_path / "nope.json"),
                   "--out", str(tmp_path / "r")])
        assert rc == 1


class TestSweepCmd:
    def test_grid_and_stats(self, tmp_path, capsys):
        cfg = tmp_path / "sweep.json"
        cfg.write_text(json.dumps({
            "base": {"L": 6, "mu_over_j": -0.4, "gamma_p": 3e-3, "n_runs": 2},
            "axes": {"gamma_p": [3e-3, 5e-3]},
        }))
        out = tmp_path / "res"
        rc = main(["sweep", "--config", str(cfg), "--out", str(out)])
        assert rc == 0
        assert len(read_csv(out / "runs.csv")) == 5
        rc = main(["stats", str(out)])
        assert rc == 0
        printed = capsys.readouterr().out
        assert "mean_tau" in printed

    def test_partial_failure_exit_code(self, tmp_path):
        cfg = tmp_path / "sweep.json"
        cfg.write_text(json.dumps({
            "base": {"L": 6, "mu_over_j": -0.4, "gamma_p": 3e-3, "n_runs": 1},
            "axes": {"spec_id": ["table1", "missing-spec-file"]},
        }))
        rc = main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "res")])
        assert rc == 2


class TestRingCmd:
    def test_runs(self, capsys):
        rc = main(["ring-demo", "--gamma-p", "1e-3", "--n-runs", "20"])
        assert rc == 0
        assert "mean_tau=" in capsys.readouterr().out


class TestGadgetCmd:
    def test_spectrum_csv(self, tmp_path):
        out = tmp_path / "g.csv"
        rc = main(["gadget", "--kind", "three_body", "--tune", "--n-max", "22",
                   "-o", str(out)])
        assert rc == 0
        rows = read_csv(out)
        assert rows[0] == ["index", "eigenvalue", "stabilizer_expectation"]
        assert len(rows) == 33

    def test_invalid_truncation(self, tmp_path):
        rc = main(["gadget", "--n-max", "5", "-o", str(tmp_path / "g.csv")])
        assert rc == 1
