import json

import numpy as np
import pytest

import qse
import qse.cli as cli
from qse.serialize import write_pom_json, write_state_json

from helpers import fourier_pom


def write_config(path, **overrides):
    cfg = {
        "grid": {"theta_min": 0.1, "theta_max": 10.0, "n": 120},
        "prior": {"kind": "flat_in_log"},
        "hamiltonian_path": "h.csv",
        "theta_u": 1.0,
    }
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "h.csv").write_text("energy\n0.0\n1.0\n")
    return tmp_path


def read_dir_bytes(d):
    return {f.name: f.read_bytes() for f in sorted(d.iterdir())}


class TestSolve:
    def test_report_schema_and_values(self, workdir):
        cfg = write_config(workdir / "cfg.json")
        out = workdir / "out"
        assert cli.main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
        report = json.loads((out / "minimum.json").read_text())
        assert report["epsilon_min"] >= 0
        assert set(report["assessment"]) >= {"K", "J", "classification"}
        assert report["certificate"]["trace_upsilon"] == pytest.approx(
            report["epsilon_min"], abs=1e-10
        )
        assert "config" in report and "out" not in report["config"]
        strategy = json.loads((out / "strategy.json").read_text())
        assert len(strategy["estimates"]) == len(strategy["projectors"])
        assert (out / "strategy.png").exists()

    def test_flag_overrides_grid(self, workdir):
        cfg = write_config(workdir / "cfg.json")
        out = workdir / "out"
        assert cli.main(
            ["solve", "--config", str(cfg), "--out", str(out), "--grid-n", "64"]
        ) == 0
        report = json.loads((out / "minimum.json").read_text())
        assert report["config"]["grid"]["n"] == 64

    def test_state_file_input(self, workdir, qubit_desk):
        write_state_json(workdir / "state.json", qubit_desk["family"])
        cfg = write_config(workdir / "cfg.json", state_path="state.json")
        del_cfg = json.loads(cfg.read_text())
        del del_cfg["hamiltonian_path"], del_cfg["grid"]
        cfg.write_text(json.dumps(del_cfg))
        out = workdir / "out"
        assert cli.main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
        report = json.loads((out / "minimum.json").read_text())
        assert report["epsilon_min"] == pytest.approx(qubit_desk["report"].epsilon_min, rel=1e-6)


class TestAssess:
    def test_unbiased_basis_is_flagged(self, workdir):
        write_pom_json(workdir / "pom.json", fourier_pom(2))
        cfg = write_config(workdir / "cfg.json", pom_path="pom.json")
        out = workdir / "out"
        assert cli.main(["assess", "--config", str(cfg), "--out", str(out)]) == 0
        report = json.loads((out / "assessment.json").read_text())
        assert report["classification"] == "sub_optimal"
        assert report["K"] <= 1e-12


class TestSimulate:
    def test_outputs_and_reproducibility(self, workdir):
        cfg = write_config(
            workdir / "cfg.json", true_theta=2.0, shots=5, trajectories=3, seed=42
        )
        out1, out2 = workdir / "o1", workdir / "o2"
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(out1)]) == 0
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(out2)]) == 0
        assert read_dir_bytes(out1) == read_dir_bytes(out2)
        rows = (out1 / "trajectory_0000.csv").read_text().strip().splitlines()
        assert rows[0] == "shot,outcome,estimate,experimental_error"
        assert len(rows) == 6
        summary = json.loads((out1 / "summary.json").read_text())
        assert summary["trajectories"] == 3 and summary["shots"] == 5

    def test_seed_flag_changes_outcomes(self, workdir):
        cfg = write_config(workdir / "cfg.json", true_theta=2.0, shots=5, trajectories=1, seed=42)
        out1, out2 = workdir / "o1", workdir / "o2"
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(out1)]) == 0
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(out2), "--seed", "43"]) == 0
        a = (out1 / "trajectory_0000.csv").read_bytes()
        b = (out2 / "trajectory_0000.csv").read_bytes()
        assert a != b


class TestMultishotExact:
    def test_error_curve(self, workdir):
        cfg = write_config(workdir / "cfg.json", shots=6)
        out = workdir / "out"
        assert cli.main(["multishot-exact", "--config", str(cfg), "--out", str(out)]) == 0
        rows = (out / "multishot.csv").read_text().strip().splitlines()
        assert rows[0] == "shots,exact_error"
        errors = [float(r.split(",")[1]) for r in rows[1:]]
        assert len(errors) == 6
        assert all(b <= a + 1e-10 for a, b in zip(errors, errors[1:]))


class TestMultiparam:
    def test_tensor_toy_report(self, workdir):
        cfg_obj = {
            "axes": [
                {"theta_min": 0.1, "theta_max": 10.0, "n": 32},
                {"theta_min": 0.1, "theta_max": 10.0, "n": 32},
            ],
            "hamiltonian_paths": ["h.csv", "h.csv"],
            "prior": {"kind": "jeffreys"},
            "theta_u_list": [1.0, 1.0],
        }
        cfg = workdir / "cfg.json"
        cfg.write_text(json.dumps(cfg_obj))
        out = workdir / "out"
        assert cli.main(["multiparam", "--config", str(cfg), "--out", str(out)]) == 0
        report = json.loads((out / "multiparam.json").read_text())
        assert report["saturable"] is True
        assert report["bound"] == pytest.approx(np.mean(report["per_parameter"]))


class TestThermometryCommand:
    def test_rtable_and_diagnostics(self, workdir):
        cfg = write_config(workdir / "cfg.json")
        out = workdir / "out"
        assert cli.main(["thermometry", "--config", str(cfg), "--out", str(out)]) == 0
        rows = (out / "rtable.csv").read_text().strip().splitlines()
        assert rows[0] == "energy,r0,r1,s,estimate"
        report = json.loads((out / "thermometry.json").read_text())
        assert report["diagnostics"]["max_offdiagonal"] <= 1e-10


class TestFailureModes:
    def test_missing_config_exits_2(self, workdir, capsys):
        assert cli.main(["solve", "--config", str(workdir / "nope.json")]) == 2
        err = json.loads(capsys.readouterr().err.strip())
        assert err["error"] == "validation"

    def test_bad_grid_exits_2(self, workdir, capsys):
        cfg = write_config(workdir / "cfg.json", grid={"theta_min": 5.0, "theta_max": 1.0, "n": 10})
        assert cli.main(["solve", "--config", str(cfg), "--out", str(workdir / "o")]) == 2
        assert "validation" in capsys.readouterr().err

    def test_unresolvable_path_exits_2(self, workdir):
        cfg = write_config(workdir / "cfg.json", hamiltonian_path="missing.csv")
        assert cli.main(["solve", "--config", str(cfg), "--out", str(workdir / "o")]) == 2

    def test_command_mismatch_exits_2(self, workdir):
        cfg = write_config(workdir / "cfg.json", command="assess")
        assert cli.main(["solve", "--config", str(cfg), "--out", str(workdir / "o")]) == 2

    def test_numerical_failure_exits_3(self, workdir, capsys, monkeypatch):
        # the handler -> exit-code mapping for numerical failures
        def boom(cfg):
            raise qse.NumericalFailureError("inconsistent inputs")

        monkeypatch.setitem(cli._HANDLERS, "solve", boom)
        cfg = write_config(workdir / "cfg.json")
        assert cli.main(["solve", "--config", str(cfg), "--out", str(workdir / "o")]) == 3
        err = json.loads(capsys.readouterr().err.strip())
        assert err["error"] == "numerical-failure"

    def test_stderr_is_single_line(self, workdir, capsys):
        cli.main(["solve", "--config", str(workdir / "nope.json")])
        err = capsys.readouterr().err
        assert err.count("\n") == 1 and err.endswith("\n")
