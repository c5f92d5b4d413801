import json
import subprocess
import sys

import numpy as np
import pytest

from hyperlap import __version__
from hyperlap.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_apply_louis4(capsys):
    code, out, _ = run(capsys, "apply", "--instance", "louis4", "--vector", "1,1,-1,-1")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["tool"] == "hyperlap" and doc["version"] == __version__
    assert doc["instance"] == "louis4" and len(doc["instance_hash"]) == 16
    np.testing.assert_allclose(doc["L_w_f"], [2 / 3, 2 / 3, -2 / 3, -2 / 3])
    assert doc["energy_identity"]["residual"] <= 1e-12
    assert doc["rule_violations"] == []
    assert {tuple(l["nodes"]) for l in doc["layers"]} == {("a", "b"), ("c", "d")}


def test_apply_even_split(capsys):
    code, out, _ = run(capsys, "apply", "--instance", "louis4", "--vector", "1,1,-1,-1", "--even-split")
    assert code == EXIT_OK
    np.testing.assert_allclose(json.loads(out)["L_w_f"], [1 / 3, 1, -2 / 3, -2 / 3])


def test_apply_measure_space(capsys):
    code, out, _ = run(capsys, "apply", "--instance", "twoedge4", "--vector", "1,2,3,4", "--space", "measure")
    assert code == EXIT_OK
    np.testing.assert_allclose(json.loads(out)["f"], [1, 1, 3, 4])


def test_apply_is_byte_deterministic(capsys):
    args = ("apply", "--instance", "nested5", "--vector", "1,1,0,-2,-2")
    assert run(capsys, *args)[1] == run(capsys, *args)[1]


@pytest.mark.parametrize(
    "argv",
    [
        ["apply", "--instance", "nope.json", "--vector", "1"],
        ["apply", "--instance", "louis4", "--vector", "1,2"],
        ["apply", "--instance", "louis4", "--vector", "1,x,2,3"],
        ["apply", "--instance", "louis4", "--vector", "1,1,1,nan"],
        ["apply", "--instance", "louis4", "--vector", "1,1,1,1", "--tol", "0"],
        ["simulate", "--instance", "louis4", "--phi0", "point:z", "--t-end", "1"],
        ["simulate", "--instance", "louis4", "--phi0", "1,0,0,0", "--t-end", "-1"],
        ["sde", "--instance", "louis4", "--phi0", "1,0,0,0", "--eta", "0.1", "--t-end", "1", "--seed", "1", "--checkpoints", "5"],
        ["verify", "--instance", "louis4", "--k", "3", "--gamma", "1"],
        ["examples", "--criteria", "99"],
    ],
)
def test_input_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_INPUT
    assert err.startswith("hyperlap: error:")


def test_missing_seed_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["sde", "--instance", "louis4", "--phi0", "1,0,0,0", "--eta", "0.1", "--t-end", "1"])
    assert exc.value.code == 2


def test_bad_instance_file(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"nodes": ["a", "b"], "edges": [{"nodes": ["a", "b"], "weight": -1}]}))
    code, _, err = run(capsys, "apply", "--instance", str(p), "--vector", "1,0")
    assert code == EXIT_INPUT and "nonpositive" in err


def test_simulate_csv(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    code, _, _ = run(capsys, "simulate", "--instance", "twoedge4", "--phi0", "point:a", "--t-end", "0.5", "--dt-max", "1e-2", "--out", str(out))
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# tool=hyperlap version=")
    assert lines[1] == "t,phi_a,phi_b,phi_c,phi_d,rayleigh,l1_to_equilibrium"
    assert lines[2].startswith("0.0,1.0,0.0,0.0,0.0,")


def test_sde_json_reproducible(tmp_path, capsys):
    args = ["sde", "--instance", "louis4", "--phi0", "1,0,0,0", "--eta", "0.1", "--dt", "1e-2", "--t-end", "1",
            "--traj", "10", "--seed", "42", "--checkpoints", "0.5,1", "--gamma2", "0.6666666666666666"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(args + ["--out", str(a)]) == EXIT_OK
    assert main(args + ["--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["seed"] == 42 and [c["t"] for c in doc["stats"]["checkpoints"]] == [0.5, 1.0]


def test_sde_csv_single_trajectory(capsys):
    code, out, _ = run(capsys, "sde", "--instance", "louis4", "--phi0", "1,0,0,0", "--eta", "0.1", "--dt", "1e-2",
                       "--t-end", "0.1", "--seed", "3", "--format", "csv")
    assert code == EXIT_OK
    assert "seed=3" in out.splitlines()[0] and len(out.splitlines()) == 13


def test_spectrum(capsys):
    code, out, _ = run(capsys, "spectrum", "--instance", "twoedge4", "--k", "3", "--restarts", "16", "--seed", "7")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["seed"] == 7
    assert [g["k"] for g in doc["gammas"]] == [1, 2, 3]
    assert doc["gammas"][1]["gamma"] == pytest.approx((5 - 5**0.5) / 4, abs=1e-9)


def test_spectrum_bad_k(capsys):
    assert run(capsys, "spectrum", "--instance", "louis4", "--k", "9")[0] == EXIT_INPUT


def test_verify_accept_and_reject(capsys):
    code, out, _ = run(capsys, "verify", "--instance", "louis4", "--k", "2", "--gamma", "0.666666667")
    assert code == EXIT_OK and json.loads(out)["verified"] is True
    code, out, _ = run(capsys, "verify", "--instance", "louis4", "--k", "2", "--gamma", "0.7")
    doc = json.loads(out)
    assert code == EXIT_FAIL and doc["verified"] is False
    assert doc["counterexample_ratio"] < 0.7


def test_verify_with_priors_file(tmp_path, capsys):
    p = tmp_path / "priors.json"
    s5 = 5**0.5
    p.write_text(json.dumps([[s5 - 1, (3 - s5) / 2, -1, -1]]))
    code, out, _ = run(capsys, "verify", "--instance", "twoedge4", "--k", "3", "--gamma", str((11 + s5) / 8), "--priors", str(p))
    assert code == EXIT_OK, out
    p.write_text(json.dumps({"priors": [[1, 1, 1, 1], [1, 0, 0, 0]]}))
    code, _, err = run(capsys, "verify", "--instance", "twoedge4", "--k", "3", "--gamma", "1", "--priors", str(p))
    assert code == EXIT_INPUT and "orthogonal" in err


def test_examples_json_subset(capsys):
    code, out, _ = run(capsys, "examples", "--format", "json", "--criteria", "1,11")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["passed"] is True and {r["criterion"] for r in doc["records"]} == {1, 11}


def test_examples_table(capsys):
    code, out, _ = run(capsys, "examples", "--criteria", "1")
    assert code == EXIT_OK
    assert out.count("[PASS]") == 3 and "3/3 checks passed" in out


def test_examples_failure_exit_code(monkeypatch, capsys):
    from hyperlap import golden

    def failing():
        return [golden.Check(1, "forced", "q", "1", "2", "0", False)]

    monkeypatch.setitem(golden.CRITERIA, 1, failing)
    code, out, _ = run(capsys, "examples", "--criteria", "1")
    assert code == EXIT_FAIL
    assert "FAILED criterion 1 forced: q expected 1, got 2, tolerance 0" in out


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hyperlap.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == f"hyperlap {__version__}"


def test_spectrum_minimax(capsys):
    code, out, _ = run(capsys, "spectrum", "--instance", "louis4", "--k", "2", "--restarts", "8", "--minimax")
    assert code == EXIT_OK
    mm = json.loads(out)["minimax"]
    assert mm[0] == {"k": 1, "xi": 0.0, "zeta": 0.0}
    assert mm[1]["xi"] <= 1 / 3 + 1e-9 and mm[1]["zeta"] == pytest.approx(2 / 3, abs=1e-6)
