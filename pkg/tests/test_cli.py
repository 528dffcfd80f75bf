import json
import math
import subprocess
import sys

import numpy as np
import pytest

from sigbell import formats as fmt
from sigbell import qlinalg as ql
from sigbell.cli import main
from sigbell.scenario import CHSH, CountsTable, SignallingBudget
from sigbell.witness import mub_witness


def write(path, obj):
    path.write_text(fmt.dumps(obj))
    return str(path)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip().startswith(("{", "[")) else out)


@pytest.fixture
def files(tmp_path):
    f = {}
    for kind in ("ideal_quantum_chsh", "pr_box", "uniform"):
        f[kind] = write(tmp_path / f"{kind}.json", fmt.behavior_to_dict(ql.standard_behavior(kind)))
    f["budget05"] = write(tmp_path / "b05.json", fmt.budget_to_dict(SignallingBudget.uniform(CHSH, 0.05)))
    f["iso"] = write(tmp_path / "iso.json", fmt.assemblage_to_dict(
        ql.assemblage_from(ql.isotropic_state(2, 1.0), ql.pauli_measurements())))
    f["iso_low"] = write(tmp_path / "iso_low.json", fmt.assemblage_to_dict(
        ql.assemblage_from(ql.isotropic_state(2, 0.4), ql.pauli_measurements())))
    f["qutrit"] = write(tmp_path / "qutrit.json", fmt.assemblage_to_dict(ql.qutrit_signalling_assemblage(1.0, 0.5)))
    f["mub"] = write(tmp_path / "mub.json", fmt.witness_to_dict(mub_witness(3)))
    f["tmp"] = tmp_path
    return f


def test_visibility_exit_codes(files, capsys):
    code, out = run(capsys, "visibility", files["uniform"], "--budget", "zero")
    assert code == 0 and out["v"] == 1
    code, out = run(capsys, "visibility", files["ideal_quantum_chsh"], "--budget", "zero")
    assert code == 4 and out["v"] == pytest.approx(1 / math.sqrt(2), abs=1e-9)
    code, out = run(capsys, "visibility", files["pr_box"], "--budget", files["budget05"])
    assert code == 4 and 0.5 < out["v"] < 1


def test_ns_check_and_budget(files, capsys):
    code, out = run(capsys, "ns-check", files["pr_box"])
    assert code == 0 and out["compliant"] and out["max_deviation"] == 0
    code, out = run(capsys, "budget", files["uniform"], "--slack", "0.1")
    b = fmt.budget_from_dict(out)
    assert b.alpha[0, 0, 0, 1] == pytest.approx(0.1)


def test_inequality_round_trip(files, capsys):
    out_path = files["tmp"] / "ineq.json"
    code, _ = run(capsys, "inequality", files["ideal_quantum_chsh"], "--budget", "zero", "-o", out_path)
    assert code == 0
    ineq = fmt.inequality_from_dict(fmt.load_json(out_path))
    beh = ql.standard_behavior("ideal_quantum_chsh")
    # 12 significant digits survive the round trip; the violation is of order 0.3
    assert ineq.violated_by(beh)
    assert ineq.bound == pytest.approx(ineq.bound_for(SignallingBudget.zero(CHSH)), abs=1e-10)
    code, _ = run(capsys, "inequality", files["pr_box"], "--budget", files["budget05"], "-o", out_path)
    assert fmt.load_json(out_path)["budget_ref"] == files["budget05"]


def test_bounds(files, capsys):
    code, out = run(capsys, "chsh-bound", "--budget", files["budget05"])
    assert code == 0 and out["bound"] == pytest.approx(2.4)
    coeffs = write(files["tmp"] / "c.json", {"c": [[1, 1], [1, -1]]})
    code, out = run(capsys, "bell-bound", "--coeffs", coeffs, "--lhv", "2", "--budget", files["budget05"])
    assert out["total"] == pytest.approx(2.4) and out["vacuous"] is False


def test_ingest_counts(files, capsys):
    c = np.zeros((2, 2, 3, 3), dtype=int)
    c[:, :, :2, :2] = 30
    c[:, :, 2, :2] = 15
    path = write(files["tmp"] / "counts.json", fmt.counts_to_dict(CountsTable(CHSH, c)))
    code, out = run(capsys, "ingest-counts", path)
    assert code == 0
    np.testing.assert_allclose(out["behavior"]["p"], 0.25)
    np.testing.assert_allclose(out["etaA"], 60 / 90)


def test_guess_steer_report(files, capsys):
    code, out = run(capsys, "guess", files["qutrit"])
    assert code == 0 and out["Pg"] == pytest.approx(0.75, abs=1e-6)
    code, out = run(capsys, "steer", files["iso"], "--gamma", "0.3333333333333333")
    assert code == 4 and out["feasible"] is False
    code, out = run(capsys, "steer", files["iso_low"])
    assert code == 0 and out["feasible"] is True
    code, out = run(capsys, "steer", files["iso"], "--measure", "whitenoise", "--gamma", "auto")
    assert code == 4 and out["value"] == pytest.approx(math.sqrt(3) - 1, abs=1e-6)
    code, out = run(capsys, "report", files["iso"])
    assert code == 0 and out["status"] == "optimal"
    assert out["SR"] == pytest.approx(2 - math.sqrt(3), abs=1e-6)


def test_witness_commands(files, capsys):
    code, out = run(capsys, "schmidt-bound", "-d", "3", "-n", "3")
    assert code == 0 and out["bound"] == 2.0
    code, out = run(capsys, "witness-adjust", "--lhs-bound", "1", "--mA", "3", "--gamma", "0.3333333333333333",
                    "--mode", "linear")
    assert out["bound"] == pytest.approx(2.0)
    code, out = run(capsys, "witness-eval", files["qutrit"], files["mub"])
    assert code == 0 and out["certified_sn"] == 3 and out["adjusted_certified_sn"] is None


def test_postselect_commands(files, capsys):
    code, out = run(capsys, "postselect", "sim", "--eta0", "0.8", "--eta1", "0.8", "--strategy", "quantum")
    assert code == 0 and out["chsh"] == pytest.approx(2.82842712475, abs=1e-11)
    code, out = run(capsys, "postselect", "scan", "--grid", "2", "--min", "0.5", "--max", "1", "--strategy", "local")
    lines = out.splitlines()
    assert lines[0] == "eta0,eta1,chsh,visibility,max_signalling,status" and len(lines) == 5


def test_sample_is_seeded(files, capsys):
    _, a = run(capsys, "sample", "--budget", files["budget05"], "--seed", "5")
    _, b = run(capsys, "sample", "--budget", files["budget05"], "--seed", "5")
    assert a == b


def test_input_errors_exit_2(files, capsys):
    bad = files["tmp"] / "bad.json"
    bad.write_text("{not json")
    assert main(["visibility", str(bad)]) == 2
    assert main(["visibility", str(files["tmp"] / "missing.json")]) == 2
    broken = write(files["tmp"] / "neg.json", {"mA": 2, "mB": 2, "nA": 2, "nB": 2, "p": -np.ones((2, 2, 2, 2))})
    assert main(["visibility", broken]) == 2
    assert main(["schmidt-bound", "-d", "3", "-n", "5"]) == 2
    assert main(["steer", files["iso"], "--gamma", "0.1"]) == 2
    assert main(["steer", files["iso"], "--gamma", "lots"]) == 2


def test_solver_failure_exit_3(files, capsys):
    assert main(["guess", files["qutrit"], "--max-iter", "1"]) == 3


def test_module_entry_point(files):
    res = subprocess.run([sys.executable, "-m", "sigbell", "schmidt-bound", "-d", "3", "-n", "1"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["bound"] == pytest.approx(1.57735026919)
