import io
import json
import subprocess
import sys
from importlib import resources

import pytest

from qcgeom.cli import main, to_json

DATA = resources.files("qcgeom") / "data"


def surface(name):
    return str(DATA / f"{name}.qc")


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def run_json(*argv):
    code, out, err = run(*argv, "--json")
    return code, json.loads(out), err


@pytest.mark.parametrize("name, label, inertia", [
    ("sphere_n1", "Sphere", [2, 0, 0]),
    ("hyperboloid_n1", "Hyperboloid", [1, 1, 0]),
    ("heisenberg_n1", "Parabolic", [1, 0, 1]),
])
def test_classify_bundled_models(name, label, inertia):
    code, rep, err = run_json("classify", "-s", surface(name))
    assert code == 0, err
    assert rep["outcome"] == "OK"
    assert rep["classification"]["label"] == label
    assert rep["classification"]["inertia"] == inertia
    assert rep["classification"]["residual"] < 1e-6
    assert rep["points_used"] == 32


def test_report_key_order():
    _, rep, _ = run_json("classify", "-s", surface("sphere_n1"))
    assert list(rep)[:5] == ["schema_version", "command", "surface", "outcome", "rng_seed"]
    assert rep["schema_version"] == "1"


def test_heisenberg_potentials_reported():
    code, rep, _ = run_json("classify", "-s", surface("heisenberg_n1"), "--samples", "16")
    assert code == 0
    assert rep["diagnostics"]["fl0_dev"] < 1e-6
    assert rep["diagnostics"]["potential_fit_residual"] < 1e-6


def test_skewed_ellipsoid_rejected():
    code, rep, err = run_json("classify", "-s", surface("skewed_ellipsoid_n1"))
    assert code == 2
    assert rep["outcome"] == "Rejected"
    assert rep["error"] == "NotQCHypersurface"
    assert rep["diagnostics"]["sp1_residual"] > 1e-2
    assert err.startswith("rejected:")


def test_missing_file_and_usage_errors(tmp_path):
    assert run("classify", "-s", str(tmp_path / "nope.qc"))[0] == 1
    assert run("verify", "-s", surface("sphere_n1"), "--battery", "nope")[0] == 1
    assert run("classify")[0] == 1
    assert run("classify", "-s", surface("sphere_n1"), "--samples", "0")[0] == 1
    bad = tmp_path / "bad.qc"
    bad.write_text("dim = 2\nrho = normq(0) + + 1\n")
    code, out, err = run("classify", "-s", str(bad))
    assert code == 1
    assert "line 2, col 18" in err


def test_verify_selected_battery():
    code, rep, _ = run_json("verify", "-s", surface("heisenberg_n1"), "--battery", "potentials",
                            "--samples", "8")
    assert code == 0
    [bat] = rep["batteries"]
    assert bat["name"] == "potentials" and bat["passed"] and not bat["skipped"]
    assert rep["diagnostics"]["worst_residual"] < 1e-6


def test_verify_all_on_sphere():
    code, rep, _ = run_json("verify", "-s", surface("sphere_n2"), "--samples", "3")
    assert code == 0
    assert [b["name"] for b in rep["batteries"]] == ["mu", "einstein", "delta", "reeb", "potentials"]


def test_frame_heisenberg_origin():
    code, rep, _ = run_json("frame", "-s", surface("heisenberg_n1"), "--point", "0,0,0,0,0,0,0,0")
    assert code == 0
    fr = rep["frame"]
    assert fr["f"] == pytest.approx(2 ** (-1 / 3), abs=1e-12)
    assert fr["S"] == pytest.approx(0.0, abs=1e-12)
    assert max(abs(v) for v in fr["r"]) < 1e-12
    assert fr["mu"] == pytest.approx(0.5, rel=1e-12)


def test_frame_sphere_and_errors():
    code, rep, _ = run_json("frame", "-s", surface("sphere_n1"), "--point", "0,0,0,0,2,0,0,0")
    assert code == 0
    assert rep["frame"]["point"] == pytest.approx([0, 0, 0, 0, 1, 0, 0, 0])
    assert rep["frame"]["f"] == pytest.approx(1.0)
    assert rep["frame"]["S"] == pytest.approx(2.0)
    assert run("frame", "-s", surface("sphere_n1"), "--point", "1,2")[0] == 1
    assert run("frame", "-s", surface("sphere_n1"), "--point", "a,b")[0] == 1
    # no real points on |q|^2 + |p|^2 = -1: projection cannot converge
    assert run("frame", "-s", surface("sphere_n1"), "--point", "0,0,0,0,0,0,0,0")[0] == 2


def test_normalize_emits_model_surface():
    code, rep, _ = run_json("normalize", "-s", surface("hyperboloid_n1"), "--samples", "16")
    assert code == 0
    assert rep["normalized_surface"]["dim"] == 2
    assert "rho" in rep["normalized_surface"]


def test_json_is_byte_identical_across_runs():
    a = run("classify", "-s", surface("hyperboloid_n2"), "--json", "--samples", "12", "--seed", "7")[1]
    b = run("classify", "-s", surface("hyperboloid_n2"), "--json", "--samples", "12", "--seed", "7")[1]
    assert a == b


def test_table_output():
    code, out, _ = run("classify", "-s", surface("sphere_n1"), "--samples", "12")
    assert code == 0
    assert any(line.split()[:2] == ["classification.label", "Sphere"] for line in out.splitlines())


def test_float_formatting():
    assert to_json(0.1) == "0.10000000000000001"
    assert to_json(2.0) == "2.0"
    assert to_json(1e300) == "1.0000000000000001e+300"
    assert to_json(float("nan")) == '"NaN"'
    assert to_json({"b": 1, "a": [1.5, True, None]}) == '{\n  "b": 1,\n  "a": [1.5, true, null]\n}'


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qcgeom", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("qcgeom ")
