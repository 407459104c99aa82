import base64
import json

import numpy as np
import pytest

from qlevy.cli import main, parse_steps
from qlevy.cocycle import Generator
from qlevy.convolution import OperatorMap, functional
from qlevy.derivations import inner_derivation
from qlevy.fixtures import bundled_fixtures, s3_table
from qlevy.harness import coboundary_data
from qlevy.linalg import maxabs


@pytest.fixture(scope="module")
def z3_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("alg") / "z3.json"
    bundled_fixtures()["C(Z3)"].save(path)
    return str(path)


def test_validate_pass(z3_file, capsys):
    assert main(["validate", z3_file]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out
    assert "OSC1-coassociativity" in out


def test_validate_fail_names_axiom(tmp_path, capsys):
    data = bundled_fixtures()["C(Z2)"].to_dict()
    data["coproduct"][0]["re"] += 1e-3
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    assert main(["validate", str(path)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_validate_parse_error(tmp_path, capsys):
    path = tmp_path / "junk.json"
    path.write_text("{")
    assert main(["validate", str(path)]) == 1
    assert "parse error" in capsys.readouterr().err


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as err:
        main(["semigroup"])  # missing required arguments
    assert err.value.code == 2


def test_semigroup_csv(z3_file, tmp_path):
    b = bundled_fixtures()["C(Z3)"]
    gamma = functional(b, 0.5 * (np.eye(3)[1] - np.eye(3)[0]))
    gpath = tmp_path / "gamma.json"
    gamma.save(gpath)
    out = tmp_path / "rows.csv"
    assert main(["semigroup", z3_file, str(gpath),
                 "--t-grid", "0:1:5", "--format", "csv", "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("t,")
    assert len(lines) == 6
    first = [float(v) for v in lines[1].split(",")]
    assert first[0] == 0.0 and abs(first[1] - 1.0) < 1e-14


def test_parse_steps_inline_and_base64():
    inline = parse_steps("0.5:[[0.3,0.1],[0.2,0.0]],1.0:[[-0.5,0.0],[0.0,0.4]]")
    assert inline.breakpoints.tolist() == [0.0, 0.5, 1.0]
    assert inline.values[0, 0] == 0.3 + 0.1j
    token = base64.b64encode(b"[[0.3,0.1],[0.2,0.0]]").decode()
    b64 = parse_steps(f"0.5:{token}")
    assert maxabs(b64.values[0] - inline.values[0]) == 0.0


def test_cocycle_eval(z3_file, tmp_path, capsys):
    b = bundled_fixtures()["C(Z3)"]
    rng = np.random.default_rng(0)
    phi = Generator(b, 0.4 * (rng.standard_normal((3, 3, 3))
                              + 1j * rng.standard_normal((3, 3, 3))))
    gpath = tmp_path / "phi.json"
    phi.save(gpath)
    assert main(["cocycle-eval", z3_file, str(gpath), "--x", "d1",
                 "--f", "0.4:[[0.3,0.1],[0.2,0.0]],0.9:[[0.1,0.0],[0.0,0.0]]",
                 "--t", "0.9"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["method"] == "semigroup-factorization"
    assert payload["residual_checks"]["cocycle_identity"] <= 1e-9
    got = complex(*payload["value"])
    assert abs(got) > 0


def test_gns_cli(z3_file, tmp_path, capsys):
    b = bundled_fixtures()["C(Z3)"]
    gamma = functional(b, 0.8 * (np.array([0.0, 1.0, 0.0]) - b.counit))
    gpath = tmp_path / "gamma.json"
    gamma.save(gpath)
    assert main(["gns", z3_file, str(gpath)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["rank"] == 1
    assert max(payload["residuals"].values()) <= 1e-9


def test_classify_cli(tmp_path, capsys):
    b = bundled_fixtures()["Alg(Z4)"]
    bpath = tmp_path / "alg.json"
    b.save(bpath)
    pi = OperatorMap(b, b.rep_images)
    rng = np.random.default_rng(1)
    from qlevy.generators import make_structure_map
    phi = make_structure_map(pi, rng.standard_normal(4))
    ppath = tmp_path / "phi.json"
    phi.save(ppath)
    assert main(["classify", str(bpath), str(ppath)]) == 0
    out = capsys.readouterr().out
    assert "epsilon_structure" in out and "PASS" in out


def test_derivation_solve_cli(tmp_path, capsys):
    b = bundled_fixtures()["Alg(Z3)"]
    bpath = tmp_path / "alg.json"
    b.save(bpath)
    pi = OperatorMap(b, b.rep_images)
    rng = np.random.default_rng(2)
    t0 = rng.standard_normal((3, 3))
    delta = inner_derivation(pi, pi, t0)
    def mat_json(vals):
        return [[[ [z.real, z.imag] for z in row] for row in m] for m in vals]
    problem = {"pi_prime": mat_json(pi.values), "pi": mat_json(pi.values),
               "delta": mat_json(delta.values)}
    ppath = tmp_path / "problem.json"
    ppath.write_text(json.dumps(problem))
    assert main(["derivation", "solve", str(bpath), str(ppath)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["residual"] <= 1e-9


def test_chi_structure_cli(tmp_path, capsys):
    b = bundled_fixtures()["C(Z4)"]
    bpath = tmp_path / "alg.json"
    b.save(bpath)
    from qlevy.derivations import implemented_chi_structure
    pi = OperatorMap(b, b.rep_images)
    chi = functional(b, b.counit)
    phi = implemented_chi_structure(pi, chi, np.array([0.2, 0.1, 0.0, 0.4]))
    ppath = tmp_path / "phi.json"
    phi.save(ppath)
    assert main(["chi-structure", "implement", str(bpath), str(ppath),
                 "counit"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["residuals"]["reassembly"] <= 1e-10


def test_group_gen_and_coboundary_cli(tmp_path, capsys):
    rng = np.random.default_rng(3)
    table = s3_table()
    b = bundled_fixtures()["Alg(S3)"]
    u = np.array([b.rep_images[g][2:, 2:] for g in range(6)])
    data = coboundary_data(table, u, rng.standard_normal(2))
    raw = {
        "table": table.tolist(),
        "U": [[[ [z.real, z.imag] for z in row] for row in m] for m in data.unitaries],
        "xi": [[[z.real, z.imag] for z in row] for row in data.xi],
        "lambda": data.lam.tolist(),
    }
    dpath = tmp_path / "data.json"
    dpath.write_text(json.dumps(raw))
    assert main(["group-gen", str(dpath), "--out", str(tmp_path / "gen.json")]) == 0
    payload = json.loads((tmp_path / "gen.json").read_text())
    assert max(payload["residuals"].values()) <= 1e-10
    assert main(["coboundary", str(dpath)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["eta"] is not None


def test_montecarlo_cli(capsys):
    assert main(["montecarlo", "--order", "2", "--rate", "1.0",
                 "--mu", "[0.0, 1.0]", "--t", "0.5",
                 "--samples", "20000", "--seed", "11"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["max_sigmas"] <= 3.0
    assert payload["seed"] == 11


def test_report_cli(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["report", "--battery", "axioms", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["all_pass"] is True
    assert "battery axioms" in capsys.readouterr().out


def test_report_byte_identical_across_processes(tmp_path):
    import subprocess
    import sys
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        res = subprocess.run(
            [sys.executable, "-m", "qlevy.cli", "report", "--battery",
             "cocycle", "--seed", "42", "--out", str(p)],
            capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
    assert paths[0].read_bytes() == paths[1].read_bytes()
