import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from primstab import cli
from primstab.reps import Representation, punctured_torus_sym, quasihyperbolic_example


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def sym2_file(tmp_path):
    path = tmp_path / "rep.json"
    punctured_torus_sym(3).dump(path)
    return path


def test_classify_quasi_hyperbolic(tmp_path, capsys):
    path = tmp_path / "qh.json"
    path.write_text(json.dumps(quasihyperbolic_example(2.0).tolist()))
    code, out, _ = run(capsys, "classify", "--matrix-file", str(path))
    assert code == 0
    assert json.loads(out) == {"kind": "QuasiHyperbolic", "alpha": 2.0, "beta": 0.25}


def test_parabolic_asymptotics(capsys):
    code, out, _ = run(capsys, "asymptotics", "parabolic", "--max-n", "5")
    rows = json.loads(out)
    assert code == 0 and [r["n"] for r in rows] == [1, 2, 3, 4, 5]
    for r in rows:
        n = r["n"]
        assert r["coefficient"] == n**4 + 5 * n**2 + 2
        assert set(r) == {"n", "coefficient", "alpha", "barycenter_angle"}
        assert r["barycenter_angle"] < 1e-9


def test_quasi_hyperbolic_asymptotics(capsys):
    code, out, _ = run(capsys, "asymptotics", "quasi-hyperbolic", "--alpha", "2", "--max-n", "3")
    rows = json.loads(out)
    assert code == 0 and len(rows) == 3
    assert rows[0]["mu"][2] == pytest.approx(-2 * np.log(2.0))
    assert rows[2]["theta"] < rows[1]["theta"]


def test_cartan_exact_power(tmp_path, capsys):
    path = tmp_path / "p.json"
    path.write_text(json.dumps([[1, 1, 1], [0, 1, 2], [0, 0, 1]]))
    code, out, _ = run(capsys, "cartan", "--matrix-file", str(path), "--power", "3")
    d = json.loads(out)
    assert code == 0
    assert np.allclose(d["lambda"], 0, atol=1e-5)
    assert d["mu"][0] > 0 and abs(sum(d["mu"])) < 1e-12
    assert d["translation_length"] == pytest.approx(0, abs=1e-5)


def test_whitehead_commutator_square(capsys):
    code, out, _ = run(capsys, "whitehead", "--word", "abABabAB", "--blocking-cutoff", "10")
    d = json.loads(out)
    assert code == 0
    assert d["obstruction"] and not d["primitive"] and d["blocking"] and d["witness"] is None


def test_grassmann_subcommands(tmp_path, capsys):
    path = tmp_path / "g.json"
    path.write_text(json.dumps(quasihyperbolic_example(2.0).tolist()))
    code, out, _ = run(capsys, "grassmann", "rank-classify", "--matrix-file", str(path))
    assert code == 0 and json.loads(out)["limit_rank"] == 1
    tp = tmp_path / "tp.json"
    tp.write_text(json.dumps([[2, 1], [1, 1]]))
    code, out, _ = run(capsys, "grassmann", "tp-test", "--matrix-file", str(tp))
    assert json.loads(out) == {"totally_positive": True}


def test_rep_make_and_perturb_are_deterministic(tmp_path, capsys):
    a, b, p1, p2 = (tmp_path / f"{x}.json" for x in "abcd")
    for target in (a, b):
        assert run(capsys, "rep", "make", "--preset", "punctured-torus-sym", "3", "--out", str(target))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    for target in (p1, p2):
        assert run(capsys, "rep", "perturb", "--rep", str(a), "--eps", "1e-3", "--seed", "7",
                   "--out", str(target))[0] == 0
    assert p1.read_bytes() == p2.read_bytes()
    assert Representation.load(p1).fingerprint() != Representation.load(a).fingerprint()


def test_certify_pass_json_and_csv(sym2_file, tmp_path, capsys):
    out, table = tmp_path / "cert.json", tmp_path / "cert.csv"
    code, _, err = run(capsys, "certify", "--rep", str(sym2_file), "--max-length", "4",
                       "--out", str(out), "--csv", str(table))
    assert code == 0 and "certified up to L=4" in err
    cert = json.loads(out.read_text())
    assert cert["verdict"] == "pass" and cert["L"] == 4
    assert {"rep_sha", "L", "tolerances", "classes", "global", "verdict"} <= set(cert)
    with open(table, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["word"] for r in rows] == [c["word"] for c in cert["classes"]]
    assert all(r["pass"] == "True" for r in rows)


def test_certify_is_byte_identical_across_thread_counts(sym2_file, tmp_path, capsys):
    outs = []
    for threads in ("1", "2"):
        path = tmp_path / f"cert{threads}.json"
        run(capsys, "certify", "--rep", str(sym2_file), "--max-length", "3", "--threads", threads,
            "--out", str(path))
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_certify_fail_exit_code(tmp_path, capsys):
    # a primitive generator sent to a unipotent cannot be loxodromic
    rep = Representation([np.array([[1.0, 1, 0], [0, 1, 1], [0, 0, 1]]), np.diag([2.0, 1, 0.5])])
    path = tmp_path / "bad.json"
    rep.dump(path)
    code, out, _ = run(capsys, "certify", "--rep", str(path), "--max-length", "2")
    assert code == 2
    cert = json.loads(out)
    assert cert["verdict"] == "fail" and "a" in cert["global"]["failed_words"]


def test_missing_and_malformed_inputs(tmp_path, capsys):
    code, _, err = run(capsys, "certify", "--rep", str(tmp_path / "missing.json"))
    assert code == 1 and "not found" in err and err.count("\n") == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "certify", "--rep", str(bad))
    assert code == 1 and "malformed JSON" in err
    bad.write_text(json.dumps({"rank": 2, "n": 3, "generators": [{"name": "a", "matrix": "x"}, {"name": "b", "matrix": "x"}]}))
    code, _, err = run(capsys, "certify", "--rep", str(bad))
    assert code == 1 and "generators[0]" in err


@pytest.mark.parametrize("argv", [
    [], ["certify"], ["certify", "--rep", "x.json", "--bogus"], ["grassmann"],
    ["asymptotics", "parabolic", "--max-n", "0"], ["certify", "--rep", "x", "--tol-eig", "-1"],
])
def test_usage_errors_exit_64(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(argv)
    assert exc.value.code == 64


def test_bad_word_and_preset_are_usage_errors(capsys):
    assert run(capsys, "whitehead", "--word", "ab9")[0] == 64
    assert run(capsys, "rep", "make", "--preset", "nope")[0] == 64


def test_threads_env_fallback(sym2_file, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("PRIMSTAB_THREADS", "2")
    assert run(capsys, "certify", "--rep", str(sym2_file), "--max-length", "2")[0] == 0
    monkeypatch.setenv("PRIMSTAB_THREADS", "zero")
    assert run(capsys, "certify", "--rep", str(sym2_file), "--max-length", "2")[0] == 64


def test_every_subcommand_has_help(capsys):
    for argv in (["whitehead"], ["cartan"], ["classify"], ["grassmann", "rank-classify"],
                 ["grassmann", "tp-test"], ["asymptotics", "parabolic"],
                 ["asymptotics", "quasi-hyperbolic"], ["limit-cone"], ["rep", "make"],
                 ["rep", "perturb"], ["certify"]):
        with pytest.raises(SystemExit) as exc:
            cli.main(argv + ["--help"])
        assert exc.value.code == 0
        assert len(capsys.readouterr().out.splitlines()) > 3


def test_limit_cone_csv(sym2_file, tmp_path, capsys):
    table = tmp_path / "cone.csv"
    code, out, _ = run(capsys, "limit-cone", "--rep", str(sym2_file), "--max-length", "3", "--out", str(table))
    summary = json.loads(out)
    with open(table, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert code == 0 and len(rows) == summary["directions"]
    assert set(rows[0]) == {"word", "lambda1", "lambda2", "lambda3", "x", "y", "on_wall"}
    assert summary["opposition_symmetric"]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "primstab", "certify", "--rep", str(tmp_path / "none.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 1 and proc.stderr.startswith("primstab:")
