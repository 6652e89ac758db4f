import csv
import io
import json
import math
import subprocess
import sys

import pytest

from heisenvar import cli


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_variance_all_routes(capsys):
    code, out, _ = run(["variance", "-D", "1", "-R", "1", "--route", "all"], capsys)
    assert code == 0
    table = rows(out)
    routes = [r["route"] for r in table]
    assert routes == ["bessel", "hyp2f2", "quadrature", "spectral", "max_discrepancy"]
    assert float(table[-1]["variance"]) < 1e-7
    assert list(table[0]) == list(cli.COLUMNS)


def test_expand_coefficients(capsys):
    code, out, _ = run(["expand", "-D", "1", "--kmax", "1"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("prefactor,0.5641895835")
    assert lines[2] == "0,1"
    assert lines[3] == "1,-0.0625"


def test_expand_json(capsys):
    code, out, _ = run(["expand", "-D", "1", "--kmax", "1", "--output", "json"], capsys)
    data = json.loads(out)
    assert data["coefficients"] == [1, -0.0625]
    assert data["prefactor"] == pytest.approx(1 / math.sqrt(math.pi))


def test_classify(capsys):
    code, out, _ = run(["classify", "-D", "2", "--rmin", "10", "--rmax", "100", "-n", "20"],
                       capsys)
    rec = rows(out)[0]
    assert rec["label"] == "ClassI"
    assert abs(float(rec["fitted_exponent"]) - 3) < 0.05


def test_scan_is_deterministic(capsys):
    argv = ["scan", "-D", "2", "--rmin", "0.5", "--rmax", "20", "-n", "7", "--log"]
    _, a, _ = run(argv, capsys)
    _, b, _ = run(argv, capsys)
    assert a == b
    assert len(rows(a)) == 7


def test_sample_is_seeded(capsys):
    argv = ["sample", "-D", "1", "-R", "2", "--n-samples", "5000", "--seed", "9"]
    _, a, _ = run(argv, capsys)
    _, b, _ = run(argv, capsys)
    _, c, _ = run(argv[:-1] + ["10"], capsys)
    assert a == b
    assert a != c
    assert rows(a)[0]["route"] == "montecarlo"


def test_polydisk_window(capsys):
    code, out, _ = run(["ratio", "-D", "1", "-R", "2", "--window", "polydisk"], capsys)
    code2, out2, _ = run(["ratio", "-D", "1", "-R", "2"], capsys)
    assert float(rows(out)[0]["ratio"]) == pytest.approx(float(rows(out2)[0]["ratio"]),
                                                         rel=1e-10)


def test_usage_errors(capsys):
    assert run(["variance", "-D", "0", "-R", "1"], capsys)[0] == 2
    assert run(["scan", "-D", "1"], capsys)[0] == 2
    assert run(["variance", "-R", "1", "--window", "polydisk", "--route", "hyp2f2"], capsys)[0] == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["variance", "--route", "nonsense"])
    assert info.value.code == 2


def test_numeric_guard_exit(capsys):
    code, _, err = run(["variance", "-D", "1", "-R", "6", "--route", "hyp2f2"], capsys)
    assert code == 3
    assert "bessel" in err


def test_env_tolerance_override(monkeypatch, capsys):
    monkeypatch.setenv("HEISENVAR_REL_TOL", "not-a-number")
    assert run(["variance", "-R", "1"], capsys)[0] == 2
    monkeypatch.setenv("HEISENVAR_REL_TOL", "1e-10")
    assert run(["variance", "-R", "1"], capsys)[0] == 0


def test_verify_green(capsys):
    code, out, _ = run(["verify"], capsys)
    assert code == 0
    assert all(r["status"] == "pass" for r in rows(out))


def test_verify_failure_exit(monkeypatch, capsys):
    monkeypatch.setattr(cli, "verification_checks", lambda quad=None: [("broken", 1.0, 0.0)])
    code, _, err = run(["verify"], capsys)
    assert code == 4
    assert "broken" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "heisenvar", "mean", "-D", "2", "-R", "1"],
                         capture_output=True, text=True, check=True)
    assert rows(res.stdout)[0]["mean"] == "0.5"
