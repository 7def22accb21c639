import json
import math
import subprocess
import sys

import numpy as np
import pytest

from chiralrmt import __version__, cli
from chiralrmt.quadrature import QuadratureError
from chiralrmt.selftest import Check


def run_cli(tmp_path, *args, env_dir=True, monkeypatch=None):
    if monkeypatch is not None and env_dir:
        monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path))
    return cli.main(list(args))


def read_csv(path):
    lines = open(path).read().splitlines()
    head = [l for l in lines if l.startswith("#")]
    body = [l for l in lines if not l.startswith("#")]
    return head, body[0].split(","), [r.split(",") for r in body[1:]]


# --- parsing and exit codes ----------------------------------------------------------

@pytest.mark.parametrize("args", [
    [], ["bogus"], ["density", "--mu", "1.5"], ["density", "--n", "0"], ["density", "--grid", "1:0"],
    ["density", "--format", "xml"], ["mc-density", "--samples", "0"], ["corr", "--n", "1"],
    ["poly", "--j", "20"], ["groupint", "--a", "0.5,0.5"], ["density", "--mu", "1.0", "--n", "2"],
    ["mc-density", "--seed", "-1"],
])
def test_usage_errors_exit_1(args, tmp_path, monkeypatch, capsys):
    assert run_cli(tmp_path, *args, monkeypatch=monkeypatch) == cli.EXIT_USAGE
    assert "chiralrmt" in capsys.readouterr().err


def test_version_and_help(capsys):
    assert cli.main(["--version"]) == 0
    assert __version__ in capsys.readouterr().out
    assert cli.main(["density", "--help"]) == 0


def test_numeric_failure_exit_2(tmp_path, monkeypatch):
    def boom(cfg):
        raise QuadratureError("no convergence")

    monkeypatch.setitem(cli.HANDLERS, "density", boom)
    assert run_cli(tmp_path, "density", monkeypatch=monkeypatch) == cli.EXIT_NUMERIC


def test_selftest_pass_and_fail(tmp_path, monkeypatch, capsys):
    assert run_cli(tmp_path, "selftest", monkeypatch=monkeypatch) == cli.EXIT_OK
    err = capsys.readouterr().err
    assert "FAIL" not in err and "PASS" in err
    import chiralrmt.selftest as st

    monkeypatch.setattr(st, "run_checks", lambda: [Check("broken", False, "forced")])
    assert run_cli(tmp_path, "selftest", monkeypatch=monkeypatch) == cli.EXIT_SELFTEST


def test_grid_parse():
    g = cli.Grid.parse("0:2:5")
    np.testing.assert_allclose(g.values(), [0, 0.5, 1, 1.5, 2])
    for bad in ("0:2", "a:b:c", "0:2:1", "-1:2:5"):
        with pytest.raises(cli.UsageError):
            cli.Grid.parse(bad)


# --- outputs -----------------------------------------------------------------------

def test_density_csv_schema_and_provenance(tmp_path, monkeypatch):
    assert run_cli(tmp_path, "density", "--n", "3", "--mu", "0.5", "--grid", "0:5:41", monkeypatch=monkeypatch) == 0
    path = tmp_path / "density_n3_mu0.5.csv"
    head, cols, rows = read_csv(path)
    assert cols == ["lambda", "density"]
    assert len(rows) == 41
    keys = {h[2:].split(":")[0] for h in head}
    assert {"command_line", "version", "seed", "n", "mu"} <= keys
    assert any("chiralrmt density --n 3" in h for h in head)
    dens = np.array([float(r[1]) for r in rows])
    assert dens.min() >= -1e-10
    # floats round-trip
    assert all(float(r[0]) == float(f"{v:.17g}") for r, v in zip(rows, np.linspace(0, 5, 41)))


def test_json_stdout(monkeypatch, capsys):
    assert cli.main(["density", "--format", "json", "--output", "-", "--grid", "0:6:241"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["command_line"].startswith("chiralrmt density") and data["n"] == 4
    assert data["integral_trapezoid"] == pytest.approx(1.0, abs=1e-3)
    assert len(data["lambda"]) == 241


def test_output_dir_env(tmp_path, monkeypatch):
    sub = tmp_path / "out"
    sub.mkdir()
    monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(sub))
    assert cli.main(["poly", "--j", "2", "--mu", "1"]) == 0
    head, cols, rows = read_csv(sub / "poly_n2_mu1.csv")
    assert cols == ["power", "q", "q_tilde"]
    assert [float(r[1]) for r in rows] == [8.0, -8.0, 1.0, 0.0]


def test_poly_on_grid(tmp_path, monkeypatch):
    out = tmp_path / "p.csv"
    assert cli.main(["poly", "--j", "1", "--mu", "0.5", "--grid", "0:2:3", "--output", str(out)]) == 0
    _, cols, rows = read_csv(out)
    assert cols == ["lambda", "q", "q_tilde"]
    assert float(rows[1][1]) == pytest.approx(1 - 1.25)


def test_kernel_and_corr_schema(tmp_path, monkeypatch):
    out = tmp_path / "k.json"
    assert cli.main(["kernel", "--n", "2", "--mu", "0.5", "--grid", "0.5:2:3", "--format", "json", "--output", str(out)]) == 0
    d = json.load(open(out))
    assert set(["lambda1", "lambda2", "k", "g", "w"]) <= set(d)
    k = np.array(d["k"])
    ref = (np.array(d["lambda1"]) ** 2 - np.array(d["lambda2"]) ** 2) / (4 * math.pi * 0.25 * 0.75)
    np.testing.assert_allclose(k, ref, rtol=1e-12, atol=1e-14)
    out = tmp_path / "c.csv"
    assert cli.main(["corr", "--n", "2", "--grid", "0.5:2:3", "--output", str(out)]) == 0
    _, cols, rows = read_csv(out)
    assert cols == ["lambda1", "lambda2", "r2"]
    diag = [float(r[2]) for r in rows if r[0] == r[1]]
    assert all(abs(v) <= 1e-8 for v in diag)


def test_mc_density_and_compare(tmp_path, monkeypatch):
    out = tmp_path / "m.csv"
    assert cli.main(["mc-density", "--n", "2", "--samples", "5000", "--seed", "3", "--output", str(out)]) == 0
    head, cols, rows = read_csv(out)
    assert cols == ["bin_center", "density", "std_error"] and len(rows) == 50
    assert any(h == "# seed: 3" for h in head)
    out = tmp_path / "c.json"
    assert cli.main(["compare", "--n", "2", "--mu", "0.5", "--samples", "20000", "--seed", "3",
                     "--output", str(out)]) == 0
    d = json.load(open(out))
    assert set(["bin_center", "analytic", "histogram", "std_error", "z", "chi2_dof", "passed"]) <= set(d)
    assert d["passed"] is True


def test_groupint_command(tmp_path):
    out = tmp_path / "g.csv"
    assert cli.main(["groupint", "--a", "0.4,1.1", "--samples", "100000", "--seed", "5", "--output", str(out)]) == 0
    _, cols, rows = read_csv(out)
    assert cols == ["label", "analytic", "mc_mean", "mc_se"]
    label, exact, mean, se = rows[0]
    assert label == "N=2;xi=0;a=0.4/1.1"
    assert abs(float(exact) - float(mean)) <= 3 * float(se)


def test_svg_output(tmp_path):
    out = tmp_path / "d.svg"
    assert cli.main(["density", "--n", "2", "--grid", "0:4:50", "--format", "svg", "--output", str(out)]) == 0
    text = out.read_text()
    assert text.lstrip().startswith("<?xml") and "<svg" in text
    assert "chiralrmt density" in text  # provenance in the metadata


@pytest.mark.parametrize("fmt", ["csv", "json", "svg"])
def test_deterministic_bytes(tmp_path, fmt):
    p = tmp_path / f"r.{fmt}"
    outs = []
    for workers in ("1", "1", "3"):
        assert cli.main(["compare", "--n", "3", "--mu", "0.5", "--samples", "30000", "--seed", "11",
                         "--workers", workers, "--format", fmt, "--output", str(p)]) == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]
    if fmt != "svg":
        # the worker count enters the command-line header only; the data are identical
        strip = lambda b: [l for l in b.decode().splitlines() if "command_line" not in l]
        assert strip(outs[0]) == strip(outs[2])


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "chiralrmt", "poly", "--j", "1", "--mu", "0.5", "--output", "-"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0
    assert "# command_line: chiralrmt poly --j 1 --mu 0.5 --output -" in r.stdout


def test_density_example_trapezoid(tmp_path):
    out = tmp_path / "d.json"
    assert cli.main(["density", "--n", "4", "--mu", "0.1", "--grid", "0:5:200", "--format", "json",
                     "--output", str(out)]) == 0
    d = json.load(open(out))
    assert len(d["density"]) == 200
    assert d["integral_trapezoid"] == pytest.approx(1.0, abs=1e-3)
