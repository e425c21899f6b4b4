import subprocess
import sys

import numpy as np
import pytest

from scdensity import cli


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def gauss_file(tmp_path):
    path = tmp_path / "data.txt"
    assert run("sample", "--dist", "gaussian", "--n", 200, "--seed", 1, "--output", path) == 0
    return path


def test_sample_file(gauss_file):
    lines = gauss_file.read_text().splitlines()
    assert len(lines) == 200
    assert all(np.isfinite(float(v)) for v in lines)


def test_estimate_happy_path(gauss_file, tmp_path):
    out = tmp_path / "est.csv"
    diag = tmp_path / "diag.csv"
    assert run("estimate", "--input", gauss_file, "--output", out, "--diagnostics", diag) == 0
    data = out.read_text()
    assert data.startswith("x,f\n") and "\r" not in data
    arr = np.loadtxt(out, delimiter=",", skiprows=1)
    assert arr.shape[1] == 2 and np.all(np.isfinite(arr))
    keys = [line.split(",")[0] for line in diag.read_text().splitlines()]
    assert keys == ["key", "n", "dt", "t_star", "threshold", "accepted_count", "negative_mass"]


@pytest.mark.parametrize("method", ["kg", "kt", "apt"])
def test_estimate_methods(gauss_file, tmp_path, method):
    out = tmp_path / "est.csv"
    assert run("estimate", "--input", gauss_file, "--output", out, "--method", method,
               "--x-min", -5, "--x-max", 5, "--x-count", 101) == 0
    arr = np.loadtxt(out, delimiter=",", skiprows=1)
    assert arr.shape == (101, 2)


def test_estimate_opt_needs_dist(gauss_file, tmp_path, capsys):
    assert run("estimate", "--input", gauss_file, "--method", "opt") == 2
    assert run("estimate", "--input", gauss_file, "--method", "opt", "--dist", "gaussian",
               "--output", tmp_path / "o.csv") == 0


def test_correct_negative_flag(gauss_file, tmp_path):
    out = tmp_path / "est.csv"
    assert run("estimate", "--input", gauss_file, "--output", out, "--correct-negative") == 0
    arr = np.loadtxt(out, delimiter=",", skiprows=1)
    assert np.all(arr[:, 1] >= 0)


def test_empty_input(tmp_path, capsys):
    path = tmp_path / "empty.txt"
    path.write_text("")
    assert run("estimate", "--input", path) == 2
    assert "TooFewPoints" in capsys.readouterr().err


def test_input_parsing(tmp_path, capsys):
    path = tmp_path / "d.txt"
    path.write_text("# header\n1.5\n\n  2.5 \n# more\n-3\n")
    assert list(cli.read_sample(str(path)).values) == [1.5, 2.5, -3.0]
    path.write_text("1.0\n2.0\nabc\n")
    assert run("estimate", "--input", path) == 2
    assert "line 3" in capsys.readouterr().err
    path.write_text("1.0\nnan\n2.0\n")
    assert run("estimate", "--input", path) == 2
    assert "line 2" in capsys.readouterr().err
    assert run("estimate", "--input", tmp_path / "missing.txt") == 2


def test_numerical_failure_exit_code(tmp_path, capsys):
    # two-point lattice: |Delta|^2 never drops below the flat-top level
    path = tmp_path / "lattice.txt"
    path.write_text("0\n1\n" * 50)
    assert run("estimate", "--input", path, "--method", "kt") == 3
    assert "NoQualifyingM" in capsys.readouterr().err


def test_flag_errors(capsys):
    assert run("sample", "--dist", "gaussian", "--n", 10) == 2  # --seed is required
    assert run("benchmark", "--dist", "gaussian", "--seed", 1, "--n-list", "1000,100") == 2
    assert run("benchmark", "--dist", "gaussian", "--seed", 1, "--n-list", "100", "--full") == 2
    assert run("nope") == 2
    assert run("estimate", "--help") == 0


def test_ecf_command(gauss_file, tmp_path):
    out = tmp_path / "ecf.csv"
    assert run("ecf", "--input", gauss_file, "--output", out, "--grid-points", 64) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,re,im,abs2"
    assert len(lines) == 1 + 129
    row = [float(v) for v in lines[65].split(",")]
    assert row == [0.0, 1.0, 0.0, 1.0]


def test_benchmark_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["benchmark", "--dist", "gaussian", "--estimators", "sc,kg", "--n-list", "100,1000",
            "--reps", 20, "--seed", 7]
    assert run(*args, "--output", a) == 0
    assert run(*args, "--output", b, "--threads", 2) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "dist,estimator,n,mise_mean,mise_stderr,reps,seed"
    assert len(lines) == 5


def test_benchmark_theory_rows(tmp_path):
    out = tmp_path / "b.csv"
    assert run("benchmark", "--dist", "cauchy", "--estimators", "kg", "--n-list", "100",
               "--reps", 3, "--seed", 1, "--theory", "--output", out) == 0
    names = [line.split(",")[1] for line in out.read_text().splitlines()[1:]]
    assert names == ["kg", "theory_opt", "theory_kg"]


def test_theory_command(tmp_path):
    out = tmp_path / "t.csv"
    assert run("theory", "--dist", "gaussian", "--bound", "ml", "--n-list", "1000", "--output", out) == 0
    assert out.read_text() == "n,value\n1000,%.17g\n" % (7 / (16 * np.sqrt(np.pi) * 1000))
    assert run("theory", "--dist", "comb", "--bound", "ml", "--n-list", "1000") == 2


def test_sensitivity_command(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert run("sensitivity", "--dist", "gaussian", "--n", 200, "--reps", 3, "--factors", "1,10",
               "--seed", 2, "--points-per-side", 32, "--output", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "factor,mean_change,stderr,ok,failed"
    assert lines[1].startswith("1,0,0,3,0")
    assert lines[2].endswith(",0,3")
    assert "OverrideOutOfGrid" in capsys.readouterr().err


def test_module_entry_point(gauss_file):
    proc = subprocess.run([sys.executable, "-m", "scdensity", "estimate", "--input", str(gauss_file),
                           "--x-count", "32"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "x,f"
    assert len(proc.stdout.splitlines()) == 33
