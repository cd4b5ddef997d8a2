import io
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from hadamard.cli import main, read_piecewise_csv, sidecar_path

KERNELS = Path(__file__).resolve().parents[1] / "kernels"


def run(*argv):
    out = io.StringIO()
    try:
        code = main(list(argv), stdout=out)
    except SystemExit as exc:  # argparse usage errors
        code = exc.code
    return code, out.getvalue()


def write_kernel(path, spec):
    path.write_text(json.dumps(spec), encoding="utf-8")
    return str(path)


def rows(text):
    return [line.split(",") for line in text.strip().splitlines()]


# -- eigentable -------------------------------------------------------------------------

def test_eigentable_identity():
    code, text = run("eigentable", "--kernel", str(KERNELS / "dirac_identity.json"),
                     "--alpha-max", "4")
    assert code == 0
    table = rows(text)
    assert table[0] == ["alpha_1", "m_alpha"]
    assert [float(r[1]) for r in table[1:]] == [1.0] * 5


def test_eigentable_dirac_a2():
    code, text = run("eigentable", "--kernel", str(KERNELS / "dirac_a2.json"), "--alpha-max", "4")
    assert code == 0
    assert [float(r[1]) for r in rows(text)[1:]] == [2.0 ** -(k + 1) for k in range(5)]


def test_eigentable_exp_symmetric_m0():
    code, text = run("eigentable", "--kernel", str(KERNELS / "exp_symmetric.json"),
                     "--alpha-max", "0")
    assert code == 0
    assert float(rows(text)[1][1]) == pytest.approx(0.227787745499, abs=1e-11)


def test_eigentable_writes_sidecar(tmp_path):
    out = tmp_path / "table.csv"
    code, text = run("eigentable", "--kernel", str(KERNELS / "gauss_log_2d.json"),
                     "--alpha-max", "1,2", "--out", str(out))
    assert code == 0 and text == ""
    assert rows(out.read_text())[0] == ["alpha_1", "alpha_2", "m_alpha"]
    meta = json.loads((tmp_path / "table.json").read_text())
    assert meta["alpha_max"] == [1, 2] and meta["kernel_path"] == "gauss_log_2d.json"


def test_eigentable_is_deterministic():
    args = ("eigentable", "--kernel", str(KERNELS / "exp_symmetric.json"), "--alpha-max", "3")
    assert run(*args)[1] == run(*args)[1]


def test_sidecar_names():
    assert sidecar_path("a/t.csv") == str(Path("a/t.json"))
    assert sidecar_path("t.out") == "t.out.json"


# -- convolve and transform ---------------------------------------------------------------

def test_convolve_identity_integrates_phi():
    code, text = run("convolve", "--kernel", str(KERNELS / "dirac_identity.json"))
    assert code == 0
    header, value = text.split()
    expected = math.sqrt(2 * math.pi) * 0.4 * math.exp(0.08)
    assert header == "star_pair" and float(value) == pytest.approx(expected, rel=1e-10)


def test_convolve_rejects_dirac_density(tmp_path):
    code, _ = run("convolve", "--kernel", str(KERNELS / "exp_symmetric.json"),
                  "--density", str(KERNELS / "dirac_a2.json"))
    assert code == 1


def test_transform_identity_round_trip(tmp_path):
    first = tmp_path / "phi.csv"
    code, _ = run("transform", "--kernel", str(KERNELS / "dirac_identity.json"),
                  "--grid-n", "128", "--out", str(first))
    assert code == 0
    second = tmp_path / "again.csv"
    code, _ = run("transform", "--kernel", str(KERNELS / "dirac_identity.json"),
                  "--input", str(first), "--out", str(second))
    assert code == 0
    assert first.read_text() == second.read_text()
    f = read_piecewise_csv(first)
    assert f.grid.n == (128,) and np.all(f[(-1,)].values == 0)


def test_transform_input_conflicts_with_grid(tmp_path):
    first = tmp_path / "phi.csv"
    run("transform", "--kernel", str(KERNELS / "dirac_identity.json"), "--grid-n", "64",
        "--out", str(first))
    code, _ = run("transform", "--kernel", str(KERNELS / "dirac_identity.json"),
                  "--input", str(first), "--grid-n", "64")
    assert code == 1


@pytest.mark.parametrize("content", ["", "e_1,t_1,value\n1,0,1\n", "x,y,z\n",
                                     "e_1,t_1,value\n2,0,1\n"])
def test_bad_input_tables(tmp_path, content):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    code, _ = run("transform", "--kernel", str(KERNELS / "dirac_identity.json"),
                  "--input", str(path))
    assert code == 1


# -- errors ---------------------------------------------------------------------------------

def test_corrupted_kernel_reports_location(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "dim": 1,\n  "terms": [\n')
    code, _ = run("eigentable", "--kernel", str(path))
    assert code == 1
    assert "line" in capsys.readouterr().err


def test_invalid_kernel_spec(tmp_path):
    path = write_kernel(tmp_path / "k.json", {"dim": 1, "terms": [{"kind": "density",
                                                                   "family": "nope"}]})
    assert run("eigentable", "--kernel", path)[0] == 1


def test_missing_kernel_file():
    assert run("eigentable", "--kernel", "/nonexistent/k.json")[0] == 1


def test_missing_kernel_flag():
    assert run("eigentable")[0] == 1


def test_usage_error_exits_one():
    assert run("eigentable", "--method", "slow")[0] == 1
    assert run("frobnicate")[0] == 1


def test_tol_only_for_verify():
    code, _ = run("eigentable", "--kernel", str(KERNELS / "dirac_identity.json"),
                  "--tol", "spectra.spread=1e-3")
    assert code == 1


def test_truncating_window_exits_two():
    code, _ = run("eigentable", "--kernel", str(KERNELS / "exp_symmetric.json"),
                  "--grid-window", "-1", "1")
    assert code == 2


def test_verify_unknown_tolerance():
    assert run("verify", "--tol", "no.such.check=1")[0] == 1


# -- verify and bench -------------------------------------------------------------------------

def test_verify_small_grid_passes(tmp_path):
    out = tmp_path / "report.json"
    code, _ = run("verify", "--grid-n", "512,64", "--out", str(out))
    report = json.loads(out.read_text())
    assert code == 0 and report["passed"] is True


def test_verify_impossible_tolerance_exits_three():
    code, text = run("verify", "--grid-n", "512,64", "--tol", "convolve.engines_1d=1e-30")
    assert code == 3
    failed = [c["name"] for c in json.loads(text)["checks"] if not c["passed"]]
    assert failed == ["convolve.engines_1d"]


def test_bench_small(tmp_path):
    out = tmp_path / "bench.csv"
    code, text = run("bench", "--sizes", "64,128", "--repeats", "1", "--out", str(out))
    assert code == 0 and "speedup" in text
    assert rows(out.read_text())[0] == ["n", "method", "median_s", "runs", "note"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hadamard", "eigentable", "--kernel",
                           str(KERNELS / "dirac_a2.json"), "--alpha-max", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[1:] == ["0,0.5", "1,0.25"]
