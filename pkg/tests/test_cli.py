import json
import subprocess
import sys

import numpy as np
import pytest

from ctspline.cli import EXIT_IO, EXIT_NONCONVERGED, EXIT_OK, EXIT_USAGE, main
from ctspline.data_io import benchmark_reference, read_dataset
from ctspline.gramian import build_operator
from ctspline.lti_model import benchmark_system, system_to_dict


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def _csv(path):
    lines = path.read_text().splitlines()
    return lines[0], np.array([[float(v) for v in l.split(",")] for l in lines[1:]])


def test_synth(workdir, capsys):
    assert main(["synth", "--seed", "42", "--out", "d.csv"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "N = 501" in out and "T = 5.1" in out and "0.7071067811865476" in out
    ds = read_dataset(workdir / "d.csv")
    assert len(ds) == 501 and ds.times[0] == 0.1 and abs(ds.T - 5.1) < 1e-12
    main(["synth", "--seed", "42", "--out", "e.csv"])
    assert (workdir / "d.csv").read_bytes() == (workdir / "e.csv").read_bytes()
    main(["synth", "--variance", "0", "--out", "clean.csv"])
    clean = read_dataset(workdir / "clean.csv")
    np.testing.assert_array_equal(clean.values, benchmark_reference(clean.times))


def test_pipeline_l1_and_l2(workdir, capsys):
    main(["synth", "--seed", "3", "--out", "d.csv"])
    rc = main(["fit", "--preset", "paper", "--data", "d.csv", "--mode", "l1", "--p", "1",
               "--eta", "0.01", "--estimate-x0", "--out", "l1.json"])
    assert rc == EXIT_OK
    out = capsys.readouterr().out
    assert "objective =" in out and "iterations =" in out and "kkt_residual =" in out
    assert "|theta_i| > 0.001:" in out and "x0 = " in out
    record = json.loads((workdir / "l1.json").read_text())
    assert record["format"] == "ctspline-fit" and record["version"] == 1
    assert record["config"]["mode"] == "l1" and record["config"]["estimate_x0"] is True
    assert record["report"]["converged"] is True and len(record["x0"]) == 3

    assert main(["eval", "--fit", "l1.json", "--reference", "synth:3"]) == EXIT_OK
    out = capsys.readouterr().out
    rmse = float(out.split("rmse = ")[1].split()[0])
    assert rmse < 0.35
    header, curve = _csv(workdir / "curve.csv")
    assert header == "t,y,u" and curve.shape == (1001, 3)
    assert curve[0, 0] == 0.0 and curve[-1, 0] == record["times"][-1]
    header, coef = _csv(workdir / "coefficients.csv")
    assert header == "i,t_i,theta_i" and coef.shape == (501, 3)

    assert main(["fit", "--preset", "paper", "--data", "d.csv", "--mode", "l2",
                 "--lambda", "0.0001", "--out", "l2.json"]) == EXIT_OK
    assert "|theta_i| > 0.001: 501 of 501" in capsys.readouterr().out
    assert json.loads((workdir / "l2.json").read_text())["config"] == {
        "mode": "l2", "lambda": 0.0001, "weights": {"uniform": True}}


def test_eval_on_sample_grid_reproduces_g_theta(workdir):
    main(["synth", "--seed", "1", "--out", "d.csv"])
    main(["fit", "--preset", "paper", "--data", "d.csv", "--mode", "l1", "--p", "2", "--out", "f.json"])
    assert main(["eval", "--fit", "f.json", "--grid", "samples", "--curve-out", "c.csv"]) == EXIT_OK
    record = json.loads((workdir / "f.json").read_text())
    op = build_operator(benchmark_system(), record["times"])
    _, curve = _csv(workdir / "c.csv")
    assert np.abs(curve[:, 1] - op.G @ np.array(record["theta"])).max() <= 1e-10


def test_eval_zero_fit(workdir):
    times = (0.1 + 0.01 * np.arange(20)).tolist()
    record = {"format": "ctspline-fit", "version": 1, "system": system_to_dict(benchmark_system()),
              "times": times, "theta": [0.0] * 20, "x0": None, "config": {"mode": "l1"}, "report": None}
    (workdir / "z.json").write_text(json.dumps(record))
    assert main(["eval", "--fit", "z.json", "--grid", "11"]) == EXIT_OK
    _, curve = _csv(workdir / "curve.csv")
    assert np.all(curve[:, 1:] == 0.0)


def test_custom_system_and_csv_reference(workdir, capsys):
    (workdir / "sys.json").write_text(json.dumps({"A": [[-1.0]], "b": [1.0], "c": [1.0]}))
    t = 0.1 * np.arange(1, 31)
    (workdir / "d.csv").write_text("t,y\n" + "".join(f"{float(a)!r},{float(np.exp(-a))!r}\n" for a in t))
    assert main(["fit", "--system", "sys.json", "--data", "d.csv", "--mode", "l2", "--lambda", "1e-6"]) == EXIT_OK
    assert main(["eval", "--fit", "fit.json", "--reference", "d.csv"]) == EXIT_OK
    assert "max_abs = " in capsys.readouterr().out


def test_pipeline_is_byte_deterministic(workdir):
    outputs = []
    for k in range(2):
        main(["synth", "--seed", "5", "--out", f"d{k}.csv"])
        main(["fit", "--preset", "paper", "--data", f"d{k}.csv", "--estimate-x0", "--out", f"f{k}.json"])
        main(["eval", "--fit", f"f{k}.json", "--curve-out", f"c{k}.csv", "--coef-out", f"k{k}.csv"])
        outputs.append([(workdir / f"{p}{k}.{e}").read_bytes() for p, e in
                        (("d", "csv"), ("f", "json"), ("c", "csv"), ("k", "csv"))])
    assert outputs[0] == outputs[1]


@pytest.mark.parametrize(
    "argv",
    [
        ["fit", "--preset", "paper", "--data", "d.csv", "--mode", "l1", "--p", "3"],
        ["fit", "--data", "d.csv"],
        ["fit", "--preset", "paper", "--data", "d.csv", "--mode", "l2", "--p", "1"],
        ["fit", "--preset", "paper", "--data", "d.csv", "--eta", "-1"],
        ["fit", "--preset", "paper", "--data", "d.csv", "--mode", "l2", "--lambda", "0"],
        ["eval", "--fit", "f.json", "--grid", "1"],
        ["bogus"],
        [],
    ],
)
def test_usage_errors(workdir, argv):
    (workdir / "d.csv").write_text("t,y\n0.1,1\n0.2,2\n")
    assert main(argv) == EXIT_USAGE


def test_io_errors(workdir):
    assert main(["fit", "--preset", "paper", "--data", "missing.csv"]) == EXIT_IO
    (workdir / "bad.csv").write_text("t,y\n0.1,1\n0.1,2\n")
    assert main(["fit", "--preset", "paper", "--data", "bad.csv"]) == EXIT_IO
    assert main(["eval", "--fit", "missing.json"]) == EXIT_IO
    (workdir / "f.json").write_text('{"format": "other"}')
    assert main(["eval", "--fit", "f.json"]) == EXIT_IO
    (workdir / "s.json").write_text('{"A": [[0, 0], [0, 0]], "b": [1, 0], "c": [1, 0]}')
    (workdir / "d.csv").write_text("t,y\n0.1,1\n")
    assert main(["fit", "--system", "s.json", "--data", "d.csv"]) == EXIT_IO
    assert main(["synth", "--out", str(workdir / "no" / "such" / "dir.csv")]) == EXIT_IO


def test_nonconvergence_exit(workdir):
    main(["synth", "--out", "d.csv"])
    argv = ["fit", "--preset", "paper", "--data", "d.csv", "--max-iter", "5", "--no-polish"]
    assert main(argv) == EXIT_NONCONVERGED
    assert main(argv + ["--allow-nonconverged"]) == EXIT_OK
    assert (workdir / "fit.json").exists()


def test_module_entry_point(workdir):
    proc = subprocess.run([sys.executable, "-m", "ctspline", "synth", "--out", "d.csv"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "N = 501" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "ctspline", "fit"], capture_output=True, text=True)
    assert proc.returncode == EXIT_USAGE
