import json
import subprocess
import sys

import numpy as np
import pytest

from stochmesh.cli import fmt, main
from stochmesh.config import ConfigError, load_config, parse_config

SINGULAR = """
[problem]
kind = "singular"

[sampling]
m = 400
n = 10
master_seed = 5

[study]
eval_ns = [10, 20]
mappings = ["uniform", "computed", "power:0.265"]
"""


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_fmt_roundtrip():
    for v in (0.1, 1 / 3, 1e-300, 123456789.123, np.float64(2.5)):
        assert float(fmt(v)) == float(v)
    assert fmt(3) == "3" and fmt(None) == "" and fmt(True) == "1" and fmt("a") == "a"


def test_study_outputs(tmp_path):
    cfg = write(tmp_path, SINGULAR)
    out = tmp_path / "out"
    assert main(["study", "--config", cfg, "--out", str(out), "--threads", "1"]) == 0
    for name in ("moments.csv", "mapping.csv", "convergence.csv", "manifest.json"):
        assert (out / name).exists()
    lines = (out / "convergence.csv").read_text().splitlines()
    assert lines[0] == "mapping,n,error_max,error_rms,runtime_ms"
    assert len(lines) == 7 and all(line.endswith(",") for line in lines[1:])
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["master_seed"] == 5 and manifest["config"]["problem"]["kind"] == "singular"
    assert {"started", "finished", "version", "stage_seconds"} <= set(manifest)
    mapping = np.loadtxt(out / "mapping.csv", delimiter=",", skiprows=1)
    assert mapping[0].tolist() == [0.0, 0.0] and mapping[-1].tolist() == [1.0, 1.0]


def test_study_rerun_is_byte_identical(tmp_path):
    cfg = write(tmp_path, SINGULAR)
    for d in ("a", "b"):
        assert main(["study", "--config", cfg, "--out", str(tmp_path / d), "--threads", "2"]) == 0
    for name in ("moments.csv", "mapping.csv", "convergence.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_override_and_timings(tmp_path):
    cfg = write(tmp_path, SINGULAR)
    out = tmp_path / "o"
    assert main(["study", "--config", cfg, "--out", str(out), "--seed", "99",
                 "--threads", "1", "--record-timings"]) == 0
    assert json.loads((out / "manifest.json").read_text())["master_seed"] == 99
    rows = (out / "convergence.csv").read_text().splitlines()[1:]
    assert all(float(r.split(",")[-1]) >= 0 for r in rows)


def test_density_output(tmp_path):
    cfg = write(tmp_path, SINGULAR + "density_u_bins = 6\n")
    out = tmp_path / "o"
    assert main(["study", "--config", cfg, "--out", str(out), "--threads", "1"]) == 0
    data = np.loadtxt(out / "density.csv", delimiter=",", skiprows=1)
    assert data.shape == (101 * 6, 5)
    area = (data[:, 1] - data[:, 0]) * (data[:, 3] - data[:, 2])
    assert np.sum(area * data[:, 4]) == pytest.approx(1.0)


@pytest.mark.parametrize("kind,header", [
    ("spectra", "n,min_mag,max_mag,uniform_min_mag,uniform_max_mag"),
    ("gaps", "n,median_max_gap,p90_max_gap,uniform_gap"),
    ("vbar", "m,n,vbar,rel_error_vs_reference"),
])
def test_diag_headers(tmp_path, kind, header):
    text = SINGULAR + "\n[diag]\nns = [3, 5]\nspectra_m = 30\nsamples_per_n = 30\nms = [50, 100]\nreference_m = 100\n"
    cfg = write(tmp_path, text)
    out = tmp_path / kind
    assert main(["diag", kind, "--config", cfg, "--out", str(out), "--threads", "1"]) == 0
    lines = (out / f"{kind}.csv").read_text().splitlines()
    assert lines[0] == header and len(lines) == (5 if kind == "vbar" else 3)


def test_exit_codes(tmp_path, capsys):
    assert main(["study", "--config", str(tmp_path / "missing.toml")]) == 2
    assert "config error" in capsys.readouterr().err
    bad = write(tmp_path, SINGULAR + "typo_key = 1\n", "bad.toml")
    assert main(["study", "--config", bad]) == 2
    with pytest.raises(SystemExit) as info:
        main(["diag", "histogram", "--config", bad])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["study"])
    assert info.value.code == 2
    failing = write(tmp_path, """
[problem]
kind = "hamilton-jacobi"
[problem.bfgs]
maxiter = 1
[sampling]
m = 20
n = 6
""", "fail.toml")
    assert main(["study", "--config", failing, "--out", str(tmp_path / "f"), "--threads", "1"]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        parse_config({"extra": {}})
    with pytest.raises(ConfigError):
        parse_config({"problem": {"kind": "singular", "frequency": 5}})
    with pytest.raises(ConfigError):
        parse_config({"problem": {"kind": "oscillatory", "frequency": 7}})
    with pytest.raises(ConfigError):
        parse_config({"problem": {"kind": "nope"}})
    with pytest.raises(ConfigError):
        parse_config({"sampling": {"m": 0, "n": 3}})
    with pytest.raises(ConfigError):
        parse_config({"criterion": {"kind": "q1", "smoothing_window": 4}})
    with pytest.raises(ConfigError):
        parse_config({"problem": {"kind": "singular"}, "sampling": {"m": 5, "n": 3},
                      "study": {"eval_ns": [20, 10]}}).study_config()
    with pytest.raises(ConfigError):
        parse_config({"diag": {"ns": []}})
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "[problem\n", "broken.toml"))
    cfg = parse_config({"problem": {"kind": "oscillatory", "frequency": 20}, "sampling": {"m": 5, "n": 3}},
                       seed=17)
    assert cfg.problem.frequency == 20 and cfg.sampling.master_seed == 17


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "stochmesh", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "stochmesh" in proc.stdout
