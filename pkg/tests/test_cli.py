import json
import os

import numpy as np
import pytest

from smaplab.cli import RunReport, atomic_write, main
from smaplab.config import RunConfig, UsageError, parse_config, read_config_file
from smaplab.grid import make_grid, read_snapshot, write_snapshot
from smaplab.sphere_map import SphereField


def test_defaults_and_command_defaults():
    c = parse_config(["smap-run"])
    assert (c.dt, c.t_end, c.sample_every, c.grid_n) == (1e-4, 0.1, 100, 64)
    assert parse_config(["morawetz"]).grid_len == 24.0
    assert parse_config(["besov"]).grid_len == 20.0


def test_flag_overrides_file(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# comment\ngrid-n = 32\ndt = 5e-4   # trailing\ngaps = 3, 4\n\n")
    c = parse_config(["nls-run", "--config", str(f), "--dt", "2e-4"])
    assert c.grid_n == 32 and c.dt == 2e-4 and c.gaps == (3, 4)
    assert parse_config(["nls-run", "--no-gauge"]).gauge is False


@pytest.mark.parametrize("argv,kind", [
    (["nls-run", "--grid-n", "63"], "range"),
    (["nls-run", "--mu", "2"], "range"),
    (["nls-run", "--data", "file"], "missing"),
    (["nls-run", "--dt", "fast"], "syntax"),
    (["nls-run", "--bogus", "1"], "syntax"),
    (["frobnicate"], "syntax"),
])
def test_usage_error_kinds(argv, kind):
    with pytest.raises(UsageError) as ei:
        parse_config(argv)
    assert ei.value.kind == kind


def test_config_file_errors(tmp_path):
    f = tmp_path / "a.cfg"
    f.write_text("bogus = 1\n")
    with pytest.raises(UsageError) as ei:
        read_config_file(f)
    assert ei.value.kind == "unknown-key"
    f.write_text("dt 1e-3\n")
    with pytest.raises(UsageError) as ei:
        read_config_file(f)
    assert ei.value.kind == "syntax"


def test_exit_codes(tmp_path, capsys):
    assert main(["nls-run", "--grid-n", "63"]) == 2
    assert "range" in capsys.readouterr().err
    assert main(["nls-run", "--config", str(tmp_path / "absent.cfg")]) == 2
    assert main(["besov", "--grid-n", "32", "--out", str(tmp_path / "b")]) == 0


def test_failing_check_exit_one(tmp_path):
    out = tmp_path / "m"
    code = main(["morawetz", "--grid-n", "32", "--dt", "0.2", "--t-end", "0.4",
                 "--samples", "3", "--out", str(out)])
    assert code == 1
    rep = json.loads((out / "report.json").read_text())
    assert rep["passed"] is False
    assert "worst_row" in rep["checks"][0]["detail"]


def test_outputs_deterministic(tmp_path):
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        args = ["nls-run", "--grid-n", "32", "--grid-len", "12", "--t-end", "0.05", "--out", str(d)]
        assert main(args) == 0
        outs.append(d)
    for f in ("report.json", "nls.csv"):
        a, b = ((d / f).read_bytes() for d in outs)
        assert a.replace(b"/a", b"/x") == b.replace(b"/b", b"/x")
    assert (outs[0] / "timing.json").exists()


def test_out_env(tmp_path, monkeypatch):
    monkeypatch.setenv("SMAPLAB_OUT", str(tmp_path))
    assert parse_config(["heatflow"]).out_dir() == tmp_path / "heatflow"
    assert parse_config(["heatflow", "--out", "x"]).out_dir().name == "x"


def test_atomic_write_leaves_no_temp(tmp_path):
    p = tmp_path / "sub" / "f.txt"
    atomic_write(p, "one")
    atomic_write(p, b"two")
    assert p.read_bytes() == b"two"
    assert os.listdir(p.parent) == ["f.txt"]


def test_report_rejects_duplicate_check():
    r = RunReport("besov", {})
    r.check("x", 1.0, 2.0)
    with pytest.raises(ValueError):
        r.check("x", 1.0, 2.0)
    r.check("y", float("nan"), 1.0, passed=False)
    assert not r.passed and '"nan"' in r.to_json()


def test_snapshot_round_trip_and_file_input(tmp_path):
    g = make_grid(32, 12.0)
    u = SphereField.constant(g)
    path = tmp_path / "q.bin"
    write_snapshot(path, g, u.u)
    g2, comps = read_snapshot(path)
    assert g2 == g and np.array_equal(comps.real, u.u)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError, match="bytes"):
        read_snapshot(path)
    write_snapshot(path, g, u.u)
    out = tmp_path / "h"
    assert main(["heatflow", "--data", "file", "--input", str(path), "--out", str(out)]) == 0


def test_caloric_gauge_command(tmp_path):
    out = tmp_path / "c"
    assert main(["caloric-gauge", "--grid-n", "32", "--grid-len", "12", "--s-ratio", "1.1",
                 "--out", str(out)]) in (0, 1)
    g, comps = read_snapshot(out / "gauge_s0.bin")
    assert comps.shape == (4, 32, 32)


def test_besov_record(tmp_path):
    out = tmp_path / "b"
    assert main(["besov", "--grid-n", "32", "--grid-len", "12", "--out", str(out)]) == 0
    rec = json.loads((out / "besov.json").read_text())
    assert set(rec) == {"per_band_norms", "besov_norm", "envelope"}
    norms = rec["per_band_norms"]
    assert rec["besov_norm"] == pytest.approx(max(norms.values()), rel=1e-11)
    env = rec["envelope"]["values"]
    assert all(env[k] >= norms[k] * (1 - 1e-12) for k in norms)
