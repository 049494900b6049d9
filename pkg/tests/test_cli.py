import subprocess
import sys

import numpy as np
import pytest

from axivisc.cli import main
from axivisc.io import read_csv, read_snapshot

SMALL = """grid.nr = 16
grid.nz = 32
sim.T = 0.25
sim.samples = 3
sweep.nu_max = 0.02
sweep.count = 3
"""


def write_cfg(tmp_path, extra=""):
    p = tmp_path / "c.cfg"
    p.write_text(SMALL + f"out.dir = {tmp_path / 'out'}\n" + extra)
    return p


def listing(path):
    return sorted(p.relative_to(path).as_posix() for p in path.rglob("*"))


def test_run_writes_snapshots_and_budget(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    assert main(["run", str(cfg)]) == 0
    out = tmp_path / "out"
    assert listing(out) == ["budget.csv", "snapshot_000.axv", "snapshot_001.axv", "snapshot_002.axv"]
    f, t = read_snapshot(out / "snapshot_002.axv")
    assert t == 0.25 and f.grid.shape == (16, 32)
    header, rows = read_csv(out / "budget.csv")
    assert header[:2] == ["t", "dt"] and rows[-1][0] == 0.25
    assert "snapshots written" in capsys.readouterr().out


def test_run_euler_with_out_override(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["run", str(cfg), "--solver", "euler", "--out", str(tmp_path / "e")]) == 0
    assert (tmp_path / "e" / "snapshot_000.axv").exists()
    assert not (tmp_path / "out").exists()


def test_sweep_side_effects_confined_to_out_dir(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, "sweep.floor = 0\n")
    monkeypatch.chdir(tmp_path)
    assert main(["sweep", str(cfg)]) == 0
    assert listing(tmp_path) == ["c.cfg", "out", "out/dissipation.svg", "out/distance.svg", "out/report.csv",
                                 "out/summary.txt", "out/timings.csv"]


def test_plot_rerenders(tmp_path):
    cfg = write_cfg(tmp_path, "sweep.floor = 0\n")
    assert main(["sweep", str(cfg)]) == 0
    assert main(["plot", str(tmp_path / "out" / "report.csv"), "--out", str(tmp_path / "p")]) == 0
    assert listing(tmp_path / "p") == ["dissipation.svg", "distance.svg"]
    assert (tmp_path / "p" / "distance.svg").read_bytes() == (tmp_path / "out" / "distance.svg").read_bytes()


def test_plot_missing_csv_is_config_error(tmp_path):
    assert main(["plot", str(tmp_path / "nope.csv")]) == 2


@pytest.mark.parametrize("extra, code", [("bogus = 1\n", 2), ("sweep.count = 1\n", 2), ("sim.cfl = 3\n", 2)])
def test_config_errors_exit_2(tmp_path, capsys, extra, code):
    cfg = write_cfg(tmp_path, extra)
    assert main(["sweep", str(cfg)]) == code
    assert "config error" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_missing_config_exit_2(tmp_path):
    assert main(["run", str(tmp_path / "missing.cfg")]) == 2


def test_runtime_failure_exit_1(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "sim.truncation = 1e-6\ndomain.R = 1.5\ndomain.zmin = -1.5\ndomain.zmax = 1.5\n")
    assert main(["run", str(cfg)]) == 1
    assert "enlarge the box" in capsys.readouterr().err


def test_failed_rung_exit_1(tmp_path, monkeypatch):
    import axivisc.sweep as sw

    def boom(sim):
        raise FloatingPointError("non-finite vorticity")

    monkeypatch.setattr(sw, "run_ns", boom)
    assert main(["sweep", str(write_cfg(tmp_path, "sweep.floor = 0\n"))]) == 1
    assert (tmp_path / "out" / "report.csv").exists()


def test_validate_quick_passes(capsys):
    assert main(["validate"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) >= 6 and all(line.startswith("PASS") for line in lines)


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "axivisc.cli", "run", str(write_cfg(tmp_path))],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert np.isfinite(read_snapshot(tmp_path / "out" / "snapshot_001.axv")[0].data).all()
