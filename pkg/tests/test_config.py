from pathlib import Path

import numpy as np
import pytest

from _support import bench, ring
from axivisc.config import ConfigError, ForceSpec, InitSpec, SimConfig, load_sim, load_sweep, parse_text
from axivisc.io import write_snapshot

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_comments_and_blank_lines_ignored():
    v = parse_text("# header\n\ngrid.nr = 8   # trailing\nsim.nu=0.5\n")
    assert v == {"grid.nr": 8, "sim.nu": 0.5}


@pytest.mark.parametrize("text, message", [
    ("bogus = 1", "unknown key 'bogus'"),
    ("grid.nr", "expected 'key = value'"),
    ("grid.nr = eight", "bad value"),
    ("sim.nu = 1\nsim.nu = 2", "duplicate key"),
])
def test_parse_errors_name_the_line(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_text(text)


@pytest.mark.parametrize("text", [
    "sim.nu = -1", "sim.T = 0", "sim.cfl = 1.5", "sim.samples = 1", "sim.limiter = weno",
    "sim.diffusion = implicit", "sim.interp = spline", "domain.bc = periodic", "init.kind = sphere",
    "force.kind = wind", "grid.nr = 0", "domain.zmin = 2\ndomain.zmax = 1",
])
def test_invalid_values_rejected(text):
    with pytest.raises(ConfigError):
        load_sim(text)


@pytest.mark.parametrize("text", ["sweep.count = 2", "sweep.factor = 1", "sweep.nu_max = 0", "sweep.workers = 0",
                                  "sweep.euler_interp = nearest"])
def test_invalid_sweep_values_rejected(text):
    with pytest.raises(ConfigError):
        load_sweep(text)


def test_defaults():
    s = load_sim("")
    assert s == SimConfig()
    assert s.grid.shape == (128, 256) and s.bc == "free" and s.interp == "bilinear"
    w = load_sweep("")
    assert w.ladder()[0] == 1e-2 and w.count == 6 and w.euler_interp == "cubic" and not w.record_wall


def test_full_config_maps_every_field():
    s = load_sim((CONFIGS / "benchmark.cfg").read_text())
    assert s.grid == bench(128) and s.nu == 0.01 and s.samples == 16
    assert s.init == InitSpec("gaussian", 1.0, 0.0, 0.5, 1.0)
    s = load_sim("force.kind = pulse\nforce.amp = 0.3\nforce.mollify_n = 2\nsim.mollify_n = 3")
    assert s.force == ForceSpec("pulse", amp=0.3, mollify_n=2) and s.mollify_n == 3


def test_fingerprint_follows_text():
    a = load_sweep("sweep.count = 4")
    assert a.fingerprint() == load_sweep("sweep.count = 4").fingerprint()
    assert a.fingerprint() != load_sweep("sweep.count = 5").fingerprint()


def test_sample_times():
    assert np.allclose(SimConfig(T=2.0, samples=5).sample_times, [0, 0.5, 1, 1.5, 2])


def test_snapshot_initial_condition(tmp_path):
    write_snapshot(ring(16), 0.0, tmp_path / "s.axv")
    s = load_sim(f"grid.nr = 16\ngrid.nz = 32\ninit.kind = snapshot\ninit.path = {tmp_path / 's.axv'}")
    assert np.array_equal(s.initial().data, ring(16).data)
    wrong = load_sim(f"grid.nr = 8\ngrid.nz = 16\ninit.kind = snapshot\ninit.path = {tmp_path / 's.axv'}")
    with pytest.raises(ConfigError, match="lives on"):
        wrong.initial()


def test_shipped_configs_load():
    for path in CONFIGS.glob("*.cfg"):
        load_sweep(path.read_text())
