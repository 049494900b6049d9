"""Acceptance criteria, each at its stated tolerance; one PASS/FAIL line per criterion.

The ladder runs are shared through module-scoped fixtures so the suite stays
within desk-scale runtime.
"""
import time

import numpy as np
import pytest

from _support import ACCEPTANCE_LINES, bench, oracle_discrepancy, ring
from axivisc.biot_savart import biot_savart_direct
from axivisc.cli import main
from axivisc.config import ForceSpec, InitSpec, SimConfig, SweepConfig
from axivisc.diagnostics import centroid_z
from axivisc.euler_solver import renormalization_defect, run_euler
from axivisc.grid import hill_vortex, make_grid, smooth_clamp
from axivisc.sweep import run_sweep
from axivisc.validation import HEAT_EXPONENT, diffusion_error, heat_residual

P_ALL = (1.0, 2.0, 4.0, np.inf)
LADDER = dict(nu_max=1e-2, factor=0.5, count=6, workers=4)


def record(number: int, name: str, passed: bool, detail: str, started: float) -> bool:
    line = f"{'PASS' if passed else 'FAIL'}  [{number:2d}] {name:<34s} {detail}  ({time.perf_counter() - started:.1f}s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def benchmark_sim(**kw):
    return SimConfig(grid=bench(128), T=1.0, samples=16, P=P_ALL, **kw)


@pytest.fixture(scope="module")
def ladder():
    t0 = time.perf_counter()
    rep = run_sweep(SweepConfig(sim=benchmark_sim(), euler_interp="cubic", **LADDER), keep=True)
    return rep, time.perf_counter() - t0


@pytest.fixture(scope="module")
def forced_ladder():
    force = ForceSpec("bump", r0=1.0, z0=0.5, radius=0.5, amp=0.1, mollify_n=4)
    return run_sweep(SweepConfig(sim=benchmark_sim(force=force), floor=False, **LADDER), keep=True)


def test_c01_diffusion_oracle():
    t0 = time.perf_counter()
    residual = heat_residual(HEAT_EXPONENT, 1e-3)
    e64, e128 = diffusion_error(64), diffusion_error(128)
    ratio = e64 / e128
    ok = residual <= 1e-5 and e128 <= 2e-3 and 3.2 <= ratio <= 4.8
    detail = f"residual {residual:.1e} <= 1e-5, err {e128:.2e} <= 2e-3, ratio {ratio:.2f} in [3.2, 4.8]"
    assert record(1, "diffusion oracle", ok, detail, t0), detail
    assert time.perf_counter() - t0 <= 60


def test_c02_lp_transport_estimate(ladder, forced_ladder):
    t0 = time.perf_counter()
    rep, _ = ladder
    worst_free = -np.inf
    for traj in rep.trajectories.values():
        for p in P_ALL:
            key = "norm_" + ("inf" if p == np.inf else f"{p:g}")
            n = traj.at_samples(key)
            worst_free = max(worst_free, float(np.max(n / (n[0] * (1 + 1e-10)))))
    worst_forced = -np.inf
    for traj in forced_ladder.trajectories.values():
        for p in P_ALL:
            k = "inf" if p == np.inf else f"{p:g}"
            n, gi = traj.at_samples("norm_" + k), traj.at_samples("gint_" + k)
            assert gi[-1] > 0
            worst_forced = max(worst_forced, float(np.max((n - (n[0] + gi))[1:])))
    ok = worst_free <= 1.0 and worst_forced <= 1e-8 and len(rep.trajectories) == len(forced_ladder.trajectories) == 6
    detail = f"unforced max ratio {worst_free:.12f} <= 1, forced max excess over the bound {worst_forced:.2e} <= 1e-8"
    assert record(2, "Lp transport estimate", ok, detail, t0), detail


def test_c03_discrete_incompressibility(ladder, forced_ladder):
    t0 = time.perf_counter()
    rep, _ = ladder
    runs = list(rep.trajectories.values()) + list(forced_ladder.trajectories.values())
    runs += [rep.reference, forced_ladder.reference]
    worst = max(float(np.max(tr.column("div"))) for tr in runs)
    ok = worst <= 1e-13
    assert record(3, "discrete incompressibility", ok, f"max div ratio {worst:.1e} <= 1e-13 over {len(runs)} runs",
                  t0)


def test_c04_no_anomalous_dissipation(ladder):
    t0 = time.perf_counter()
    rep, wall = ladder
    d = [r.anom_diss for r in rep.rows]
    decreasing = all(b < a for a, b in zip(d, d[1:]))
    ratio = d[-1] / d[0]
    ok = decreasing and ratio <= 0.3 and wall <= 600
    detail = f"D2(T) {' > '.join(f'{v:.3g}' for v in d)}, ratio {ratio:.3f} <= 0.3, ladder {wall:.0f}s <= 600s"
    assert record(4, "no anomalous dissipation", ok, detail, t0), detail


def test_c05_strong_convergence(ladder):
    t0 = time.perf_counter()
    rep, _ = ladder
    d = rep.distances(2.0)
    cut = rep.floor_factor * rep.floor[2.0]
    k = rep.rungs_above_floor(2.0)
    # the decreasing run may only stop where the ladder reaches the floor
    ok = k >= 4 and (k == len(d) or d[k] <= cut)
    detail = f"sup_t L2 {', '.join(f'{v:.3g}' for v in d)}; 5x floor {cut:.2g}; {k} rungs above floor (>= 4)"
    assert record(5, "strong convergence", ok, detail, t0), detail


def test_c06_biot_savart_oracle():
    t0 = time.perf_counter()
    a, b = oracle_discrepancy(ring(64)), oracle_discrepancy(ring(128))
    ok = a <= 0.02 and b < a
    assert record(6, "Biot-Savart oracle equivalence", ok, f"64x128 {a:.2%} <= 2%, 128x256 {b:.2%} < 64x128", t0)


def test_c07_hill_vortex_translation():
    t0 = time.perf_counter()
    A, a = 1.0, 1.0
    W = 2.0 / 15.0 * A * a * a
    # oracle cross-check: fluid speed at the vortex center is 5W/2 in the lab frame
    axis = []
    for n in (64, 128, 256):
        g = make_grid(n, 2 * n, 4.0, -4.0, 4.0)
        axis.append(biot_savart_direct(hill_vortex(g, 0.0, a, A), [(g.dr, 0.0)])[0, 1])
    rich = 2 * axis[2] - axis[1]
    oracle_ok = abs(rich / (2.5 * W) - 1) <= 0.01
    cfg = SimConfig(grid=bench(256), T=0.2 * a / W, samples=6, init=InitSpec("hill", 0.0, -0.1, a, A),
                    interp="bilinear")
    tr = run_euler(cfg)
    speed = float(np.polyfit(tr.times, [centroid_z(f) for f in tr.snapshots], 1)[0])
    err = speed / W - 1
    ok = oracle_ok and abs(err) <= 0.05 and time.perf_counter() - t0 <= 300
    detail = (f"speed {speed:.5f} vs W {W:.5f} ({err:+.2%}, within 5%); "
              f"center u_z Richardson {rich:.5f} vs 5W/2 {2.5 * W:.5f}")
    assert record(7, "Hill's vortex translation", ok, detail, t0), detail


def test_c08_renormalization_defect():
    t0 = time.perf_counter()
    beta = smooth_clamp(0.1, 0.5)
    d64 = renormalization_defect(SimConfig(grid=bench(64), T=1.0, samples=16), beta)
    d128 = renormalization_defect(SimConfig(grid=bench(128), T=1.0, samples=16), beta)
    ok = d128 <= 2.0 / 3.0 * d64
    assert record(8, "renormalization defect", ok,
                  f"64x128 {d64:.4f}, 128x256 {d128:.4f}, ratio {d128 / d64:.3f} <= 0.667", t0)


def test_c09_tail_mass_uniformity(ladder):
    t0 = time.perf_counter()
    rep, _ = ladder
    worst = max(r.max_tail for r in rep.rows)
    ok = worst <= 1e-3
    assert record(9, "tail-mass uniformity", ok, f"sup tail/L2 mass at radius 3: {worst:.1e} <= 1e-3", t0)


def test_c10_determinism(tmp_path):
    t0 = time.perf_counter()
    text = "grid.nr = 32\ngrid.nz = 64\nsim.T = 0.5\nsim.samples = 4\nsweep.count = 3\nsweep.workers = 2\n"
    cfg = tmp_path / "d.cfg"
    cfg.write_text(text)
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "report.csv").read_bytes()
    b = (tmp_path / "b" / "report.csv").read_bytes()
    ok = a == b and len(a) > 0
    assert record(10, "determinism", ok, f"report.csv byte-identical across reruns ({len(a)} bytes)", t0)
