"""Vanishing-viscosity sweep: one inviscid reference, a geometric ladder of viscous runs."""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .config import SimConfig, SweepConfig
from .euler_solver import run_euler
from .grid import lp_norm_3d
from .io import REPORT_COLUMNS, fmt, write_csv
from .ns_solver import run_ns
from .plot import emit_svg_lineplot
from .trajectory import Trajectory

DIST_P = (1.0, 2.0, 4.0)


class InsufficientPointsError(ValueError):
    pass


def fit_rate(points, floor: float = 0.0):
    """Least-squares line through (log nu, log err) for err > floor -> (slope, intercept, used)."""
    use = [(n, e) for n, e in points if e > floor and n > 0]
    if len(use) < 2:
        raise InsufficientPointsError("insufficient points above floor")
    x = np.log([n for n, _ in use])
    y = np.log([e for _, e in use])
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept), len(use)


def mollification_index(sim: SimConfig, nu: float) -> int:
    """n(nu) for the mollified data family: width 1/n = max(sqrt(nu), 2 max(dr, dz))."""
    g = sim.grid
    return max(1, int(math.floor(1.0 / max(math.sqrt(nu), 2.0 * max(g.dr, g.dz)))))


@dataclass
class SweepRow:
    nu: float
    sup_dist: dict = field(default_factory=dict)  # p -> sup_t ||xi_nu - xi_E||_p
    anom_diss: float = math.nan
    max_tail: float = math.nan  # sup_t tail^2 / ||xi(t)||_2^2 at the first probe radius
    energy_defect: float = math.nan
    wall_ms: float = math.nan
    error: str = ""

    @property
    def failed(self) -> bool:
        return bool(self.error)

    def as_dict(self, with_wall: bool = True) -> dict:
        d = {"nu": self.nu, "anom_diss": self.anom_diss, "max_tail": self.max_tail,
             "energy_defect": self.energy_defect, "wall_ms": self.wall_ms if with_wall else math.nan}
        for p in DIST_P:
            d[f"sup_dist_p{p:g}"] = self.sup_dist.get(p, math.nan)
        return d


@dataclass
class SweepReport:
    rows: list
    floor: dict  # p -> Euler self-distance between h and h/2 (nan when not measured)
    fits: dict  # p -> (slope, intercept, used) or an error string
    fingerprint: str
    floor_factor: float = 5.0
    trajectories: dict = field(default_factory=dict)  # nu -> Trajectory, filled on request
    reference: Trajectory | None = None

    def distances(self, p: float = 2.0) -> list[float]:
        return [r.sup_dist.get(p, math.nan) for r in self.rows]

    def rungs_above_floor(self, p: float = 2.0) -> int:
        """Length of the leading run of rungs that are strictly decreasing and above floor_factor * floor."""
        cut = self.floor_factor * self.floor.get(p, 0.0)
        d = self.distances(p)
        k = 0
        while k < len(d) and d[k] > cut and (k == 0 or d[k] < d[k - 1]):
            k += 1
        return k


def _tail_ratio(traj: Trajectory, radius: float) -> float:
    tails, _ = dg.tail_mass_series(traj, 2.0, [radius])[float(radius)]
    full = np.array([lp_norm_3d(f, 2.0) ** 2 for f in traj.snapshots])
    ratio = np.divide(tails, full, out=np.zeros_like(tails), where=full > 0)
    return float(ratio.max())


def _viscous_job(args):
    sim, nu = args
    t0 = time.perf_counter()
    try:
        traj = run_ns(sim)
    except Exception as e:  # recorded on the row, the sweep carries on
        return nu, None, f"{type(e).__name__}: {e}", (time.perf_counter() - t0) * 1e3
    return nu, traj, "", (time.perf_counter() - t0) * 1e3


def viscous_config(cfg: SweepConfig, nu: float) -> SimConfig:
    sim = cfg.sim.with_(nu=nu)
    if cfg.mollified_family:
        sim = sim.with_(mollify_n=mollification_index(sim, nu))
    return sim


def euler_config(cfg: SweepConfig) -> SimConfig:
    return cfg.sim.with_(nu=0.0, interp=cfg.euler_interp)


def resolution_floor(sim: SimConfig, reference: Trajectory | None = None) -> dict:
    """Inviscid self-distance between h and h/2, the finer run restricted to the coarse grid."""
    ref = run_euler(sim) if reference is None else reference
    fine = run_euler(sim.with_(grid=sim.grid.refined(2)))
    fine_c = dg.restrict_trajectory(fine, sim.grid)
    return {p: dg.sup_t_lp_distance(ref, fine_c, p) for p in DIST_P}


def run_sweep(cfg: SweepConfig, out_dir: str | None = None, log=None, keep: bool = False) -> SweepReport:
    """Run the ladder and, when ``out_dir`` is given, write report.csv, summary.txt and plots there.

    ``keep`` retains every trajectory (viscous and reference) on the report.
    """
    say = log or (lambda msg: None)
    eul_cfg = euler_config(cfg)
    say(f"inviscid reference on {cfg.sim.grid.nr}x{cfg.sim.grid.nz}")
    euler = run_euler(eul_cfg)  # a failure here aborts the sweep
    floor = resolution_floor(eul_cfg, euler) if cfg.floor else {p: math.nan for p in DIST_P}
    radius = cfg.sim.radii[0] if cfg.sim.radii else math.inf
    jobs = [(viscous_config(cfg, nu), nu) for nu in cfg.ladder()]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as ex:
            results = list(ex.map(_viscous_job, jobs))
    else:
        results = [_viscous_job(j) for j in jobs]
    rows = []
    for nu, traj, err, wall in results:
        say(f"nu = {nu:g}: " + (err or "ok"))
        row = SweepRow(nu=nu, wall_ms=wall, error=err)
        if traj is not None:
            try:
                row.sup_dist = {p: dg.sup_t_lp_distance(traj, euler, p) for p in DIST_P}
                row.anom_diss = dg.anomalous_dissipation(traj)
                row.max_tail = _tail_ratio(traj, radius)
                row.energy_defect = dg.energy_balance_defect(traj).value
            except Exception as e:
                row.error = f"{type(e).__name__}: {e}"
        rows.append(row)
    rows.sort(key=lambda r: -r.nu)
    fits = {}
    for p in DIST_P:
        pts = [(r.nu, r.sup_dist[p]) for r in rows if not r.failed]
        cut = cfg.floor_factor * floor[p] if not math.isnan(floor[p]) else 0.0
        try:
            fits[p] = fit_rate(pts, cut)
        except InsufficientPointsError as e:
            fits[p] = str(e)
    report = SweepReport(rows, floor, fits, cfg.fingerprint(), cfg.floor_factor)
    if keep:
        report.trajectories = {nu: traj for nu, traj, _, _ in results if traj is not None}
        report.reference = euler
    if out_dir is not None:
        write_report(report, out_dir, with_wall=cfg.record_wall)
    return report


def write_report(report: SweepReport, out_dir, with_wall: bool = False) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv([r.as_dict(with_wall) for r in report.rows], out / "report.csv")
    write_csv([{"nu": r.nu, "wall_ms": r.wall_ms} for r in report.rows], out / "timings.csv", ("nu", "wall_ms"))
    lines = [f"config fingerprint: {report.fingerprint}"]
    for p in DIST_P:
        lines.append(f"floor p={p:g}: {fmt(report.floor[p])}")
        fit = report.fits[p]
        lines.append(f"fit p={p:g}: " + (fit if isinstance(fit, str) else
                                         f"slope {fmt(fit[0])} intercept {fmt(fit[1])} points {fit[2]}"))
    lines.append(f"rungs above {report.floor_factor:g}x floor (p=2): {report.rungs_above_floor(2.0)}")
    for r in report.rows:
        if r.failed:
            lines.append(f"failed nu={fmt(r.nu)}: {r.error}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    plot_report_files(out / "report.csv", out)


def plot_report_files(csv_path, out_dir) -> list[Path]:
    """Render distance and dissipation plots from a report CSV."""
    from .io import read_csv

    header, data = read_csv(csv_path)
    col = {h: i for i, h in enumerate(header)}
    out = Path(out_dir)
    written = []

    def positive(key):
        return [(row[col["nu"]], row[col[key]]) for row in data
                if row[col["nu"]] > 0 and row[col[key]] > 0 and math.isfinite(row[col[key]])]

    series = [(f"p = {k[-1]}", positive(k)) for k in ("sup_dist_p1", "sup_dist_p2", "sup_dist_p4")]
    path = out / "distance.svg"
    emit_svg_lineplot([s for s in series if s[1]], ("log", "log"), path,
                      title="sup_t distance to the inviscid run", xlabel="nu", ylabel="distance")
    written.append(path)
    path = out / "dissipation.svg"
    emit_svg_lineplot([("D2(T)", positive("anom_diss"))] if positive("anom_diss") else [], ("log", "log"), path,
                      title="cumulative L2 dissipation", xlabel="nu", ylabel="D2(T)")
    written.append(path)
    return written


@dataclass
class SplitRow:
    p: float
    direct: float  # ||xi_nu - xi||
    data_viscous: float  # ||xi_nu - xi_n_nu||
    cross: float  # ||xi_n_nu - xi_n||
    data_inviscid: float  # ||xi_n - xi||

    @property
    def bound(self) -> float:
        return self.data_viscous + self.cross + self.data_inviscid


def mollified_linearization_experiment(sim: SimConfig, n: int, nu: float | None = None,
                                       P=DIST_P, euler_interp: str = "cubic") -> list[SplitRow]:
    """Triangle split of ||xi_nu - xi|| through the runs with mollified data and force."""
    nu = sim.nu if nu is None else nu
    base = sim.with_(nu=nu, mollify_n=0)
    moll = base.with_(mollify_n=n)
    a = run_ns(base)
    b = run_ns(moll)
    c = run_euler(moll.with_(interp=euler_interp))
    d = run_euler(base.with_(interp=euler_interp))
    rows = []
    for p in P:
        row = SplitRow(p, dg.sup_t_lp_distance(a, d, p), dg.sup_t_lp_distance(a, b, p),
                       dg.sup_t_lp_distance(b, c, p), dg.sup_t_lp_distance(c, d, p))
        if row.direct > row.bound + 1e-10:
            raise AssertionError(f"triangle split violated at p={p:g}: {row.direct} > {row.bound}")
        rows.append(row)
    return rows


__all__ = ["REPORT_COLUMNS", "SweepReport", "SweepRow", "fit_rate", "mollified_linearization_experiment",
           "run_sweep", "resolution_floor"]
