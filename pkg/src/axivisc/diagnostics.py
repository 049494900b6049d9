"""Budgets, distances and ratio probes evaluated on fields and trajectories."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, ScalarField, lp_norm_3d, lp_norm_tail
from .trajectory import Trajectory, pkey


def _weight(a: np.ndarray, p: float) -> np.ndarray:
    """|a|^(p-2) with 0^(negative) := 0."""
    if p == 2:
        return np.ones_like(a)
    mag = np.abs(a)
    if p > 2:
        return mag ** (p - 2)
    out = np.zeros_like(mag)
    nz = mag > 0
    out[nz] = mag[nz] ** (p - 2)
    return out


def dissipation_increment(xi: ScalarField, nu: float, p: float) -> float:
    """Rate nu * int |xi|^(p-2) |grad xi|^2 dmu_3 as a face sum.

    Radial faces carry measure 2 pi r_face dr dz, axial faces 2 pi r_i dr dz;
    the axis and outer faces carry no flux.  Multiply by dt for the increment.
    """
    if p == np.inf:
        raise ValueError("dissipation is undefined for p = inf")
    if p < 1:
        raise ValueError(f"norm exponent must be >= 1, got {p}")
    if nu == 0:
        return 0.0
    g = xi.grid
    d = xi.data
    w = _weight(d, p)
    dr_ = np.diff(d, axis=0) / g.dr
    wr = 0.5 * (w[1:] + w[:-1])
    rad = np.sum(wr * dr_ ** 2 * g.r_corners[1:-1, None])
    dz_ = np.diff(d, axis=1) / g.dz
    wz = 0.5 * (w[:, 1:] + w[:, :-1])
    ax = np.sum(wz * dz_ ** 2 * g.r[:, None])
    return float(nu * 2.0 * np.pi * g.dr * g.dz * (rad + ax))


def axis_dissipation_rate(xi: ScalarField, nu: float) -> float:
    """Boundary term of the discrete L2 balance from the first-order radial drift.

    Equals 4 pi nu dz sum_j (xi_0j^2 - xi_last,j^2); the continuum analogue is
    4 pi nu int xi(0, z)^2 dz.
    """
    g = xi.grid
    return float(4.0 * np.pi * nu * g.dz * np.sum(xi.data[0] ** 2 - xi.data[-1] ** 2))


def force_work_rate(xi: ScalarField, g: ScalarField, p: float) -> float:
    """int p |xi|^(p-2) xi g dmu_3."""
    if p == np.inf:
        raise ValueError("force work is undefined for p = inf")
    w = _weight(xi.data, p)
    return float(p * np.sum(w * xi.data * g.data * xi.grid.cell_measure()))


@dataclass(frozen=True)
class EnergyDefect:
    creation: float  # max positive part over sample times
    dissipation: float  # max of the negative part (extra numerical dissipation)
    signed: np.ndarray  # per-sample defect

    @property
    def value(self) -> float:
        return float(self.signed[np.argmax(np.abs(self.signed))]) if self.signed.size else 0.0


def energy_balance_defect(traj: Trajectory) -> EnergyDefect:
    """||xi(t)||^2 + 2 D_2(t) + A(t) - ||xi_0||^2 - work(t) at the sample times.

    A is the cumulative axis dissipation (zero for inviscid runs).
    """
    n = traj.at_samples("norm_2") ** 2
    s = n - n[0]
    for key, coef in (("D_2", 2.0), ("axis", 1.0), ("work_2", -1.0)):
        if key in traj.series:
            s = s + coef * traj.at_samples(key)
    return EnergyDefect(float(max(0.0, s.max())), float(max(0.0, -s.min())), s)


def anomalous_dissipation(traj: Trajectory) -> float:
    if "D_2" not in traj.series:
        return 0.0
    return float(traj.column("D_2")[-1])


def sup_t_lp_distance(a: Trajectory, b: Trajectory, p: float) -> float:
    if len(a.times) != len(b.times) or not np.array_equal(a.times, b.times):
        raise ValueError("trajectories have different sample times")
    return float(max(lp_norm_3d(x - y, p) for x, y in zip(a.snapshots, b.snapshots)))


def tail_mass_series(traj: Trajectory, p: float, radii) -> dict:
    """{radius: (per-sample tail values, sup over time)}."""
    out = {}
    for rad in radii:
        vals = np.array([lp_norm_tail(f, p, rad) for f in traj.snapshots])
        out[float(rad)] = (vals, float(vals.max()) if vals.size else 0.0)
    return out


def embedding_ratio(xi: ScalarField, p: float, bc: str = "free") -> float:
    """||u||_{L^q(H)} / ||omega||_{L^p(H)} with q = 2p/(2-p), plain dr dz measure."""
    from .biot_savart import reconstruct_velocity

    if not 1 < p <= 4.0 / 3.0:
        raise ValueError("embedding exponent must lie in (1, 4/3]")
    g = xi.grid
    om = xi.omega()
    den = float(np.sum(np.abs(om) ** p) * g.dr * g.dz) ** (1.0 / p)
    if den == 0.0:
        return 0.0
    ur, uz = reconstruct_velocity(xi, bc).cell_centered()
    q = 2.0 * p / (2.0 - p)
    num = float(np.sum(np.hypot(ur, uz) ** q) * g.dr * g.dz) ** (1.0 / q)
    return num / den


def level_set_measure(f: ScalarField, lam: float) -> float:
    """mu_3 measure of {xi > lam}."""
    return float(np.sum(np.where(f.data > lam, f.grid.cell_measure(), 0.0)))


def centroid_z(f: ScalarField) -> float:
    """Axial centroid int z xi dmu_3 / int xi dmu_3."""
    w = f.data * f.grid.cell_measure()
    total = float(np.sum(w))
    if total == 0.0:
        raise ValueError("centroid of a field with zero mass")
    return float(np.sum(w * f.grid.z[None, :]) / total)


def restrict(f: ScalarField, coarse: Grid) -> ScalarField:
    """Measure-weighted average of fine cells onto a grid coarser by an integer factor."""
    g = f.grid
    fr, fz = g.nr // coarse.nr, g.nz // coarse.nz
    if (fr * coarse.nr, fz * coarse.nz) != g.shape or (g.R, g.zmin, g.zmax) != (coarse.R, coarse.zmin, coarse.zmax):
        raise ValueError("grids are not nested")
    w = g.r[:, None] * f.data
    num = w.reshape(coarse.nr, fr, coarse.nz, fz).sum(axis=(1, 3))
    den = g.r.reshape(coarse.nr, fr).sum(axis=1)[:, None] * fz
    return ScalarField(coarse, num / den, f.role)


def restrict_trajectory(traj: Trajectory, coarse: Grid) -> Trajectory:
    out = Trajectory(traj.kind, traj.nu, list(traj.times), [restrict(f, coarse) for f in traj.snapshots],
                     {}, list(range(len(traj.times))))
    return out


def norm_series(traj: Trajectory, p: float) -> np.ndarray:
    return traj.at_samples("norm_" + pkey(p))
