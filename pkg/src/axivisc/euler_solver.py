"""Inviscid transport xi_t + u . grad xi = g by semi-Lagrangian stepping.

Each cell center is traced back along the characteristic with the midpoint
rule and xi is interpolated at the foot.  Across the axis the field is extended
evenly, outside the box by zero.
"""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from .biot_savart import FaceVelocity, divergence_ratio, solve_streamfunction, velocity_at, velocity_from_streamfunction
from .config import SimConfig
from .diagnostics import force_work_rate
from .grid import Grid, RenormFunction, ScalarField, apply_renorm, lp_norm_3d
from .ns_solver import NonFiniteError, TruncationError, _check_finite, cfl_dt
from .trajectory import Trajectory, pkey

PAD = 3


def _padded(data: np.ndarray) -> np.ndarray:
    ext = np.concatenate([data[PAD - 1::-1], data, np.zeros((PAD,) + data.shape[1:])], axis=0)
    return np.pad(ext, ((0, 0), (PAD, PAD)))


def _index_coords(grid: Grid, r, z):
    return (np.asarray(r) / grid.dr - 0.5 + PAD, (np.asarray(z) - grid.zmin) / grid.dz - 0.5 + PAD)


def _catmull_rom_weights(t):
    t2, t3 = t * t, t * t * t
    return (-0.5 * t3 + t2 - 0.5 * t, 1.5 * t3 - 2.5 * t2 + 1.0, -1.5 * t3 + 2.0 * t2 + 0.5 * t, 0.5 * t3 - 0.5 * t2)


def interpolate(xi: ScalarField, r, z, method: str = "bilinear") -> np.ndarray:
    """Evaluate xi at arbitrary points.

    ``bilinear`` is monotone; ``cubic`` is Catmull-Rom clipped to the range of
    the surrounding four cells, which keeps it bounded by the local data.
    """
    g = xi.grid
    q = _padded(xi.data)
    ci, cj = _index_coords(g, r, z)
    lim_i, lim_j = q.shape[0] - 1.000001, q.shape[1] - 1.000001
    ci = np.clip(ci, 0.0, lim_i)
    cj = np.clip(cj, 0.0, lim_j)
    if method == "bilinear":
        return ndimage.map_coordinates(q, [ci, cj], order=1, mode="nearest")
    if method != "cubic":
        raise ValueError(f"unknown interpolation {method!r}")
    i0 = np.floor(ci).astype(int)
    j0 = np.floor(cj).astype(int)
    wi = _catmull_rom_weights(ci - i0)
    wj = _catmull_rom_weights(cj - j0)
    qp = np.pad(q, 1, mode="edge")  # room for the outer stencil points
    out = np.zeros(np.shape(ci))
    for a in range(4):
        for b in range(4):
            out += wi[a] * wj[b] * qp[i0 + a, j0 + b]
    corners = np.stack([qp[i0 + 1 + a, j0 + 1 + b] for a in (0, 1) for b in (0, 1)])
    return np.clip(out, corners.min(axis=0), corners.max(axis=0))


def _velocity(vel: FaceVelocity, r, z):
    ur, uz = velocity_at(vel, r, z)
    return np.where(np.asarray(r) < 0, -ur, ur), uz


def backtrace(vel: FaceVelocity, dt: float):
    """Feet of the characteristics ending at every cell center after time dt (midpoint rule)."""
    g = vel.grid
    rr, zz = g.mesh()
    ur, uz = _velocity(vel, rr, zz)
    rm, zm = rr - 0.5 * dt * ur, zz - 0.5 * dt * uz
    ur, uz = _velocity(vel, rm, zm)
    return rr - dt * ur, zz - dt * uz


def outside_feet(grid: Grid, rf, zf) -> int:
    """Feet farther than one cell layer past the outer box edges."""
    out = (rf > grid.R + grid.dr) | (zf < grid.zmin - grid.dz) | (zf > grid.zmax + grid.dz)
    return int(np.count_nonzero(out))


def step_euler_sl(xi: ScalarField, vel: FaceVelocity, g_now: ScalarField | None, dt: float,
                  method: str = "bilinear", return_outside: bool = False):
    """One semi-Lagrangian step with a frozen velocity; g_now is the midpoint forcing."""
    rf, zf = backtrace(vel, dt)
    new = interpolate(xi, rf, zf, method).reshape(xi.grid.shape)
    if g_now is not None:
        new = new + dt * g_now.data
    _check_finite(new, xi.grid)
    out = xi.with_data(new)
    if return_outside:
        return out, outside_feet(xi.grid, rf, zf)
    return out


def _average(a: FaceVelocity, b: FaceVelocity) -> FaceVelocity:
    return FaceVelocity(a.grid, 0.5 * (a.Fr + b.Fr), 0.5 * (a.Fz + b.Fz))


class _Reconstruct:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.max_div = 0.0
        self.max_boundary = 0.0

    def __call__(self, xi: ScalarField) -> FaceVelocity:
        s = solve_streamfunction(xi, self.cfg.bc)
        vel = velocity_from_streamfunction(s)
        self.max_div = max(self.max_div, divergence_ratio(vel, s.psi))
        speed = vel.max_speed()
        if speed > 0:
            ratio = vel.boundary_tangential() / speed
            self.max_boundary = max(self.max_boundary, ratio)
            if ratio > self.cfg.truncation_threshold:
                raise TruncationError(
                    f"tangential velocity on the box edge is {ratio:.2e} of max|u| "
                    f"(threshold {self.cfg.truncation_threshold:g}); enlarge the box")
        return vel


def run_euler(cfg: SimConfig, velocity_history: list | None = None, initial: ScalarField | None = None,
              record_velocity: list | None = None) -> Trajectory:
    """Coupled inviscid run (nu in cfg is ignored).

    A step predicts xi* with u^n, rebuilds u* from xi*, and redoes the step with
    the averaged velocity (u^n + u*)/2.  Passing ``velocity_history`` (a list of
    (dt, velocity) pairs) replays a prescribed velocity instead, which is how a
    second field is transported by the same flow; ``record_velocity`` collects
    such a history.
    """
    traj = Trajectory("euler", 0.0)
    xi = cfg.initial() if initial is None else initial
    force = cfg.forcing()
    forced = not cfg.force.is_zero()
    P = tuple(cfg.P) if 2.0 in cfg.P else tuple(cfg.P) + (2.0,)
    recon = _Reconstruct(cfg)
    row = {"t": 0.0, "dt": 0.0, "div": 0.0, "boundary": 0.0, "outside": 0.0}
    for p in P:
        row["norm_" + pkey(p)] = lp_norm_3d(xi, p)
        row["gint_" + pkey(p)] = 0.0
        if p != np.inf:
            row["work_" + pkey(p)] = 0.0
    traj.record(**row)
    traj.add_sample(0.0, xi)
    totals = {k: 0.0 for k in row if k.startswith(("gint_", "work_"))}
    outside = 0
    samples = cfg.sample_times
    t = 0.0
    k = 1
    step = 0
    while k < len(samples):
        target = samples[k]
        if velocity_history is not None:
            dt, vel = velocity_history[step]
        else:
            u0 = recon(xi)
            dt = cfl_dt(u0, 0.0, cfg.grid, cfg.cfl, remaining=target - t)
            g_mid = force(t + 0.5 * dt) if forced else None
            pred = step_euler_sl(xi, u0, g_mid, dt, cfg.interp)
            vel = _average(u0, recon(pred))
        if record_velocity is not None:
            record_velocity.append((dt, vel))
        g_mid = force(t + 0.5 * dt)
        xi_new, n_out = step_euler_sl(xi, vel, g_mid if forced else None, dt, cfg.interp, return_outside=True)
        outside += n_out
        if forced:
            g0, g1 = force(t), force(t + dt)
            for p in P:
                totals["gint_" + pkey(p)] += dt * lp_norm_3d(g_mid, p)
                if p != np.inf:
                    totals["work_" + pkey(p)] += 0.5 * dt * (force_work_rate(xi, g0, p) + force_work_rate(xi_new, g1, p))
        xi = xi_new
        t = target if dt == target - t else t + dt
        row = dict(totals)
        row.update(t=t, dt=dt, div=recon.max_div, boundary=recon.max_boundary, outside=float(outside))
        for p in P:
            row["norm_" + pkey(p)] = lp_norm_3d(xi, p)
        traj.record(**row)
        if t == target:
            traj.add_sample(t, xi)
            k += 1
        step += 1
    return traj


def renormalization_defect(cfg: SimConfig, beta: RenormFunction) -> float:
    """sup_t ||beta(xi(t)) - eta(t)||_{L1}, eta transported from beta(xi_0) by the same velocity."""
    if not cfg.force.is_zero():
        raise ValueError("the renormalization defect is defined for unforced runs only")
    history: list = []
    main = run_euler(cfg, record_velocity=history)
    eta0 = apply_renorm(main.snapshots[0], beta)
    shadow = run_euler(cfg, velocity_history=history, initial=eta0)
    return float(max(lp_norm_3d(apply_renorm(a, beta) - b, 1) for a, b in zip(main.snapshots, shadow.snapshots)))


__all__ = ["NonFiniteError", "backtrace", "interpolate", "renormalization_defect", "run_euler", "step_euler_sl"]
