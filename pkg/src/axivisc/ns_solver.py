"""Viscous relative-vorticity equation on the half-plane.

    xi_t + u . grad xi = nu (xi_rr + (3/r) xi_r + xi_zz) + g,   xi_r = 0 on the axis.

Advection is in flux form with r-weighted face fluxes and minmod-limited upwind
reconstruction; diffusion splits the radial operator into the r-measure
symmetric part (1/r)(r xi_r)_r and the centered drift (2/r) xi_r.  Time
stepping is Heun's method with the velocity refreshed at each stage.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from . import diagnostics as dg
from .biot_savart import FaceVelocity, divergence_ratio, solve_streamfunction, velocity_from_streamfunction
from .config import SimConfig
from .grid import Grid, ScalarField, lp_norm_3d
from .trajectory import Trajectory, pkey


class NonFiniteError(FloatingPointError):
    pass


class TruncationError(RuntimeError):
    pass


def minmod(a, b):
    return np.where(a * b > 0.0, np.where(np.abs(a) < np.abs(b), a, b), 0.0)


def _pad(xi: np.ndarray, n: int = 2) -> np.ndarray:
    """Ghost layers: even mirror across the axis, zeros past the outer edges."""
    ext = np.concatenate([xi[n - 1::-1], xi, np.zeros((n,) + xi.shape[1:])], axis=0)
    return np.pad(ext, ((0, 0), (n, n)))


def _face_values(q: np.ndarray, axis: int, limiter: str):
    """Left and right states at every face along `axis` of a 2-ghost padded array."""
    q = np.moveaxis(q, axis, 0)
    if limiter == "centered":
        mid = 0.5 * (q[1:-2] + q[2:-1])
        return np.moveaxis(mid, 0, axis), np.moveaxis(mid, 0, axis)
    d = np.diff(q, axis=0)
    slope = minmod(d[:-1], d[1:])  # slopes for padded cells 1 .. n-2
    left = q[1:-2] + 0.5 * slope[:-1]
    right = q[2:-1] - 0.5 * slope[1:]
    return np.moveaxis(left, 0, axis), np.moveaxis(right, 0, axis)


def advection_tendency(xi: np.ndarray, vel: FaceVelocity, limiter: str = "minmod") -> np.ndarray:
    """-(1/r) div(xi * (r u)) with upwind face states."""
    g = vel.grid
    q = _pad(xi)
    lr, rr = _face_values(q[:, 2:-2], 0, limiter)  # (nr+1, nz)
    lz, rz = _face_values(q[2:-2, :], 1, limiter)  # (nr, nz+1)
    fr = vel.Fr * np.where(vel.Fr > 0.0, lr, rr)
    fz = vel.Fz * np.where(vel.Fz > 0.0, lz, rz)
    div = np.diff(fr, axis=0) / g.dr + np.diff(fz, axis=1) / g.dz
    return -div / g.r[:, None]


def radial_diffusion(xi: np.ndarray, grid: Grid) -> np.ndarray:
    """xi_rr + (3/r) xi_r with xi_r = 0 on the axis and a no-flux outer edge."""
    dr = grid.dr
    r = grid.r[:, None]
    flux = np.zeros((grid.nr + 1, xi.shape[1]))
    flux[1:-1] = grid.r_corners[1:-1, None] * np.diff(xi, axis=0) / dr
    sym = np.diff(flux, axis=0) / (r * dr)
    ext = np.concatenate([xi[:1], xi, xi[-1:]], axis=0)
    drift = (ext[2:] - ext[:-2]) / (r * dr)
    return sym + drift


def axial_diffusion(xi: np.ndarray, grid: Grid) -> np.ndarray:
    flux = np.zeros((xi.shape[0], grid.nz + 1))
    flux[:, 1:-1] = np.diff(xi, axis=1) / grid.dz
    return np.diff(flux, axis=1) / grid.dz


def diffusion_tendency(xi: np.ndarray, grid: Grid) -> np.ndarray:
    return radial_diffusion(xi, grid) + axial_diffusion(xi, grid)


def radial_banded(grid: Grid, coef: float):
    """Banded form of I - coef * (radial diffusion operator)."""
    n = grid.nr
    dr = grid.dr
    r = grid.r
    rf = grid.r_corners
    lower = np.zeros(n)  # coefficient of xi_{i-1} in row i
    upper = np.zeros(n)  # coefficient of xi_{i+1} in row i
    diag = np.zeros(n)
    for i in range(n):
        if i + 1 < n:
            upper[i] += rf[i + 1] / (r[i] * dr * dr) + 1.0 / (r[i] * dr)
            diag[i] -= rf[i + 1] / (r[i] * dr * dr)
        else:
            diag[i] += 1.0 / (r[i] * dr)  # drift ghost copies the last cell
        if i > 0:
            lower[i] += rf[i] / (r[i] * dr * dr) - 1.0 / (r[i] * dr)
            diag[i] -= rf[i] / (r[i] * dr * dr)
        else:
            diag[i] -= 1.0 / (r[i] * dr)  # mirror ghost at the axis
    ab = np.zeros((3, n))
    ab[0, 1:] = -coef * upper[:-1]
    ab[1] = 1.0 - coef * diag
    ab[2, :-1] = -coef * lower[1:]
    return ab


def implicit_radial_diffusion(xi: np.ndarray, grid: Grid, nu: float, dt: float) -> np.ndarray:
    return solve_banded((1, 1), radial_banded(grid, nu * dt), xi)


def _face_speeds(vel: FaceVelocity):
    return float(np.max(np.abs(vel.ur_faces()), initial=0.0)), float(np.max(np.abs(vel.uz_faces()), initial=0.0))


def cfl_dt(vel: FaceVelocity, nu: float, grid: Grid, sigma: float, remaining: float | None = None,
           diffusion: str = "explicit") -> float:
    """Stable step sigma / (advective rate + diffusive rate), capped at the time left to the next sample."""
    if not 0 < sigma <= 1:
        raise ValueError("CFL safety factor must lie in (0, 1]")
    ur, uz = _face_speeds(vel)
    rate = ur / grid.dr + uz / grid.dz
    if nu > 0:
        if diffusion == "explicit":
            rate += 2.0 * nu * (1.0 / grid.dr ** 2 + 1.0 / grid.dz ** 2)
            rate += float(np.max(4.0 * nu / (grid.r * grid.dr)))
        else:
            rate += 2.0 * nu / grid.dz ** 2
    if rate == 0.0:
        if remaining is None:
            raise ValueError("motionless inviscid state: no time scale without a sample horizon")
        return float(remaining)
    dt = sigma / rate
    if remaining is not None and dt >= remaining * (1.0 - 1e-12):
        return float(remaining)
    return dt


def _check_finite(data: np.ndarray, grid: Grid):
    bad = ~np.isfinite(data)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise NonFiniteError(f"non-finite vorticity at cell ({i}, {j}) = (r={grid.r[i]:g}, z={grid.z[j]:g})")


def _tendency(xi, vel, nu, g, limiter, explicit_radial):
    grid = vel.grid
    out = advection_tendency(xi, vel, limiter)
    if nu > 0:
        out = out + nu * axial_diffusion(xi, grid)
        if explicit_radial:
            out = out + nu * radial_diffusion(xi, grid)
    if g is not None:
        out = out + g
    return out


def step_ns(xi: ScalarField, vel: FaceVelocity, nu: float, g_now: ScalarField | None, dt: float, *,
            vel_next: FaceVelocity | None = None, g_next: ScalarField | None = None,
            limiter: str = "minmod", diffusion: str = "explicit") -> ScalarField:
    """One Heun step.  ``vel_next`` / ``g_next`` are the second-stage velocity and forcing.

    When ``vel_next`` is a callable it is invoked on the first-stage field, which
    is how the coupled solver refreshes the velocity.
    """
    grid = xi.grid
    explicit = diffusion == "explicit"
    g0 = None if g_now is None else g_now.data
    g1 = g0 if g_next is None else g_next.data
    k1 = _tendency(xi.data, vel, nu, g0, limiter, explicit)
    stage = xi.data + dt * k1
    _check_finite(stage, grid)
    v2 = vel if vel_next is None else (vel_next(xi.with_data(stage)) if callable(vel_next) else vel_next)
    k2 = _tendency(stage, v2, nu, g1, limiter, explicit)
    new = 0.5 * (xi.data + stage + dt * k2)
    if not explicit and nu > 0:
        new = implicit_radial_diffusion(new, grid, nu, dt)
    _check_finite(new, grid)
    return xi.with_data(new)


class _Coupler:
    """Velocity reconstruction with bookkeeping of the incompressibility and truncation checks."""

    def __init__(self, cfg: SimConfig, traj: Trajectory):
        self.cfg = cfg
        self.max_div = 0.0
        self.max_boundary = 0.0
        self.traj = traj

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


class _Fixed:
    max_div = 0.0
    max_boundary = 0.0

    def __init__(self, vel: FaceVelocity):
        self.vel = vel

    def __call__(self, xi: ScalarField) -> FaceVelocity:
        return self.vel


def _rates(xi: ScalarField, g: ScalarField, nu: float, P) -> dict:
    out = {}
    for p in P:
        if p == np.inf:
            continue
        k = pkey(p)
        out["D_" + k] = dg.dissipation_increment(xi, nu, p)
        out["work_" + k] = dg.force_work_rate(xi, g, p)
    out["axis"] = dg.axis_dissipation_rate(xi, nu)
    return out


def _initial_row(traj, xi, P):
    row = {"t": 0.0, "dt": 0.0, "div": 0.0, "boundary": 0.0}
    for p in P:
        row["norm_" + pkey(p)] = lp_norm_3d(xi, p)
        if p != np.inf:
            row["D_" + pkey(p)] = 0.0
            row["work_" + pkey(p)] = 0.0
        row["gint_" + pkey(p)] = 0.0
    row["axis"] = 0.0
    traj.record(**row)


def run_ns(cfg: SimConfig, velocity: FaceVelocity | None = None) -> Trajectory:
    """Coupled viscous run; a given ``velocity`` is held fixed instead of reconstructed."""
    traj = Trajectory("ns", cfg.nu)
    xi = cfg.initial()
    force = cfg.forcing()
    forced = not cfg.force.is_zero()
    P = tuple(cfg.P) if 2.0 in cfg.P else tuple(cfg.P) + (2.0,)
    coupler = _Coupler(cfg, traj) if velocity is None else _Fixed(velocity)
    _initial_row(traj, xi, P)
    traj.add_sample(0.0, xi)
    samples = cfg.sample_times
    t = 0.0
    k = 1
    totals = {key: 0.0 for key in traj.series if key.startswith(("D_", "work_", "gint_")) or key == "axis"}
    while k < len(samples):
        target = samples[k]
        vel = coupler(xi)
        dt = cfl_dt(vel, cfg.nu, cfg.grid, cfg.cfl, remaining=target - t, diffusion=cfg.diffusion)
        g0 = force(t)
        g1 = force(t + dt) if forced else g0
        stages = []

        def refresh(field):
            stages.append(field)
            return coupler(field)

        new = step_ns(xi, vel, cfg.nu, g0, dt, vel_next=refresh, g_next=g1,
                      limiter=cfg.limiter, diffusion=cfg.diffusion)
        r0 = _rates(xi, g0, cfg.nu, P)
        r1 = _rates(stages[0], g1, cfg.nu, P)
        for key in r0:
            totals[key] += 0.5 * dt * (r0[key] + r1[key])
        for p in P:
            totals["gint_" + pkey(p)] += 0.5 * dt * (lp_norm_3d(g0, p) + lp_norm_3d(g1, p))
        xi = new
        t = target if dt == target - t else t + dt
        row = dict(totals)
        row.update(t=t, dt=dt, div=coupler.max_div, boundary=coupler.max_boundary)
        for p in P:
            row["norm_" + pkey(p)] = lp_norm_3d(xi, p)
        traj.record(**row)
        if t == target:
            traj.add_sample(t, xi)
            k += 1
    return traj
