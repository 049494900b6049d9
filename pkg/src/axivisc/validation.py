"""Built-in analytic checks behind ``axivisc validate``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .biot_savart import Streamfunction, divergence_ratio, solve_streamfunction, velocity_from_streamfunction, zero_velocity
from .euler_solver import step_euler_sl
from .grid import Grid, ScalarField, gaussian_bump, lp_norm_3d, make_grid
from .ns_solver import cfl_dt, step_ns

HEAT_EXPONENT = 2.5  # amplitude decay (sigma^2 / (sigma^2 + 2 nu t))^HEAT_EXPONENT


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    bound: str
    passed: bool

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:<50s} {self.value:.4e}  ({self.bound})"


def heat_gaussian(r, z, t, nu, sigma, exponent=HEAT_EXPONENT):
    s2 = sigma * sigma + 2.0 * nu * t
    return (sigma * sigma / s2) ** exponent * np.exp(-(r * r + z * z) / (2.0 * s2))


def heat_residual(exponent: float, delta: float, nu: float = 0.01, sigma: float = 0.5, t: float = 1.0) -> float:
    """max |f_t - nu (f_rr + 3 f_r / r + f_zz)| over a probe set, by centered differences of step delta."""
    r, z = np.meshgrid(np.linspace(0.2, 2.0, 10), np.linspace(-1.5, 1.5, 11), indexing="ij")

    def f(rr, zz, tt):
        return heat_gaussian(rr, zz, tt, nu, sigma, exponent)

    ft = (f(r, z, t + delta) - f(r, z, t - delta)) / (2 * delta)
    fr = (f(r + delta, z, t) - f(r - delta, z, t)) / (2 * delta)
    frr = (f(r + delta, z, t) - 2 * f(r, z, t) + f(r - delta, z, t)) / delta ** 2
    fzz = (f(r, z + delta, t) - 2 * f(r, z, t) + f(r, z - delta, t)) / delta ** 2
    return float(np.max(np.abs(ft - nu * (frr + 3.0 * fr / r + fzz))))


def diffusion_error(n: int, nu: float = 0.01, sigma: float = 0.5, T: float = 1.0, cfl: float = 0.5,
                    diffusion: str = "explicit") -> float:
    """Relative L2 error of the velocity-free viscous run against the heat Gaussian."""
    g = make_grid(n, 2 * n, 4.0, -4.0, 4.0)
    xi = gaussian_bump(g, 0.0, 0.0, sigma, 1.0)
    vel = zero_velocity(g)
    t = 0.0
    while t < T:
        dt = cfl_dt(vel, nu, g, cfl, remaining=T - t, diffusion=diffusion)
        xi = step_ns(xi, vel, nu, None, dt, diffusion=diffusion)
        t = T if dt == T - t else t + dt
    rr, zz = g.mesh()
    exact = xi.with_data(heat_gaussian(rr, zz, T, nu, sigma))
    return lp_norm_3d(xi - exact, 2) / lp_norm_3d(exact, 2)


def translation_velocity(grid: Grid, W: float):
    rc = np.repeat(grid.r_corners[:, None], grid.nz + 1, axis=1)
    return velocity_from_streamfunction(Streamfunction(grid, 0.5 * W * rc ** 2))


def translation_error(n: int, solver: str = "ns", W: float = 1.0, T: float = 1.0, cfl: float = 0.5) -> float:
    """L1 distance after a rigid axial shift by W*T of a Gaussian ring."""
    g = make_grid(n, 2 * n, 4.0, -4.0, 4.0)
    vel = translation_velocity(g, W)
    xi = gaussian_bump(g, 1.0, -0.5, 0.5, 1.0)
    t = 0.0
    while t < T:
        dt = cfl_dt(vel, 0.0, g, cfl, remaining=T - t)
        if solver == "ns":
            xi = step_ns(xi, vel, 0.0, None, dt)
        else:
            xi = step_euler_sl(xi, vel, None, dt, solver)
        t = T if dt == T - t else t + dt
    return lp_norm_3d(xi - gaussian_bump(g, 1.0, -0.5 + W * T, 0.5, 1.0), 1)


def manufactured_psi(r, z, grid: Grid):
    k = np.pi / (grid.zmax - grid.zmin)
    return r ** 2 * (grid.R - r) ** 2 * np.sin(k * (z - grid.zmin))


def manufactured_xi(r, z, grid: Grid):
    """-(psi_rr - psi_r / r + psi_zz) / r^2 for manufactured_psi, differentiated by hand."""
    R = grid.R
    k = np.pi / (grid.zmax - grid.zmin)
    return (6.0 * (R - r) / r - 2.0 + k * k * (R - r) ** 2) * np.sin(k * (z - grid.zmin))


def manufactured_error(n: int) -> float:
    g = make_grid(n, 2 * n, 4.0, -4.0, 4.0)
    rr, zz = g.mesh()
    s = solve_streamfunction(ScalarField(g, manufactured_xi(rr, zz, g), "relative_vorticity"), bc="dirichlet")
    rc, zc = np.meshgrid(g.r_corners, g.z_corners, indexing="ij")
    return float(np.sqrt(np.sum((s.psi - manufactured_psi(rc, zc, g)) ** 2) * g.dr * g.dz))


def divergence_check(n: int = 32, seed: int = 0) -> float:
    g = make_grid(n, 2 * n, 4.0, -4.0, 4.0)
    rng = np.random.default_rng(seed)
    xi = ScalarField(g, rng.standard_normal(g.shape), "relative_vorticity")
    s = solve_streamfunction(xi)
    return divergence_ratio(velocity_from_streamfunction(s), s.psi)


def run_suite(quick: bool = True) -> list[Check]:
    n = 64 if quick else 128
    out = []
    res = heat_residual(HEAT_EXPONENT, 1e-3)
    out.append(Check("heat oracle residual (step 1e-3)", res, "<= 1e-5", res <= 1e-5))
    e1, e2 = diffusion_error(n // 2), diffusion_error(n)
    out.append(Check(f"diffusion Gaussian rel L2 at {n}x{2 * n}", e2, "<= 2e-3", e2 <= 2e-3))
    out.append(Check("diffusion Gaussian refinement ratio", e1 / e2, "in [3.2, 4.8]", 3.2 <= e1 / e2 <= 4.8))
    t1, t2 = translation_error(16), translation_error(32)
    out.append(Check("rigid translation L1 ratio (limited flux form)", t1 / t2, ">= 1.7", t1 / t2 >= 1.7))
    m1, m2 = manufactured_error(16), manufactured_error(32)
    out.append(Check("manufactured streamfunction ratio", m1 / m2, "in [3.2, 4.8]", 3.2 <= m1 / m2 <= 4.8))
    d = divergence_check()
    out.append(Check("discrete divergence / (max|psi|/(dr dz))", d, "<= 1e-13", d <= 1e-13))
    return out
