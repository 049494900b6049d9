"""Velocity reconstruction u = G * omega for axisymmetric swirl-free flow.

The Stokes streamfunction psi lives at cell corners and solves

    psi_rr - psi_r / r + psi_zz = -r^2 xi,   psi = 0 on the axis.

On the box edges psi is either zero ("dirichlet") or the free-space value
("free", default), obtained with a screening-charge correction: a first solve
with psi = 0 on the edges, the induced edge charge, ring-kernel sums of that
charge onto the edges, and a second solve with those edge values.
Face fluxes r*u_r = -psi_z and r*u_z = psi_r are then plain corner differences,
so the discrete divergence of (r u_r, r u_z) telescopes to zero in every cell.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import ndimage, special

from .grid import Grid, ScalarField


class EllipticSolveError(RuntimeError):
    def __init__(self, residual: float, target: float):
        super().__init__(f"streamfunction solve did not converge: residual {residual:.3e} > {target:.3e}")
        self.residual = residual
        self.target = target


class SingularProbeError(ValueError):
    pass


@dataclass
class Streamfunction:
    grid: Grid
    psi: np.ndarray  # (nr+1, nz+1) at corners


@dataclass
class FaceVelocity:
    """r*u_r on radial faces (nr+1, nz) and r*u_z on axial faces (nr, nz+1)."""
    grid: Grid
    Fr: np.ndarray
    Fz: np.ndarray

    def divergence(self) -> np.ndarray:
        g = self.grid
        return np.diff(self.Fr, axis=0) / g.dr + np.diff(self.Fz, axis=1) / g.dz

    def ur_faces(self) -> np.ndarray:
        rf = self.grid.r_corners[:, None]
        out = np.zeros_like(self.Fr)
        out[1:] = self.Fr[1:] / rf[1:]
        return out

    def uz_faces(self) -> np.ndarray:
        return self.Fz / self.grid.r[:, None]

    def max_speed(self) -> float:
        return float(max(np.max(np.abs(self.ur_faces()), initial=0.0),
                         np.max(np.abs(self.uz_faces()), initial=0.0)))

    def cell_centered(self) -> tuple[np.ndarray, np.ndarray]:
        ur = 0.5 * (self.ur_faces()[1:] + self.ur_faces()[:-1])
        uz = 0.5 * (self.uz_faces()[:, 1:] + self.uz_faces()[:, :-1])
        return ur, uz

    def boundary_tangential(self) -> float:
        """Largest tangential speed on the outer box edges (the axis is excluded)."""
        ur = self.ur_faces()
        uz = self.uz_faces()
        return float(max(np.max(np.abs(uz[-1, :])), np.max(np.abs(ur[1:, 0])),
                         np.max(np.abs(ur[1:, -1]))))

    def __add__(self, other: "FaceVelocity") -> "FaceVelocity":
        return FaceVelocity(self.grid, self.Fr + other.Fr, self.Fz + other.Fz)

    def scaled(self, a: float) -> "FaceVelocity":
        return FaceVelocity(self.grid, a * self.Fr, a * self.Fz)


def zero_velocity(grid: Grid) -> FaceVelocity:
    return FaceVelocity(grid, np.zeros((grid.nr + 1, grid.nz)), np.zeros((grid.nr, grid.nz + 1)))


def ring_streamfunction(r, z, rho, zeta):
    """Stokes streamfunction of a unit-circulation vortex ring at (rho, zeta)."""
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    a2 = (r + rho) ** 2 + (np.asarray(z, dtype=float) - zeta) ** 2
    m = np.clip(4.0 * r * rho / a2, 0.0, 1.0)
    k = np.sqrt(m)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sqrt(r * rho) / (2.0 * np.pi) * ((2.0 / k - k) * special.ellipk(m) - 2.0 / k * special.ellipe(m))
    return np.where(m > 0, val, 0.0)


class EllipticSolver:
    """Five-point solver for psi_rr - psi_r/r + psi_zz = -r^2 xi on the corner lattice.

    The operator is assembled in the symmetric form (1/r) L and factorized once.
    With ``bc="dirichlet"`` psi vanishes on the box edges.  With ``bc="free"``
    the edge values are those of the unbounded problem, obtained by the James
    screening-charge construction: a first Dirichlet solve, the charge it
    induces on the edges, the ring-kernel potential of that charge, and a second
    solve with those edge values.
    """

    def __init__(self, grid: Grid, bc: str = "free"):
        if bc not in ("free", "dirichlet"):
            raise ValueError(f"unknown streamfunction boundary condition {bc!r}")
        self.grid = grid
        self.bc = bc
        nr, nz = grid.nr - 1, grid.nz - 1
        dr, dz = grid.dr, grid.dz
        rc = grid.r_corners[1:-1]
        rf = grid.r
        self.wl = 1.0 / (rf[:-1] * dr * dr)
        self.wr = 1.0 / (rf[1:] * dr * dr)
        self.wz = 1.0 / (rc * dz * dz)
        idx = np.arange(nr * nz).reshape(nr, nz)
        rows, cols, vals = [], [], []

        def add(a, b, v):
            rows.append(a.ravel())
            cols.append(b.ravel())
            vals.append(np.broadcast_to(v, a.shape).ravel())

        add(idx, idx, -(self.wl + self.wr)[:, None] - 2.0 * self.wz[:, None] * np.ones((1, nz)))
        add(idx[1:], idx[:-1], np.broadcast_to(self.wl[1:, None], (nr - 1, nz)))
        add(idx[:-1], idx[1:], np.broadcast_to(self.wr[:-1, None], (nr - 1, nz)))
        add(idx[:, 1:], idx[:, :-1], np.broadcast_to(self.wz[:, None], (nr, nz - 1)))
        add(idx[:, :-1], idx[:, 1:], np.broadcast_to(self.wz[:, None], (nr, nz - 1)))
        self.A = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                               shape=(nr * nz, nr * nz))
        self.lu = spla.splu(-self.A, permc_spec="MMD_AT_PLUS_A")
        if bc == "free":
            self._edge_green()

    def _edge_nodes(self):
        g = self.grid
        i = np.arange(1, g.nr + 1)
        bottom = np.stack([i, np.zeros_like(i)], axis=1)
        top = np.stack([i, np.full_like(i, g.nz)], axis=1)
        j = np.arange(1, g.nz)
        right = np.stack([np.full_like(j, g.nr), j], axis=1)
        return np.concatenate([bottom, top, right])

    def _edge_green(self):
        g = self.grid
        nodes = self._edge_nodes()
        self.edge = nodes
        rb = g.r_corners[nodes[:, 0]]
        zb = g.z_corners[nodes[:, 1]]
        R1, R2 = np.meshgrid(rb, rb, indexing="ij")
        Z1, Z2 = np.meshgrid(zb, zb, indexing="ij")
        G = ring_streamfunction(R1, Z1, R2, Z2)
        # average the log-singular kernel over the source cell for nearby pairs
        near = (np.abs(R1 - R2) <= 2.0 * g.dr + 1e-12) & (np.abs(Z1 - Z2) <= 2.0 * g.dz + 1e-12)
        x, w = np.polynomial.legendre.leggauss(8)
        off_r = 0.5 * g.dr * x
        off_z = 0.5 * g.dz * x
        wt = np.outer(w, w).ravel() / 4.0
        orr, ozz = np.meshgrid(off_r, off_z, indexing="ij")
        a, b = np.nonzero(near)
        src_r = np.abs(R2[a, b][:, None] + orr.ravel()[None, :])
        src_z = Z2[a, b][:, None] + ozz.ravel()[None, :]
        vals = ring_streamfunction(R1[a, b][:, None], Z1[a, b][:, None], src_r, src_z)
        # mirror images below the axis carry opposite circulation
        G[a, b] = np.sum(wt * vals * np.sign(R2[a, b][:, None] + orr.ravel()[None, :]), axis=1)
        self.edge_green = G * g.dr * g.dz

    def _solve_interior(self, rhs):
        return self.lu.solve(rhs)

    def residual(self, psi: np.ndarray, xi_corner: np.ndarray) -> np.ndarray:
        rc = self.grid.r_corners[1:-1][:, None]
        return rc * self._apply(psi) + rc ** 2 * xi_corner

    def _apply(self, psi):
        """(1/r) L psi at interior corners, using the edge values stored in psi."""
        g = self.grid
        c = psi[1:-1, 1:-1]
        out = (self.A @ c.ravel()).reshape(c.shape)
        out[-1, :] += self.wr[-1] * psi[-1, 1:-1]
        out[:, 0] += self.wz * psi[1:-1, 0]
        out[:, -1] += self.wz * psi[1:-1, -1]
        return out

    def _edge_charge(self, psi0):
        g = self.grid
        q = np.zeros((g.nr + 1, g.nz + 1))
        q[1:-1, 0] = self.wz * psi0[1:-1, 1]
        q[1:-1, -1] = self.wz * psi0[1:-1, -2]
        q[-1, 1:-1] = self.wr[-1] * psi0[-2, 1:-1]
        return q[self.edge[:, 0], self.edge[:, 1]]

    def edge_values(self, psi0):
        return self.edge_green @ self._edge_charge(psi0)

    def solve(self, xi: ScalarField, rtol: float = 1e-10, max_refinements: int = 4) -> "Streamfunction":
        g = self.grid
        rc = g.r_corners[1:-1][:, None]
        xc = corner_average(xi.data)
        psi = np.zeros((g.nr + 1, g.nz + 1))
        scale = float(np.max(np.abs(rc ** 2 * xc), initial=0.0))
        if scale == 0.0:
            return Streamfunction(g, psi)
        f = (rc * xc).ravel()
        psi[1:-1, 1:-1] = self._solve_interior(f).reshape(rc.shape[0], -1)
        if self.bc == "free":
            psi[self.edge[:, 0], self.edge[:, 1]] = self.edge_values(psi)
            psi[1:-1, 1:-1] = 0.0
            lift = self._apply(psi)
            psi[1:-1, 1:-1] = self._solve_interior(f + lift.ravel()).reshape(rc.shape[0], -1)
        target = rtol * scale
        for _ in range(max_refinements + 1):
            res = self.residual(psi, xc)
            err = float(np.max(np.abs(res)))
            if err <= target:
                return Streamfunction(g, psi)
            psi[1:-1, 1:-1] += self._solve_interior((res / rc).ravel()).reshape(rc.shape[0], -1)
        raise EllipticSolveError(err, target)


@lru_cache(maxsize=8)
def elliptic_solver(grid: Grid, bc: str = "free") -> EllipticSolver:
    return EllipticSolver(grid, bc)


def corner_average(data: np.ndarray) -> np.ndarray:
    """Average of the four cells around each interior corner."""
    return 0.25 * (data[1:, 1:] + data[:-1, 1:] + data[1:, :-1] + data[:-1, :-1])


def solve_streamfunction(xi: ScalarField, bc: str = "free", rtol: float = 1e-10) -> Streamfunction:
    return elliptic_solver(xi.grid, bc).solve(xi, rtol=rtol)


def velocity_from_streamfunction(s: Streamfunction) -> FaceVelocity:
    g = s.grid
    Fr = -np.diff(s.psi, axis=1) / g.dz
    Fz = np.diff(s.psi, axis=0) / g.dr
    Fr[0, :] = 0.0  # psi vanishes on the axis row
    return FaceVelocity(g, Fr, Fz)


def reconstruct_velocity(xi: ScalarField, bc: str = "free") -> FaceVelocity:
    return velocity_from_streamfunction(solve_streamfunction(xi, bc))


def divergence_ratio(vel: FaceVelocity, psi: np.ndarray) -> float:
    """max |div| measured in units of max|psi| / (dr dz)."""
    scale = float(np.max(np.abs(psi))) / (vel.grid.dr * vel.grid.dz)
    d = float(np.max(np.abs(vel.divergence())))
    if scale == 0.0:
        return 0.0 if d == 0.0 else np.inf
    return d / scale


def _interp_staggered(values, x0, dx, y0, dy, x, y, mode="nearest"):
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    cx = (x.ravel() - x0) / dx
    cy = (y.ravel() - y0) / dy
    return ndimage.map_coordinates(values, [cx, cy], order=1, mode=mode).reshape(x.shape)


def velocity_at(vel: FaceVelocity, r, z) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear interpolation of (u_r, u_z) from the staggered faces to arbitrary points."""
    g = vel.grid
    r = np.abs(np.asarray(r, dtype=float))
    z = np.asarray(z, dtype=float)
    ur = _interp_staggered(vel.ur_faces(), 0.0, g.dr, g.zmin + 0.5 * g.dz, g.dz, r, z)
    uz_ext = np.concatenate([vel.uz_faces()[:1], vel.uz_faces()], axis=0)  # even mirror at the axis
    uz = _interp_staggered(uz_ext, -0.5 * g.dr, g.dr, g.zmin, g.dz, r, z)
    return ur, uz


def _azimuthal_sums(r, z, rho, zeta, n):
    """Trapezoid sums over phi in [0, 2pi) of cos(phi)/D^3 and (rho - r cos(phi))/D^3."""
    phi = 2.0 * np.pi * (np.arange(n) + 0.0) / n
    c = np.cos(phi)[None, :]
    dz = (z - zeta)[:, None]
    rho_ = rho[:, None]
    d2 = r * r + rho_ * rho_ - 2.0 * r * rho_ * c + dz * dz
    inv3 = d2 ** -1.5
    s_r = np.sum(c * inv3, axis=1) * (2.0 * np.pi / n)
    s_z = np.sum((rho_ - r * c) * inv3, axis=1) * (2.0 * np.pi / n)
    return s_r * (z - zeta), s_z


def _azimuthal_midpoints(r, z, rho, zeta, n):
    phi = 2.0 * np.pi * (np.arange(n) + 0.5) / n
    c = np.cos(phi)[None, :]
    dz = (z - zeta)[:, None]
    rho_ = rho[:, None]
    d2 = r * r + rho_ * rho_ - 2.0 * r * rho_ * c + dz * dz
    inv3 = d2 ** -1.5
    s_r = np.sum(c * inv3, axis=1) * (2.0 * np.pi / n)
    s_z = np.sum((rho_ - r * c) * inv3, axis=1) * (2.0 * np.pi / n)
    return s_r * (z - zeta), s_z


def ring_kernel_quadrature(r, z, rho, zeta, base_nodes=256, tol=1e-8, max_nodes=2 ** 20):
    """Azimuthal integrals of the 3D Biot-Savart kernel for unit-circulation rings.

    Returns the velocity (u_r, u_z) at (r, z) induced by rings of unit circulation
    at (rho, zeta).  Periodic trapezoid rule, doubled per ring until the change
    falls below tol relative to the ring's own contribution.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    ir, iz = _azimuthal_sums(r, z, rho, zeta, base_nodes)
    active = np.arange(rho.size)
    n = base_nodes
    while active.size and n < max_nodes:
        mr, mz = _azimuthal_midpoints(r, z, rho[active], zeta[active], n)
        nr_ = 0.5 * (ir[active] + mr)
        nz_ = 0.5 * (iz[active] + mz)
        change = np.maximum(np.abs(nr_ - ir[active]), np.abs(nz_ - iz[active]))
        size = np.maximum(np.abs(nr_), np.abs(nz_))
        ir[active] = nr_
        iz[active] = nz_
        n *= 2
        active = active[change > tol * size]
    if active.size:
        raise RuntimeError(f"azimuthal quadrature did not converge for {active.size} rings")
    pref = rho / (4.0 * np.pi)
    return pref * ir, pref * iz


def ring_kernel_elliptic(r, z, rho, zeta):
    """Closed-form velocity of unit-circulation rings via complete elliptic integrals."""
    r = np.asarray(r, dtype=float)
    dz = np.asarray(z, dtype=float) - np.asarray(zeta, dtype=float)
    rho = np.asarray(rho, dtype=float)
    a2 = (r + rho) ** 2 + dz ** 2
    b2 = (r - rho) ** 2 + dz ** 2
    m = 4.0 * r * rho / a2
    K = special.ellipk(m)
    E = special.ellipe(m)
    a = np.sqrt(a2)
    uz = (K + (rho ** 2 - r ** 2 - dz ** 2) / b2 * E) / (2.0 * np.pi * a)
    with np.errstate(divide="ignore", invalid="ignore"):
        ur = np.where(r > 0, dz / (2.0 * np.pi * r * a) * (-K + (rho ** 2 + r ** 2 + dz ** 2) / b2 * E), 0.0)
    return ur, uz


def _sources(xi: ScalarField):
    g = xi.grid
    rr, zz = g.mesh()
    circ = xi.omega() * g.dr * g.dz
    keep = circ != 0.0
    return rr[keep], zz[keep], circ[keep]


def biot_savart_direct(xi: ScalarField, points, base_nodes: int = 256, tol: float = 1e-8):
    """Velocity at (r, z) points by direct quadrature of the 3D Biot-Savart integral."""
    g = xi.grid
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rho, zeta, circ = _sources(xi)
    rr, zz = g.mesh()
    out = np.zeros((len(pts), 2))
    for k, (r, z) in enumerate(pts):
        if not (0.0 < r < g.R and g.zmin < z < g.zmax):
            raise SingularProbeError(f"probe {k} at ({r:g}, {z:g}) is not strictly inside the grid and off the axis")
        dmin = np.sqrt(np.min((rr - r) ** 2 + (zz - z) ** 2))
        if dmin < 0.5 * g.dr * (1.0 - 1e-12):
            raise SingularProbeError(f"probe {k} at ({r:g}, {z:g}) lies within dr/2 of a source cell center")
        if circ.size == 0:
            continue
        ur, uz = ring_kernel_quadrature(r, z, rho, zeta, base_nodes=base_nodes, tol=tol)
        out[k] = (np.dot(circ, ur), np.dot(circ, uz))
    return out


@dataclass(frozen=True)
class KernelSplit:
    cutoff: float = 1.0


def kernel_split_fields(xi: ScalarField, cutoff: float, stride: int = 1):
    """Velocity parts u1 (kernel masked to |x-y| < cutoff) and u2 (the rest).

    Targets are the interior corners of the grid (every `stride`-th one).  The
    ring kernel is evaluated in closed form; see ring_kernel_quadrature for the
    independent route.
    """
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")
    g = xi.grid
    rho, zeta, circ = _sources(xi)
    rt = g.r_corners[stride:-1:stride]
    zt = g.z_corners[stride:-1:stride]
    R, Z = np.meshgrid(rt, zt, indexing="ij")
    u1 = np.zeros(R.shape + (2,))
    u2 = np.zeros(R.shape + (2,))
    if circ.size == 0:
        return R, Z, u1, u2
    flat_r, flat_z = R.ravel(), Z.ravel()
    for k in range(flat_r.size):
        ur, uz = ring_kernel_elliptic(flat_r[k], flat_z[k], rho, zeta)
        near = (rho - flat_r[k]) ** 2 + (zeta - flat_z[k]) ** 2 < cutoff ** 2
        i, j = np.unravel_index(k, R.shape)
        u1[i, j] = (np.dot(circ * near, ur), np.dot(circ * near, uz))
        u2[i, j] = (np.dot(circ * ~near, ur), np.dot(circ * ~near, uz))
    return R, Z, u1, u2


def kernel_split_norms(xi: ScalarField, cutoff: float = 1.0, stride: int = 1) -> tuple[float, float]:
    """(||u1||_{L1(H)}, ||u2||_{Linf(H)}) with the unweighted half-plane measure dr dz."""
    g = xi.grid
    R, Z, u1, u2 = kernel_split_fields(xi, cutoff, stride)
    area = (stride * g.dr) * (stride * g.dz)
    l1 = float(np.sum(np.hypot(u1[..., 0], u1[..., 1])) * area)
    linf = float(np.max(np.hypot(u2[..., 0], u2[..., 1]), initial=0.0))
    return l1, linf
