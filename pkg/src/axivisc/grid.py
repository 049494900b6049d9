"""Half-plane grid, cell-centered fields and weighted norms.

Fields live at cell centers r_i = (i + 1/2) dr, z_j = zmin + (j + 1/2) dz of
the truncated half-plane (0, R] x [zmin, zmax].  All integrals use the midpoint
rule against the axisymmetric 3D measure 2*pi*r dr dz.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage

ROLES = ("relative_vorticity", "forcing", "streamfunction_residual", "generic")


@dataclass(frozen=True)
class Grid:
    nr: int
    nz: int
    R: float
    zmin: float
    zmax: float

    @property
    def dr(self) -> float:
        return self.R / self.nr

    @property
    def dz(self) -> float:
        return (self.zmax - self.zmin) / self.nz

    @property
    def r(self) -> np.ndarray:
        return (np.arange(self.nr) + 0.5) * self.dr

    @property
    def z(self) -> np.ndarray:
        return self.zmin + (np.arange(self.nz) + 0.5) * self.dz

    @property
    def r_corners(self) -> np.ndarray:
        return np.arange(self.nr + 1) * self.dr

    @property
    def z_corners(self) -> np.ndarray:
        return self.zmin + np.arange(self.nz + 1) * self.dz

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nr, self.nz)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.r, self.z, indexing="ij")

    def cell_measure(self) -> np.ndarray:
        """Weights 2*pi*r_i*dr*dz, broadcastable against an (nr, nz) field."""
        return (2.0 * np.pi * self.dr * self.dz * self.r)[:, None]

    def diameter(self) -> float:
        """Largest distance from the origin to any point of the box."""
        return float(np.hypot(self.R, max(abs(self.zmin), abs(self.zmax))))

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.nr * factor, self.nz * factor, self.R, self.zmin, self.zmax)


def make_grid(nr: int, nz: int, R: float, zmin: float, zmax: float) -> Grid:
    if not R > 0:
        raise ValueError("empty radial extent")
    if not zmax > zmin:
        raise ValueError("empty axial extent")
    if int(nr) != nr or int(nz) != nz or nr < 4 or nz < 4:
        raise ValueError(f"cell counts must be integers >= 4, got nr={nr}, nz={nz}")
    return Grid(int(nr), int(nz), float(R), float(zmin), float(zmax))


@dataclass
class ScalarField:
    grid: Grid
    data: np.ndarray
    role: str = "generic"

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != self.grid.shape:
            raise ValueError(f"field shape {self.data.shape} does not match grid {self.grid.shape}")
        if self.role not in ROLES:
            raise ValueError(f"unknown field role {self.role!r}")
        if not np.all(np.isfinite(self.data)):
            raise FloatingPointError("field contains non-finite values")

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.data.copy(), self.role)

    def with_data(self, data: np.ndarray, role: str | None = None) -> "ScalarField":
        return ScalarField(self.grid, data, self.role if role is None else role)

    def omega(self) -> np.ndarray:
        """Azimuthal vorticity r*xi (or r*g for a forcing field)."""
        return self.grid.r[:, None] * self.data

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return self.with_data(self.data - other.data, "generic")


def zeros(grid: Grid, role: str = "generic") -> ScalarField:
    return ScalarField(grid, np.zeros(grid.shape), role)


def _weighted_sum(grid: Grid, values: np.ndarray) -> float:
    return float(np.sum(values * grid.cell_measure()))


def lp_norm_3d(f: ScalarField, p: float) -> float:
    """Lp norm over R^3 of an axisymmetric field, midpoint rule in (r, z)."""
    if p == np.inf:
        return float(np.max(np.abs(f.data))) if f.data.size else 0.0
    if p < 1:
        raise ValueError(f"norm exponent must be >= 1, got {p}")
    m = float(np.max(np.abs(f.data))) if f.data.size else 0.0
    if m == 0.0:
        return 0.0
    # scaled by the max so that |f|^p neither underflows nor overflows
    return m * _weighted_sum(f.grid, (np.abs(f.data) / m) ** p) ** (1.0 / p)


def lp_norm_tail(f: ScalarField, p: float, radius: float) -> float:
    """p-th power of the Lp norm restricted to cells outside the 3D ball of the given radius."""
    if p < 1 or p == np.inf:
        raise ValueError(f"tail exponent must be finite and >= 1, got {p}")
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    rr, zz = f.grid.mesh()
    outside = rr ** 2 + zz ** 2 > radius ** 2
    return _weighted_sum(f.grid, np.where(outside, np.abs(f.data) ** p, 0.0))


def gaussian_bump(grid: Grid, r0: float, z0: float, sigma: float, amplitude: float,
                  role: str = "relative_vorticity") -> ScalarField:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    rr, zz = grid.mesh()
    data = amplitude * np.exp(-((rr - r0) ** 2 + (zz - z0) ** 2) / (2.0 * sigma ** 2))
    return ScalarField(grid, data, role)


def hill_vortex(grid: Grid, z0: float, a: float, amplitude: float) -> ScalarField:
    """Relative vorticity of Hill's spherical vortex: constant inside the ball of radius a."""
    if not a > 0:
        raise ValueError("vortex radius must be positive")
    rr, zz = grid.mesh()
    data = np.where(rr ** 2 + (zz - z0) ** 2 < a ** 2, float(amplitude), 0.0)
    return ScalarField(grid, data, "relative_vorticity")


def smooth_bump(grid: Grid, r0: float, z0: float, radius: float, amplitude: float,
                role: str = "forcing") -> ScalarField:
    """Compactly supported C-infinity bump amplitude*exp(1 - 1/(1 - s^2)), s = dist/radius."""
    rr, zz = grid.mesh()
    s2 = ((rr - r0) ** 2 + (zz - z0) ** 2) / radius ** 2
    data = np.zeros(grid.shape)
    inside = s2 < 1.0
    data[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
    return ScalarField(grid, data, role)


def mollifier_stencil(grid: Grid, width: float) -> np.ndarray:
    """Standard bump exp(-1/(1-|x/eps|^2)) sampled on grid offsets, unit discrete sum."""
    mr = int(np.floor(width / grid.dr))
    mz = int(np.floor(width / grid.dz))
    dr = np.arange(-mr, mr + 1)[:, None] * grid.dr
    dz = np.arange(-mz, mz + 1)[None, :] * grid.dz
    s2 = (dr ** 2 + dz ** 2) / width ** 2
    k = np.zeros(s2.shape)
    inside = s2 < 1.0
    k[inside] = np.exp(-1.0 / (1.0 - s2[inside]))
    return k / k.sum()


def mollify(f: ScalarField, n: int) -> ScalarField:
    """Convolve with a unit-mass bump of radius 1/n.

    The field is extended evenly across the axis and by zero past the outer
    edges of the box.
    """
    if n < 1:
        raise ValueError("mollification index must be >= 1")
    width = 1.0 / n
    g = f.grid
    if width < 2.0 * max(g.dr, g.dz):
        raise ValueError(f"mollifier width 1/n = {width:g} is not resolved by the grid "
                         f"(needs >= {2 * max(g.dr, g.dz):g})")
    k = mollifier_stencil(g, width)
    mr = k.shape[0] // 2
    ext = np.concatenate([f.data[mr - 1::-1, :], f.data], axis=0) if mr else f.data
    out = ndimage.correlate(ext, k, mode="constant", cval=0.0)
    return f.with_data(out[mr:, :])


@dataclass(frozen=True)
class RenormFunction:
    """Bounded C^1 map beta with bounded derivative, vanishing for |s| < radius."""
    beta: Callable[[np.ndarray], np.ndarray]
    dbeta: Callable[[np.ndarray], np.ndarray]
    bound: float
    radius: float
    descriptor: str = field(default="")

    def __call__(self, s):
        return self.beta(np.asarray(s, dtype=float))


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def _dsmoothstep(x):
    inside = (x > 0.0) & (x < 1.0)
    return np.where(inside, 6.0 * x * (1.0 - x), 0.0)


def smooth_clamp(eps: float, cap: float) -> RenormFunction:
    """beta(s) = sign(s) * cap * smoothstep((|s| - eps) / cap)."""
    if not (eps > 0 and cap > 0):
        raise ValueError("eps and cap must be positive")

    def beta(s):
        return np.sign(s) * cap * _smoothstep((np.abs(s) - eps) / cap)

    def dbeta(s):
        return _dsmoothstep((np.abs(s) - eps) / cap)

    return RenormFunction(beta, dbeta, bound=cap, radius=eps,
                          descriptor=f"smooth clamp vanishing on |s|<{eps:g}, bounded by {cap:g}")


def _soft_cap(q, cap):
    half = cap / 2.0
    return np.where(q <= half, q, cap - half * np.exp(-(q - half) / half))


def _dsoft_cap(q, cap):
    half = cap / 2.0
    return np.where(q <= half, 1.0, np.exp(-(q - half) / half))


def clamped_square(eps: float, cap: float) -> RenormFunction:
    """s^2 switched on smoothly above eps and saturating towards cap (exact s^2 while s^2 <= cap/2)."""
    if not (eps > 0 and cap > 0):
        raise ValueError("eps and cap must be positive")
    h = eps / 2.0

    def beta(s):
        a = np.abs(s)
        return _soft_cap(a * a, cap) * _smoothstep((a - h) / h)

    def dbeta(s):
        a = np.abs(s)
        x = (a - h) / h
        q = a * a
        d = 2.0 * a * _dsoft_cap(q, cap) * _smoothstep(x) + _soft_cap(q, cap) * _dsmoothstep(x) / h
        return np.sign(s) * d

    return RenormFunction(beta, dbeta, bound=cap, radius=h,
                          descriptor=f"s^2 switched on above {eps:g}, saturating at {cap:g}")


ZERO_RENORM = RenormFunction(np.zeros_like, np.zeros_like, bound=0.0, radius=np.inf, descriptor="zero map")


def apply_renorm(f: ScalarField, beta: RenormFunction) -> ScalarField:
    return f.with_data(beta(f.data), "generic")
