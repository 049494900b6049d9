"""Simulation and sweep configuration, plus the flat ``key = value`` file format."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .grid import Grid, ScalarField, gaussian_bump, hill_vortex, make_grid, mollify, smooth_bump, zeros


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InitSpec:
    kind: str = "gaussian"  # gaussian | hill | zero | snapshot
    r0: float = 1.0
    z0: float = 0.0
    sigma: float = 0.5  # Gaussian width, or the radius of Hill's vortex
    amp: float = 1.0
    path: str = ""

    def build(self, grid: Grid) -> ScalarField:
        if self.kind == "gaussian":
            return gaussian_bump(grid, self.r0, self.z0, self.sigma, self.amp)
        if self.kind == "hill":
            return hill_vortex(grid, self.z0, self.sigma, self.amp)
        if self.kind == "zero":
            return zeros(grid, "relative_vorticity")
        if self.kind == "snapshot":
            from .io import read_snapshot

            f, _ = read_snapshot(self.path)
            if f.grid != grid:
                raise ConfigError(f"snapshot {self.path} lives on {f.grid}, config asks for {grid}")
            return ScalarField(grid, f.data, "relative_vorticity")
        raise ConfigError(f"unknown init.kind {self.kind!r}")


@dataclass(frozen=True)
class ForceSpec:
    kind: str = "zero"  # zero | bump | pulse
    r0: float = 1.0
    z0: float = 0.0
    radius: float = 0.5
    amp: float = 0.1
    mollify_n: int = 0  # extra mollification of the force alone

    def is_zero(self) -> bool:
        return self.kind == "zero" or self.amp == 0.0

    def generator(self, grid: Grid, T: float, mollify_n: int = 0):
        """Return g(t) -> ScalarField."""
        if self.kind == "zero":
            g0 = zeros(grid, "forcing")
            return lambda t: g0
        if self.kind not in ("bump", "pulse"):
            raise ConfigError(f"unknown force.kind {self.kind!r}")
        base = smooth_bump(grid, self.r0, self.z0, self.radius, self.amp)
        if self.mollify_n:
            base = mollify(base, self.mollify_n)
        if mollify_n:
            base = mollify(base, mollify_n)
        if self.kind == "bump":
            return lambda t: base
        return lambda t: base.with_data(base.data * np.sin(np.pi * t / T) ** 2)


@dataclass(frozen=True)
class SimConfig:
    grid: Grid = field(default_factory=lambda: make_grid(128, 256, 4.0, -4.0, 4.0))
    nu: float = 0.01
    T: float = 1.0
    init: InitSpec = InitSpec()
    force: ForceSpec = ForceSpec()
    cfl: float = 0.5
    limiter: str = "minmod"  # minmod | centered
    diffusion: str = "explicit"  # explicit | split-implicit
    interp: str = "bilinear"  # semi-Lagrangian interpolation: bilinear | cubic
    samples: int = 16
    P: tuple = (1.0, 2.0, 4.0, np.inf)
    radii: tuple = (3.0,)
    bc: str = "free"  # free | dirichlet
    truncation_threshold: float = 0.1
    mollify_n: int = 0

    def __post_init__(self):
        if not self.nu >= 0:
            raise ConfigError("sim.nu must be >= 0")
        if not self.T > 0:
            raise ConfigError("sim.T must be > 0")
        if not 0 < self.cfl <= 1:
            raise ConfigError("sim.cfl must lie in (0, 1]")
        if self.samples < 2:
            raise ConfigError("sim.samples must be >= 2")
        if any(p < 1 for p in self.P):
            raise ConfigError("norm exponents must lie in [1, inf]")
        if self.limiter not in ("minmod", "centered"):
            raise ConfigError(f"unknown limiter {self.limiter!r}")
        if self.diffusion not in ("explicit", "split-implicit"):
            raise ConfigError(f"unknown diffusion treatment {self.diffusion!r}")
        if self.interp not in ("bilinear", "cubic"):
            raise ConfigError(f"unknown interpolation {self.interp!r}")
        if self.bc not in ("free", "dirichlet"):
            raise ConfigError(f"unknown boundary condition {self.bc!r}")

    @property
    def sample_times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.samples)

    def initial(self) -> ScalarField:
        xi0 = self.init.build(self.grid)
        if self.mollify_n:
            xi0 = mollify(xi0, self.mollify_n)
        return xi0

    def forcing(self):
        return self.force.generator(self.grid, self.T, self.mollify_n)

    def with_(self, **kw) -> "SimConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class SweepConfig:
    sim: SimConfig = SimConfig()
    nu_max: float = 1e-2
    factor: float = 0.5
    count: int = 6
    out_dir: str = "out"
    workers: int = 1
    floor_factor: float = 5.0
    mollified_family: bool = False
    euler_interp: str = "cubic"  # interpolation of the inviscid reference and its floor run
    floor: bool = True  # measure the resolution floor with a run at h/2
    record_wall: bool = False  # wall-clock in report.csv (breaks byte-identical reruns)
    text: str = ""

    def __post_init__(self):
        if not self.nu_max > 0:
            raise ConfigError("sweep.nu_max must be > 0")
        if not 0 < self.factor < 1:
            raise ConfigError("sweep.factor must lie in (0, 1)")
        if self.count < 3:
            raise ConfigError(f"sweep.count must be >= 3 (count ≥ 3), got {self.count}")
        if self.workers < 1:
            raise ConfigError("sweep.workers must be >= 1")
        if self.euler_interp not in ("bilinear", "cubic"):
            raise ConfigError(f"unknown interpolation {self.euler_interp!r}")

    def ladder(self) -> list[float]:
        return [self.nu_max * self.factor ** k for k in range(self.count)]

    def fingerprint(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()[:16]


# accepted keys and their value parsers
_FLOAT, _INT, _STR = float, int, str

KEYS = {
    "grid.nr": _INT,
    "grid.nz": _INT,
    "domain.R": _FLOAT,
    "domain.zmin": _FLOAT,
    "domain.zmax": _FLOAT,
    "domain.bc": _STR,
    "sim.nu": _FLOAT,
    "sim.T": _FLOAT,
    "sim.cfl": _FLOAT,
    "sim.samples": _INT,
    "sim.limiter": _STR,
    "sim.diffusion": _STR,
    "sim.interp": _STR,
    "sim.truncation": _FLOAT,
    "sim.mollify_n": _INT,
    "init.kind": _STR,
    "init.r0": _FLOAT,
    "init.z0": _FLOAT,
    "init.sigma": _FLOAT,
    "init.amp": _FLOAT,
    "init.path": _STR,
    "force.kind": _STR,
    "force.r0": _FLOAT,
    "force.z0": _FLOAT,
    "force.radius": _FLOAT,
    "force.amp": _FLOAT,
    "force.mollify_n": _INT,
    "sweep.nu_max": _FLOAT,
    "sweep.factor": _FLOAT,
    "sweep.count": _INT,
    "sweep.workers": _INT,
    "sweep.mollified": _INT,
    "sweep.euler_interp": _STR,
    "sweep.floor": _INT,
    "sweep.record_wall": _INT,
    "out.dir": _STR,
}


def parse_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = KEYS[key](val)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value {val!r} for {key}") from None
    return values


def sim_from_values(v: dict) -> SimConfig:
    d = SimConfig()
    try:
        grid = make_grid(v.get("grid.nr", d.grid.nr), v.get("grid.nz", d.grid.nz),
                         v.get("domain.R", d.grid.R), v.get("domain.zmin", d.grid.zmin),
                         v.get("domain.zmax", d.grid.zmax))
    except ValueError as e:
        raise ConfigError(str(e)) from None
    init = InitSpec(v.get("init.kind", d.init.kind), v.get("init.r0", d.init.r0), v.get("init.z0", d.init.z0),
                    v.get("init.sigma", d.init.sigma), v.get("init.amp", d.init.amp), v.get("init.path", ""))
    force = ForceSpec(v.get("force.kind", d.force.kind), v.get("force.r0", d.force.r0),
                      v.get("force.z0", d.force.z0), v.get("force.radius", d.force.radius),
                      v.get("force.amp", d.force.amp), v.get("force.mollify_n", 0))
    for kind, allowed in ((init.kind, ("gaussian", "hill", "zero", "snapshot")),
                          (force.kind, ("zero", "bump", "pulse"))):
        if kind not in allowed:
            raise ConfigError(f"unknown kind {kind!r}; expected one of {allowed}")
    return SimConfig(grid=grid, nu=v.get("sim.nu", d.nu), T=v.get("sim.T", d.T), init=init, force=force,
                     cfl=v.get("sim.cfl", d.cfl), limiter=v.get("sim.limiter", d.limiter),
                     diffusion=v.get("sim.diffusion", d.diffusion), interp=v.get("sim.interp", d.interp),
                     samples=v.get("sim.samples", d.samples), bc=v.get("domain.bc", d.bc),
                     truncation_threshold=v.get("sim.truncation", d.truncation_threshold),
                     mollify_n=v.get("sim.mollify_n", d.mollify_n))


def load_sim(text: str) -> SimConfig:
    return sim_from_values(parse_text(text))


def load_sweep(text: str) -> SweepConfig:
    v = parse_text(text)
    d = SweepConfig()
    return SweepConfig(sim=sim_from_values(v), nu_max=v.get("sweep.nu_max", d.nu_max),
                       factor=v.get("sweep.factor", d.factor), count=v.get("sweep.count", d.count),
                       out_dir=v.get("out.dir", d.out_dir), workers=v.get("sweep.workers", d.workers),
                       mollified_family=bool(v.get("sweep.mollified", 0)),
                       euler_interp=v.get("sweep.euler_interp", d.euler_interp),
                       floor=bool(v.get("sweep.floor", 1)), record_wall=bool(v.get("sweep.record_wall", 0)),
                       text=text)


def read_config_file(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
