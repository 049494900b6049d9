from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import ScalarField


def pkey(p: float) -> str:
    return "inf" if p == np.inf else f"{p:g}"


@dataclass
class Trajectory:
    """Snapshots at the sample times plus per-step diagnostic series.

    ``series`` holds one entry per step boundary (index 0 is t = 0).  Budget
    columns are cumulative: ``D_<p>`` (dissipation), ``work_<p>`` (force work),
    ``axis`` (axis dissipation of the p = 2 balance), ``gint_<p>`` (running
    integral of ||g||_p).
    """
    kind: str
    nu: float
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    sample_steps: list = field(default_factory=list)

    def record(self, **values):
        for k, v in values.items():
            self.series.setdefault(k, []).append(float(v))

    def add_sample(self, t: float, xi: ScalarField):
        self.times.append(float(t))
        self.snapshots.append(xi.copy())
        self.sample_steps.append(len(self.series.get("t", [])) - 1)

    def at_samples(self, key: str) -> np.ndarray:
        s = np.asarray(self.series[key])
        return s[self.sample_steps]

    def column(self, key: str) -> np.ndarray:
        return np.asarray(self.series[key])

    @property
    def final(self) -> ScalarField:
        return self.snapshots[-1]

    @property
    def steps(self) -> int:
        return len(self.series.get("t", [])) - 1
