"""Axisymmetric swirl-free vorticity laboratory: viscous and inviscid solvers plus diagnostics."""
from .grid import Grid, ScalarField, lp_norm_3d, lp_norm_tail, make_grid, mollify

__all__ = ["Grid", "ScalarField", "lp_norm_3d", "lp_norm_tail", "make_grid", "mollify"]
__version__ = "0.1.0"
