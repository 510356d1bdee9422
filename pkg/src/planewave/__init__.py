"""Plane wave transform toolkit: transforms, linear and nonlinear Schrodinger solvers."""
from .field_core import Grid1D, PhysField2D, Profile1D, SpeedField, lp_norm, sobolev_norm

__all__ = ["Grid1D", "PhysField2D", "Profile1D", "SpeedField", "lp_norm", "sobolev_norm"]
__version__ = "0.1.0"
