"""
conewave: Schrödinger flows on metric cones with inverse-square potentials.

Spectral (Hankel x angular mode) solvers for the linear and cubic
equations, plus numerical checks of the dispersive, Strichartz,
local-smoothing, Hardy, resolvent and uniform Sobolev estimates.
"""

from conewave.calculus import ConeField, SpectralMultiplier, apply_spectral_multiplier, propagate, sobolev_norm
from conewave.cross_section import CrossSectionModel, build_custom_spectrum, build_dipole_sphere, build_flat_sphere
from conewave.errors import ConeWaveError
from conewave.geometry import ConeGeometry, build_geometry
from conewave.hankel import HankelPlan, plan_dht

__version__ = "0.1.0"

__all__ = [
    "ConeField",
    "ConeGeometry",
    "ConeWaveError",
    "CrossSectionModel",
    "HankelPlan",
    "SpectralMultiplier",
    "apply_spectral_multiplier",
    "build_custom_spectrum",
    "build_dipole_sphere",
    "build_flat_sphere",
    "build_geometry",
    "plan_dht",
    "propagate",
    "sobolev_norm",
]
