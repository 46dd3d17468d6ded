"""Numerical laboratory for the spatially homogeneous Boltzmann equation
in the very soft, non-cutoff regime.

The package provides truncated velocity grids, singular angular kernels,
weighted Lebesgue/Sobolev functionals, direct quadrature of the collision
operator, a suite of quantitative inequality checks with fitted constants,
and a toy explicit time integrator used to test Gronwall-type envelopes.
"""

__version__ = "0.1.0"

from .grid import ClassYBounds, GridFunction, VelocityGrid, interpolate, make_maxwellian, weight

__all__ = [
    "VelocityGrid",
    "GridFunction",
    "ClassYBounds",
    "make_maxwellian",
    "weight",
    "interpolate",
    "__version__",
]
