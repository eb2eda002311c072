"""Numerical laboratory for 3D incompressible Euler flows under extended
octahedral symmetry: group machinery, singular-integral quadrature, closed
form solutions, and the amplitude blow-up ODE."""

__version__ = "0.1.0"

from . import biot3d, blowup, fields, quadrature, singular2d, symgroup  # noqa: F401
