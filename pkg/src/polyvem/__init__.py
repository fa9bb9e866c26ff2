"""Nonconforming virtual element methods for polyharmonic equations.

The package solves (-Delta)^m u = f with homogeneous Dirichlet data of
order m on polytopal meshes in R^n (m <= n), using H^m-nonconforming
virtual elements of arbitrary order k >= m.  Virtual shape functions are
never evaluated; every computation routes through degrees of freedom,
generalized integration by parts over the face lattice, and polynomial
projections.
"""

__version__ = "0.1.0"
