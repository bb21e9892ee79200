"""Numerical lab for higher-order abstract Cauchy problems.

Modules
-------
polyspec      exact polynomial families and the characteristic condition
reduction     companion, Delta and Psi block matrices
backends      finite-dimensional operators (diagonal, OU, spectral derivative)
eigenfields   eigenvector fields, their lifts and sampled subspaces
dynamics      exact-exponential evolution, ACP residuals, regularized checks
recurrence    visit sets, lower densities and the recurrence harness
scenarios     built-in scenarios behind the ``hclab`` command
"""
from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
