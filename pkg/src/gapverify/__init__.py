"""Finite-difference verification of sharp eigenvalue-gap and log-concavity estimates.

Modules
-------
geometry   convex domains, grids, admissible node pairs
operator   discrete Schrodinger and drift-Laplacian operators, difference calculus
eigen      lowest eigenpairs with residual certification, Richardson extrapolation
model1d    closed-form one-dimensional model (eigendata, heat kernel, barrier functions)
modulus    expansion-modulus slack, log-concavity, ratio continuity
heat       Dirichlet heat kernels and the parabolic comparison
bounds     eigenvalue lower-bound verdicts
cli        config-driven runner and report emission
"""
from ._kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
