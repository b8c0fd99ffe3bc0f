"""
Singular Elliptic Laboratory
Constructs, solves and verifies positive solutions of singular degenerate
elliptic Dirichlet problems on intervals and radial balls.
"""

__version__ = "1.0.0"
__author__ = "Singular Elliptic Lab Team"
__description__ = "Closed-form, radial, monotone-scheme and eigenvalue solvers with a verification harness"
