"""Exact finite-dimensional reduction for fixed-endpoint variational problems.

Stationary paths of the action (and stationary fields of semilinear
Dirichlet problems on rectangles) are found by splitting the sine basis
at a certified cutoff, solving the strongly monotone tail exactly, and
root-finding the finite reduced system; Morse indices come from the
Schur complement of the tail block, cross-checked against the full
truncated spectrum and conjugate-point counting.
"""

from .dirichlet import (DirichletField, DirichletPlan, DirichletSolution,
                        EigenMode, RectangleDomain, dirichlet_plan,
                        enumerate_modes, solve_dirichlet, weyl_estimate)
from .fourier import (BoundaryProblem, SinePath, affine_embed, analyze_on_grid,
                      project_head, project_tail, sample_on_grid)
from .functional import HessianBlocks, action_value, gradient, hessian_blocks
from .morse import IndexReport, index_full, index_jacobi, index_schur, reduced_hessian
from .potentials import Potential, builtin_potential, parse_potential
from .reduction import (ReductionPlan, SolutionReport, UncertifiedPotentialError,
                        fixed_point_cutoff, make_plan, reduced_gradient,
                        solve_reduced, solve_tail)

__version__ = "0.1.0"

__all__ = [
    "BoundaryProblem",
    "DirichletField",
    "DirichletPlan",
    "DirichletSolution",
    "EigenMode",
    "HessianBlocks",
    "IndexReport",
    "Potential",
    "RectangleDomain",
    "ReductionPlan",
    "SinePath",
    "SolutionReport",
    "UncertifiedPotentialError",
    "action_value",
    "affine_embed",
    "analyze_on_grid",
    "builtin_potential",
    "dirichlet_plan",
    "enumerate_modes",
    "fixed_point_cutoff",
    "gradient",
    "hessian_blocks",
    "index_full",
    "index_jacobi",
    "index_schur",
    "make_plan",
    "parse_potential",
    "project_head",
    "project_tail",
    "reduced_gradient",
    "reduced_hessian",
    "sample_on_grid",
    "solve_dirichlet",
    "solve_reduced",
    "solve_tail",
    "weyl_estimate",
]
