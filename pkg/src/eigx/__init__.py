"""Crouzeix-Raviart and enriched CR eigenvalue expansions, extrapolation and checks."""
from .mesh import Mesh, build_initial, build_level, mesh_hierarchy, refine_uniform
from .spaces import AnalyticField, FeFunction, FeSpace, sine_mode
from .assembly import apply_dirichlet, assemble_mass, assemble_mixed_rt, assemble_stiffness
from .solve import EigenResult, SolverError, solve_eigs_smallest, solve_sym_linear
from .analysis import ExtrapolationTable, gamma_constants, richardson_known, richardson_unknown
from .bench import ExperimentConfig, reference_eigenvalues, run_example, run_verification_suite

__all__ = [
    "Mesh", "build_initial", "build_level", "mesh_hierarchy", "refine_uniform",
    "AnalyticField", "FeFunction", "FeSpace", "sine_mode",
    "apply_dirichlet", "assemble_mass", "assemble_mixed_rt", "assemble_stiffness",
    "EigenResult", "SolverError", "solve_eigs_smallest", "solve_sym_linear",
    "ExtrapolationTable", "gamma_constants", "richardson_known", "richardson_unknown",
    "ExperimentConfig", "reference_eigenvalues", "run_example", "run_verification_suite",
]
