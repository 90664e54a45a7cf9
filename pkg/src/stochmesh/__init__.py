"""Non-uniform 1-D meshes for boundary value problems from random-mesh statistics.

Solve a problem on many random sparse meshes, pool the solution values
into pointwise mean/variance estimates, and turn those into a monotone
mesh mapping ``Q`` via an equidistribution integrand.
"""

__version__ = "0.1.0"

from .exceptions import (
    DegenerateCriterionError,
    DegenerateMeshError,
    InsufficientDataError,
    InvalidStateError,
    NonlinearSolverError,
    SampleFailureError,
    SingularOperatorError,
    StochMeshError,
)
from .mesh import Mesh, MeshMapping, SamplingConfig, apply_mapping, max_gap, sample_sorted_mesh, uniform_mesh
from .discretize import TridiagonalOperator, assemble_second_derivative, solve_tridiagonal, stencil_coeffs
from .solvers import (
    HamiltonJacobiProblem,
    OscillatoryProblem,
    PoissonProblem,
    SampledSolution,
    SingularProblem,
    exact_error,
    make_problem,
    solve,
)
from .moments import MomentField, PointCloud, average_variance, density_grid, finalize_moments
from .qbuild import QCriterion, build_q, compare_mappings
from .harness import StudyConfig, StudyRecord, gap_diagnostic, run_pipeline, spectral_diagnostic, vbar_sweep
from .estimator import StochasticMeshGenerator

__all__ = [
    "DegenerateCriterionError", "DegenerateMeshError", "InsufficientDataError",
    "InvalidStateError", "NonlinearSolverError", "SampleFailureError",
    "SingularOperatorError", "StochMeshError",
    "Mesh", "MeshMapping", "SamplingConfig", "apply_mapping", "max_gap",
    "sample_sorted_mesh", "uniform_mesh",
    "TridiagonalOperator", "assemble_second_derivative", "solve_tridiagonal", "stencil_coeffs",
    "HamiltonJacobiProblem", "OscillatoryProblem", "PoissonProblem", "SampledSolution",
    "SingularProblem", "exact_error", "make_problem", "solve",
    "MomentField", "PointCloud", "average_variance", "density_grid", "finalize_moments",
    "QCriterion", "build_q", "compare_mappings",
    "StudyConfig", "StudyRecord", "gap_diagnostic", "run_pipeline", "spectral_diagnostic",
    "vbar_sweep", "StochasticMeshGenerator",
]
