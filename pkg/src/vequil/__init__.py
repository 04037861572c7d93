"""Numerical constrained energy minimization for vector measures on signed condensers."""

from .condenser import (
    Condenser,
    FieldSpec,
    Plate,
    ScalarSignedMeasure,
    VectorMeasure,
    check_feasibility,
    condenser_gram,
    energy,
    make_plate,
    mutual_energy,
    r_map,
    scalar_energy,
    scalar_mutual_energy,
    scalar_sum,
    semimetric_distance,
    weighted_energy,
    zero_field,
)
from .errors import (
    ConfigError,
    DimensionMismatch,
    EigensolverError,
    InfeasibleProblem,
    KernelDomainError,
    NotPositiveDefinite,
    VequilError,
)
from .kernels import (
    GramMatrix,
    KernelSpec,
    PDReport,
    assemble_gram,
    check_positive_definite,
    cross_kernel,
    evaluate_kernel,
    minimum_spacing,
    resolve_epsilon,
)
from .solver import (
    KKTReport,
    Problem,
    SolveReport,
    SolverConfig,
    project_plate,
    solve,
    verify_kkt,
)

__version__ = "0.1.0"

__all__ = [
    "Condenser",
    "ConfigError",
    "DimensionMismatch",
    "EigensolverError",
    "FieldSpec",
    "GramMatrix",
    "InfeasibleProblem",
    "KKTReport",
    "KernelDomainError",
    "KernelSpec",
    "NotPositiveDefinite",
    "PDReport",
    "Plate",
    "Problem",
    "ScalarSignedMeasure",
    "SolveReport",
    "SolverConfig",
    "VectorMeasure",
    "VequilError",
    "assemble_gram",
    "check_feasibility",
    "check_positive_definite",
    "condenser_gram",
    "cross_kernel",
    "energy",
    "evaluate_kernel",
    "make_plate",
    "minimum_spacing",
    "mutual_energy",
    "project_plate",
    "r_map",
    "resolve_epsilon",
    "scalar_energy",
    "scalar_mutual_energy",
    "scalar_sum",
    "semimetric_distance",
    "solve",
    "verify_kkt",
    "weighted_energy",
    "zero_field",
]
