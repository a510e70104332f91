"""Radial basis function boundary-knot, particle and collocation solvers for linear PDEs."""

from .errors import (
    CapabilityError,
    ConditioningError,
    ConfigError,
    ConvergenceError,
    DomainError,
    FitError,
    GeometryError,
    ParameterError,
    RankError,
    RbfError,
    SingularityError,
    StructureError,
    SymmetryError,
)
from .kernels import OperatorSpec, fundamental_solution, general_solution, make_kernel_rbf, multiquadric
from .geometry import NodeCloud, NodeKind
from .solvers import (
    BoundaryValueProblem,
    Field,
    Solution,
    bkm_solve,
    bpm_solve,
    kansa_solve,
    l2_relative_error,
    lsrcm_solve,
    mkm_solve,
)

__version__ = "0.1.0"
