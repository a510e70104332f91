"""Exception types shared across the package."""


class RbfError(Exception):
    """Base class for all errors raised by rbfpde."""


class ParameterError(RbfError, ValueError):
    """A physical or numerical parameter is outside its admissible range."""


class DomainError(RbfError, ValueError):
    """A function was evaluated outside its domain (e.g. K_nu at x = 0)."""


class SingularityError(DomainError):
    """A singular kernel or function was evaluated at its singular point."""


class ConvergenceError(RbfError, ArithmeticError):
    """A series or iteration did not converge within its term budget."""


class CapabilityError(RbfError, NotImplementedError):
    """The requested (operator, order, dimension) combination is unsupported."""


class GeometryError(RbfError, ValueError):
    """Invalid geometry parameters or node counts."""


class SymmetryError(GeometryError):
    """A node cloud is not invariant under point reflection."""


class StructureError(RbfError, ValueError):
    """A matrix does not have the structure a solver requires."""


class ConditioningError(RbfError, ArithmeticError):
    """A collocation or interpolation matrix is numerically singular."""

    def __init__(self, message, pivot_index=None, condition=None):
        super().__init__(message)
        self.pivot_index = pivot_index
        self.condition = condition


class RankError(ConditioningError):
    """A least-squares matrix is column-rank deficient."""

    def __init__(self, message, rank=None):
        super().__init__(message)
        self.rank = rank


class ConfigError(RbfError, ValueError):
    """An experiment configuration is malformed or inconsistent."""


class FitError(RbfError, ValueError):
    """Too few usable rows for a convergence-rate fit."""
