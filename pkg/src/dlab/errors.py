"""Exception hierarchy shared across the package."""


class DlabError(Exception):
    """Base class for all package-specific errors."""


class DomainError(DlabError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConstructionError(DlabError, ValueError):
    """A builder was given parameters that violate its preconditions."""


class NumericError(DlabError, ArithmeticError):
    """An iteration or quadrature failed to reach its target accuracy."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SingularIntegrandError(NumericError):
    """Adaptive quadrature exceeded its recursion depth."""

    def __init__(self, message, breakpoint=None):
        super().__init__(message)
        self.breakpoint = breakpoint


class RangeError(DlabError, ValueError):
    """A flow-chart evaluation fell outside the extendable orbit range."""


class SizeError(DlabError, ValueError):
    """An iterate or orbit request exceeded the hard size cap."""


class DecompositionError(DlabError, ValueError):
    """A supplied interval decomposition is not invariant under the map."""


class UnsupportedFieldError(DlabError, ValueError):
    """The vector field violates a structural precondition (e.g. interior zeros)."""


class InconsistencyError(DlabError, RuntimeError):
    """Two independent computation routes disagree beyond the allowed margin."""

    def __init__(self, message, values=()):
        super().__init__(message)
        self.values = tuple(values)
