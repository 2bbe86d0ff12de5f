"""Exception hierarchy shared by all modules."""


class MechanismError(Exception):
    """Base class for every error raised by strictsp."""


class DomainError(MechanismError, ValueError):
    """An argument lies outside the domain of an operation."""


class FeasibilityError(MechanismError, ValueError):
    """A requested construction would violate the feasibility regime."""


class PreconditionError(MechanismError):
    """An input mechanism does not satisfy an operation's precondition."""


class EnvelopeContractError(PreconditionError):
    """The deviation-loss identity was requested for a non-envelope mechanism."""


class QuadratureError(MechanismError, ArithmeticError):
    """Adaptive quadrature failed to reach its tolerance."""


class ConvergenceError(MechanismError, ArithmeticError):
    """The perturbation-size search underflowed without meeting the bound."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class MechanismFormatError(MechanismError, ValueError):
    """A mechanism file is malformed. ``where`` names the offending field or line."""

    def __init__(self, message, where=None):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where
