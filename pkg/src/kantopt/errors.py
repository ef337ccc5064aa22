"""Exception hierarchy.

Two families matter to callers: ``SpecError`` covers malformed input
(expressions, spec files, games that fail validation) and ``SolverError``
covers numerical failures on otherwise well-formed input.  The CLI maps
them to exit codes 2 and 1.
"""

from __future__ import annotations


class KantoptError(Exception):
    """Base class for every error raised by this package."""


class SpecError(KantoptError, ValueError):
    """Input could not be understood."""


class SolverError(KantoptError, RuntimeError):
    """A solver could not produce the requested object."""


class ExprError(SpecError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int, source: str = ""):
        self.position = position
        self.source = source
        super().__init__(f"{message} at position {position}")


class UnknownIdentifierError(ExprSyntaxError):
    pass


class UnboundVariableError(ExprError, KeyError):
    def __str__(self) -> str:  # KeyError would repr() the message
        return self.args[0] if self.args else ""


class ExprDomainError(ExprError, ArithmeticError):
    """An operation was applied outside its domain (sqrt of a negative, ...)."""

    def __init__(self, message: str, node: str = ""):
        self.node = node
        super().__init__(f"{message} in `{node}`" if node else message)


class DerivativeUndefinedError(ExprDomainError):
    """The value exists but the derivative does not (sqrt at 0, ...)."""


class InfeasibleError(KantoptError, ValueError):
    """A strategy lies outside the game domain or the rescaling's domain."""


class GameValidationError(SpecError):
    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)


class RescalingError(SpecError):
    pass


class NoInteriorNashError(SolverError):
    pass


class NoSymmetricEquilibriumError(SolverError):
    pass


class AmbiguousFocalError(SolverError):
    pass


class UndefinedRoleError(KantoptError, ValueError):
    pass
