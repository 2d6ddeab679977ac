"""Exception hierarchy shared by every module.

Each class carries the CLI exit code it maps to.
"""


class TdhsimError(Exception):
    exit_code = 1


class ContractError(TdhsimError, ValueError):
    """A caller broke an operation's precondition."""

    exit_code = 3


class NumericalError(TdhsimError, ArithmeticError):
    exit_code = 4


class BranchAmbiguityError(NumericalError):
    """An eigenphase sits on the branch cut of the principal logarithm."""


class OracleError(NumericalError):
    """The reference propagator failed to converge."""


class SubnormalizationError(ContractError):
    """The encoded block A/alpha is not a contraction."""


class NormAssumptionError(ContractError):
    """A Hamiltonian norm exceeds 1/2."""


class HeadroomError(ContractError):
    """Amplification or block scaling would push singular values past their limit."""


class DegenerateDerivativeError(ContractError):
    """A derivative encoding was requested with a zero derivative bound."""


class ConfigError(TdhsimError):
    exit_code = 2


class ExprSyntaxError(ConfigError):
    """Malformed coefficient expression; ``offset`` is the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class CoefficientBoundError(ContractError):
    """A coefficient gamma_i(t) leaves [-1, 1] on [0, 1]."""
