"""Classical emulation of block-encoded Runge-Kutta and Taylor propagators for H(t)."""

from . import blockenc, coeffexpr, costmodel, hamiltonian, numerics, reference, rk, taylor
from .blockenc import BlockEncoding, CostRecord
from .errors import (ConfigError, ContractError, NumericalError, OracleError, TdhsimError)
from .hamiltonian import TimeDependentHamiltonian, benchmark_hamiltonian

__version__ = "0.1.0"

__all__ = [
    "BlockEncoding", "ConfigError", "ContractError", "CostRecord", "NumericalError", "OracleError",
    "TdhsimError", "TimeDependentHamiltonian", "benchmark_hamiltonian", "blockenc", "coeffexpr",
    "costmodel", "hamiltonian", "numerics", "reference", "rk", "taylor",
]
