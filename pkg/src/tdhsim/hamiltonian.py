"""Time-dependent Hamiltonians H(t) = sum_i gamma_i(t) H_i and their block encodings."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from . import blockenc as be
from . import coeffexpr as ce
from . import costmodel
from .errors import (CoefficientBoundError, ContractError, DegenerateDerivativeError,
                     NormAssumptionError)
from .numerics import batched_spectral_norm, hermitian_exp, is_hermitian, spectral_norm

NORM_LIMIT = 0.5
NORM_TOL = 1e-9
COEFF_TOL = 1e-9
DELTA = 0.5
# relative slack on grid-estimated bounds when they are used as subnormalizations
GRID_SLACK = 1e-6

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_matrix(label: str) -> np.ndarray:
    """Kronecker product of single-qubit Paulis; the first letter is the most significant qubit."""
    if not label or any(ch not in PAULI for ch in label):
        raise ContractError(f"invalid Pauli string {label!r}")
    return reduce(np.kron, (PAULI[ch] for ch in label))


def pauli_sum(spec: Sequence[tuple[str, float]]) -> np.ndarray:
    if not spec:
        raise ContractError("a term needs at least one Pauli string")
    widths = {len(s) for s, _ in spec}
    if len(widths) != 1:
        raise ContractError("Pauli strings in one term must have equal length")
    return sum(float(w) * pauli_matrix(s) for s, w in spec)


@dataclass(frozen=True, eq=False)
class HamiltonianTerm:
    matrix: np.ndarray
    weight_spec: tuple[tuple[str, float], ...] = ()
    sparsity: int = 0
    norm: float = 0.0

    @classmethod
    def from_paulis(cls, spec: Sequence[tuple[str, float]]) -> "HamiltonianTerm":
        spec = tuple((str(s), float(w)) for s, w in spec)
        return cls.from_matrix(pauli_sum(spec), spec)

    @classmethod
    def from_matrix(cls, matrix, weight_spec=()) -> "HamiltonianTerm":
        m = np.array(matrix, dtype=complex)
        if not is_hermitian(m):
            raise ContractError("term matrix must be Hermitian")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        nrm = spectral_norm(m)
        if nrm > NORM_LIMIT + NORM_TOL:
            raise NormAssumptionError(
                f"||H_i|| = {nrm:.6g} violates the assumption that each H_i has norm at most 1/2")
        sparsity = int(np.max(np.count_nonzero(np.abs(m) > 0, axis=1)))
        return cls(m, tuple(weight_spec), max(sparsity, 1), nrm)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class DerivativeBounds:
    """Grid estimates M_j = max_t ||d^j H/dt^j|| for j = 0..p, and M = max_j M_j."""

    per_order: tuple[float, ...]

    @property
    def overall(self) -> float:
        return max(self.per_order)

    @property
    def order(self) -> int:
        return len(self.per_order) - 1

    def __getitem__(self, j: int) -> float:
        return self.per_order[j]


@dataclass(frozen=True, eq=False)
class TimeDependentHamiltonian:
    """H(t) = sum_i gamma_i(t) H_i on a register of ``qubits`` qubits.

    Construction validates |gamma_i(t)| <= 1 and ||H(t)|| <= 1/2 on a uniform
    grid of ``grid_points`` samples of [0, 1].
    """

    terms: tuple[tuple[ce.Expr, HamiltonianTerm], ...]
    qubits: int
    grid_points: int = ce.DEFAULT_GRID
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.RLock = field(default_factory=threading.RLock, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ContractError("a Hamiltonian needs at least one term")
        dim = 2**self.qubits
        for i, (coeff, term) in enumerate(self.terms):
            if term.dim != dim:
                raise ContractError(f"term {i} has dimension {term.dim}, expected {dim}")
            bound = ce.bound_abs(coeff, self.grid_points)
            if bound > 1.0 + COEFF_TOL:
                raise CoefficientBoundError(
                    f"coefficient {i} ({coeff}) reaches {bound:.6g}, which violates the assumption |γ_i(t)| ≤ 1")
        peak = self.derivative_bounds(0).per_order[0]
        if peak > NORM_LIMIT + NORM_TOL:
            raise NormAssumptionError(
                f"max_t ||H(t)|| = {peak:.6g} violates the assumption ||H(t)|| ≤ 1/2 (norm at most 1/2)")

    @classmethod
    def from_terms(cls, terms: Sequence[tuple[str | ce.Expr, Sequence[tuple[str, float]]]],
                  grid_points: int = ce.DEFAULT_GRID) -> "TimeDependentHamiltonian":
        built = []
        for coeff, paulis in terms:
            expr = ce.parse(coeff) if isinstance(coeff, str) else coeff
            built.append((expr, HamiltonianTerm.from_paulis(paulis)))
        qubits = built[0][1].dim.bit_length() - 1
        return cls(tuple(built), qubits, grid_points)

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def dim(self) -> int:
        return 2**self.qubits

    @property
    def d_max(self) -> int:
        return max(term.sparsity for _, term in self.terms)

    @property
    def h_max(self) -> float:
        return max(term.norm for _, term in self.terms)

    def _memo(self, key, build):
        value = self._cache.get(key)
        if value is None:
            with self._lock:
                value = self._cache.get(key)
                if value is None:
                    value = build()
                    self._cache[key] = value
        return value

    def coeff_derivative(self, i: int, j: int) -> ce.Expr:
        if j == 0:
            return self.terms[i][0]
        return self._memo(("dcoeff", i, j), lambda: ce.differentiate(self.terms[i][0], j))

    def coefficients(self, t: float, j: int = 0) -> np.ndarray:
        return np.array([ce.eval_float(self.coeff_derivative(i, j), t) for i in range(self.m)])

    def stack(self) -> np.ndarray:
        return self._memo(("stack",), lambda: np.stack([term.matrix for _, term in self.terms]))

    def evaluate(self, t: float) -> np.ndarray:
        return np.einsum("i,ijk->jk", self.coefficients(t), self.stack())

    def evaluate_many(self, ts: np.ndarray) -> np.ndarray:
        """H(t) for a vector of times, shape (len(ts), dim, dim)."""
        ts = np.asarray(ts, dtype=float)
        vals = np.stack([np.broadcast_to(ce.evaluate(e, ts), ts.shape) for e, _ in self.terms])
        return np.einsum("ig,ijk->gjk", vals, self.stack())

    def derivative(self, t: float, j: int) -> np.ndarray:
        if j < 1:
            raise ContractError("derivative order must be >= 1")
        return np.einsum("i,ijk->jk", self.coefficients(t, j), self.stack())

    def derivative_bounds(self, p: int, gridpoints: int | None = None) -> DerivativeBounds:
        """M_j for j = 0..p as maxima of ||d^j H/dt^j|| over a uniform grid."""
        g = gridpoints or self.grid_points
        return self._memo(("bounds", p, g), lambda: self._bounds(p, g))

    def _bounds(self, p: int, g: int) -> DerivativeBounds:
        grid = np.linspace(0.0, 1.0, g)
        out = []
        for j in range(p + 1):
            exprs = [self.coeff_derivative(i, j) for i in range(self.m)]
            if all(ce.is_zero(e) for e in exprs):
                out.append(0.0)
                continue
            vals = np.stack([np.broadcast_to(ce.evaluate(e, grid), grid.shape) for e in exprs])
            mats = np.einsum("ig,ijk->gjk", vals, self.stack())
            out.append(float(np.max(batched_spectral_norm(mats))))
        return DerivativeBounds(tuple(out))

    def coefficient_bound(self, j: int) -> float:
        """max_i max_t |d^j gamma_i/dt^j| on the grid."""
        return self._memo(("kappa", j), lambda: max(
            ce.bound_abs(self.coeff_derivative(i, j), self.grid_points) for i in range(self.m)))

    def term_encoding(self, i: int, eta: float) -> be.BlockEncoding:
        """Alpha-1 encoding of H_i: unitary-log encoding of exp(-iH_i) with the pi/2 factor scaled out."""
        def build():
            u = hermitian_exp(self.terms[i][1].matrix, 1.0)
            raw = be.encode_from_unitary(u, eta, term=i)
            return be.scale_down(raw, math.pi / 2)
        return self._memo(("term", i, eta), build)

    def validate(self) -> None:
        """Re-run the load-time assumption checks."""
        type(self)(self.terms, self.qubits, self.grid_points)


def benchmark_hamiltonian(grid_points: int = ce.DEFAULT_GRID) -> TimeDependentHamiltonian:
    """cos(t) 0.4 X(x)I + sin(t) 0.4 Z(x)Z on two qubits."""
    return TimeDependentHamiltonian.from_terms(
        [("cos(t)", [("XI", 0.4)]), ("sin(t)", [("ZZ", 0.4)])], grid_points)


def inner_precision(m: int, eps: float) -> float:
    """Per-primitive precision so the assembled H(t) encoding has error <= eps."""
    return eps / (m + 1)


def _clip_amplitude(a: float, what: str) -> float:
    if abs(a) > 1.0 + COEFF_TOL:
        raise CoefficientBoundError(f"{what} = {a:.6g} leaves [-1, 1], which violates the assumption |γ_i(t)| ≤ 1")
    return max(-1.0, min(1.0, a))


def encode_two_block(H: TimeDependentHamiltonian, amplitudes: Sequence[float], eta: float) -> be.BlockEncoding:
    """Uniform combination of diag(a_i, sqrt(1-a_i^2)) (x) H_i over all terms.

    The target is block-diagonal: sum a_i H_i on top, sum sqrt(1-a_i^2) H_i below;
    subnormalization m.
    """
    q = costmodel.unitary_log_queries(eta)
    parts = []
    for i, a in enumerate(amplitudes):
        diag = be.encode_diagonal([a, math.sqrt(max(0.0, 1.0 - a * a))])
        diag = be.charge(diag, depth=q)  # coefficient transform t -> gamma_i(t)
        parts.append(be.tensor(diag, H.term_encoding(i, eta)))
    return be.linear_combine(parts, [1.0] * len(parts))


def block_encode_H(H: TimeDependentHamiltonian, t: float, eps: float) -> be.BlockEncoding:
    """Alpha-1 encoding of H(t) with err <= eps."""
    eta = inner_precision(H.m, eps)
    amps = [_clip_amplitude(g, f"gamma_{i}(t)") for i, g in enumerate(H.coefficients(t))]
    top = be.project_top_left(encode_two_block(H, amps, eta), H.dim)
    if H.m == 1:
        return top
    return be.relabel(be.amplify(top, float(H.m), DELTA, eta), 1.0)


def derivative_alpha(bound: float) -> float:
    """Subnormalization of a derivative encoding: the bound with 1/2 amplification headroom."""
    return 2.0 * bound * (1.0 + GRID_SLACK)


def block_encode_H_derivative(H: TimeDependentHamiltonian, t: float, j: int, eps: float,
                              bounds: DerivativeBounds | None = None) -> be.BlockEncoding:
    """Encoding of d^j H/dt^j with alpha ``derivative_alpha(M_j)``."""
    if j < 1:
        raise ContractError("derivative order must be >= 1")
    if bounds is None or bounds.order < j:
        bounds = H.derivative_bounds(j)
    mj = bounds[j]
    if mj == 0.0:
        target = H.derivative(t, j)
        if spectral_norm(target) > 0.0:
            raise DegenerateDerivativeError(f"M_{j} = 0 but the derivative at t={t} is nonzero")
        return be.zero(H.dim)
    eta = inner_precision(H.m, eps)
    kappa = H.coefficient_bound(j) * (1.0 + GRID_SLACK)
    amps = [_clip_amplitude(c / kappa, f"normalized derivative of gamma_{i}")
            for i, c in enumerate(H.coefficients(t, j))]
    top = be.project_top_left(encode_two_block(H, amps, eta), H.dim)
    top = be.relabel(top, top.alpha * kappa)
    alpha = derivative_alpha(mj)
    gamma = top.alpha / alpha
    if gamma > be.SCALE_MIN:
        top = be.amplify(top, gamma, DELTA, eta)
    elif 1.0 / gamma > be.SCALE_MIN:
        top = be.scale_down(top, 1.0 / gamma)
    return be.relabel(top, alpha)
