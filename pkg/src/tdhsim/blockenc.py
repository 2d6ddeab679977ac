"""Block-encoding algebra emulated at matrix level.

A :class:`BlockEncoding` records the matrix ``target`` it encodes together with
its subnormalization ``alpha``, ancilla count, an error bound and the cost of
building it. The unitary itself is only formed on demand by :func:`materialize`;
composition works on the (small) target matrices.

Error bounds are in target units: the encoded operator ``alpha * block`` differs
from ``target`` by at most ``err`` in spectral norm. Every operation propagates
this bound by a first-order worst-case rule, so it stays an upper bound on the
true deviation when the inputs deviate by at most their own ``err``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import costmodel
from .errors import ContractError, HeadroomError, NormAssumptionError, SubnormalizationError
from .numerics import as_matrix, spectral_norm, unitary_dilation, unitary_log

BLOCK_TOL = 1e-9
SCALE_MIN = 1.0 + 1e-9


@dataclass(frozen=True)
class CostRecord:
    """Resource tally: per-term queries, abstract depth and peak ancillas.

    Sequential composition sums queries and depth and takes the max of the
    ancilla high-water marks.
    """

    queries: Mapping[int, int] = field(default_factory=dict)
    depth_units: int = 0
    ancilla_high_water: int = 0

    def __post_init__(self):
        if self.depth_units < 0 or self.ancilla_high_water < 0:
            raise ContractError("cost counts must be nonnegative")
        if any(v < 0 for v in self.queries.values()):
            raise ContractError("query counts must be nonnegative")
        object.__setattr__(self, "queries", dict(sorted(self.queries.items())))

    def __add__(self, other: "CostRecord") -> "CostRecord":
        q = dict(self.queries)
        for k, v in other.queries.items():
            q[k] = q.get(k, 0) + v
        return CostRecord(q, self.depth_units + other.depth_units,
                          max(self.ancilla_high_water, other.ancilla_high_water))

    def repeated(self, times: int) -> "CostRecord":
        return CostRecord({k: v * times for k, v in self.queries.items()},
                          self.depth_units * times, self.ancilla_high_water)

    def plus_depth(self, units: int) -> "CostRecord":
        return CostRecord(self.queries, self.depth_units + units, self.ancilla_high_water)

    def touching(self, ancillas: int) -> "CostRecord":
        return CostRecord(self.queries, self.depth_units, max(self.ancilla_high_water, ancillas))

    @property
    def queries_total(self) -> int:
        return sum(self.queries.values())

    def to_json(self) -> dict:
        return {
            "queries": {str(k): v for k, v in self.queries.items()},
            "queries_total": self.queries_total,
            "depth_units": self.depth_units,
            "ancilla_high_water": self.ancilla_high_water,
        }


def _sum_costs(costs) -> CostRecord:
    total = CostRecord()
    for c in costs:
        total = total + c
    return total


@dataclass(frozen=True, eq=False)
class BlockEncoding:
    target: np.ndarray
    alpha: float
    ancillas: int = 0
    err: float = 0.0
    cost: CostRecord = field(default_factory=CostRecord)

    def __post_init__(self):
        target = as_matrix(self.target)
        target.setflags(write=False)
        object.__setattr__(self, "target", target)
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise SubnormalizationError(f"alpha must be positive and finite, got {self.alpha}")
        if self.err < 0 or self.ancillas < 0:
            raise ContractError("err and ancillas must be nonnegative")
        ratio = spectral_norm(target) / self.alpha
        if ratio > 1.0 + BLOCK_TOL:
            raise SubnormalizationError(f"encoded block has norm {ratio:.12g} > 1")
        object.__setattr__(self, "cost", self.cost.touching(self.ancillas))

    @property
    def dim(self) -> int:
        return self.target.shape[0]

    @property
    def block(self) -> np.ndarray:
        return self.target / self.alpha

    def __repr__(self) -> str:
        return (f"BlockEncoding(dim={self.dim}, alpha={self.alpha:.6g}, ancillas={self.ancillas}, "
                f"err={self.err:.3g}, depth={self.cost.depth_units})")


def identity(dim: int) -> BlockEncoding:
    return BlockEncoding(np.eye(dim, dtype=complex), 1.0)


def zero(dim: int, alpha: float = 1.0) -> BlockEncoding:
    return BlockEncoding(np.zeros((dim, dim), dtype=complex), alpha)


def encode_from_unitary(u, eps: float, term: int = 0) -> BlockEncoding:
    """(2/pi, 2, eps) encoding of H = i log U, charging ceil(log2 1/eps) uses of U."""
    if not 0 < eps <= 0.5:
        raise ContractError("eps must lie in (0, 1/2]")
    h = unitary_log(u)
    if spectral_norm(h) > 0.5 + BLOCK_TOL:
        raise NormAssumptionError("||H_i|| violates the assumption: norm at most 1/2")
    q = costmodel.unitary_log_queries(eps)
    return BlockEncoding(h, 2.0 / math.pi, 2, eps, CostRecord({term: q}, q))


def encode_diagonal(amplitudes: Sequence[complex]) -> BlockEncoding:
    """Exact encoding of diag(psi) for a normalized state psi of n qubits."""
    psi = np.asarray(amplitudes, dtype=complex).ravel()
    size = psi.size
    if size < 1 or size & (size - 1):
        raise ContractError("amplitude count must be a power of two")
    if abs(np.vdot(psi, psi).real - 1.0) > 1e-10:
        raise ContractError("amplitudes must have unit 2-norm")
    n = size.bit_length() - 1
    return BlockEncoding(np.diag(psi), 1.0, n + 3, 0.0,
                         CostRecord(depth_units=costmodel.diagonal_depth(n)))


def charge(x: BlockEncoding, depth: int = 0, queries: Mapping[int, int] | None = None) -> BlockEncoding:
    """Add cost without changing the encoded operator."""
    cost = x.cost.plus_depth(depth)
    if queries:
        cost = cost + CostRecord(queries)
    return BlockEncoding(x.target, x.alpha, x.ancillas, x.err, cost)


def tensor(x: BlockEncoding, y: BlockEncoding) -> BlockEncoding:
    return BlockEncoding(
        np.kron(x.target, y.target),
        x.alpha * y.alpha,
        x.ancillas + y.ancillas,
        x.alpha * y.err + y.alpha * x.err,
        (x.cost + y.cost).plus_depth(costmodel.TENSOR_DEPTH),
    )


def linear_combine(encodings: Sequence[BlockEncoding], weights: Sequence[float]) -> BlockEncoding:
    """Encode sum_i y_i A_i with subnormalization beta * max_i alpha_i.

    Inputs with smaller alpha are first brought to the common maximum; that
    rescaling is part of the combination's ``m`` depth charge.
    """
    if not encodings:
        raise ContractError("linear_combine needs at least one encoding")
    if len(weights) != len(encodings):
        raise ContractError("one weight per encoding required")
    dim = encodings[0].dim
    if any(e.dim != dim for e in encodings):
        raise ContractError("encodings must share a dimension")
    y = [float(w) for w in weights]
    if not all(math.isfinite(w) for w in y):
        raise ContractError("weights must be finite reals")
    beta = sum(abs(w) for w in y)
    if beta == 0:
        raise ContractError("weights may not all be zero")
    m = len(encodings)
    alpha_star = max(e.alpha for e in encodings)
    target = sum(w * e.target for w, e in zip(y, encodings))
    return BlockEncoding(
        target,
        beta * alpha_star,
        max(e.ancillas for e in encodings) + costmodel.combine_ancillas(m),
        sum(abs(w) * e.err for w, e in zip(y, encodings)),
        _sum_costs(e.cost for e in encodings).plus_depth(m),
    )


def multiply(x: BlockEncoding, y: BlockEncoding) -> BlockEncoding:
    if x.dim != y.dim:
        raise ContractError("multiply needs equal dimensions")
    return BlockEncoding(
        x.target @ y.target,
        x.alpha * y.alpha,
        x.ancillas + y.ancillas,
        x.alpha * y.err + y.alpha * x.err,
        (x.cost + y.cost).plus_depth(costmodel.MULTIPLY_DEPTH),
    )


def scale_down(x: BlockEncoding, p: float) -> BlockEncoding:
    """Encode A/p inside the same unitary footprint: alpha grows by p."""
    if not p > SCALE_MIN or not math.isfinite(p):
        raise ContractError(f"scale factor must exceed 1 (got {p!r})")
    return BlockEncoding(x.target, x.alpha * p, x.ancillas + 1, x.err,
                         x.cost.plus_depth(costmodel.SCALE_DEPTH))


def relabel(x: BlockEncoding, alpha: float) -> BlockEncoding:
    """Same unitary, described with a different subnormalization (free)."""
    k = alpha / x.alpha
    return BlockEncoding(x.target * k, alpha, x.ancillas, x.err * k, x.cost)


def phase(x: BlockEncoding, z: complex) -> BlockEncoding:
    """Multiply the encoded operator by a unit-modulus scalar (free)."""
    if abs(abs(z) - 1.0) > 1e-12:
        raise ContractError("phase must have unit modulus")
    return BlockEncoding(x.target * z, x.alpha, x.ancillas, x.err, x.cost)


def scaled(x: BlockEncoding, c: float) -> BlockEncoding:
    """Encode c*A at the same alpha, for real |c| <= 1 (scale_down plus relabel).

    The scaling gadget is charged even in the degenerate cases c = 0 and |c| = 1.
    """
    if abs(c) > 1.0 + 1e-12:
        raise HeadroomError(f"block scale factor {c:.6g} exceeds one; reduce the time step")
    if c != 0 and abs(c) * SCALE_MIN < 1.0:
        y = relabel(scale_down(x, 1.0 / abs(c)), x.alpha)
        return y if c > 0 else phase(y, -1.0)
    c = math.copysign(min(abs(c), 1.0), c)
    return BlockEncoding(c * x.target, x.alpha, x.ancillas + 1, abs(c) * x.err,
                         x.cost.plus_depth(costmodel.SCALE_DEPTH))


def project_top_left(x: BlockEncoding, dim: int) -> BlockEncoding:
    """Restrict to the leading dim x dim block; the dropped index qubit joins the ancillas."""
    if x.dim % dim:
        raise ContractError("projection dimension must divide the encoded dimension")
    extra = int(math.log2(x.dim // dim))
    return BlockEncoding(x.target[:dim, :dim], x.alpha, x.ancillas + extra, x.err, x.cost)


def amplify(x: BlockEncoding, gamma: float, delta: float, eps: float,
            charge_gamma: float | None = None) -> BlockEncoding:
    """Boost the block by gamma via singular value amplification.

    Valid only while every boosted singular value stays at or below 1 - delta.
    Repetitions are charged as ceil((g/delta) ln(g/eps)) with g = ``charge_gamma``
    when given (a structural factor that does not depend on roundoff), else gamma.
    """
    if not gamma > 1:
        raise ContractError("gamma must exceed 1")
    if not 0 < delta <= 0.5 or not 0 < eps < 0.5:
        raise ContractError("delta must be in (0, 1/2] and eps in (0, 1/2)")
    norm = spectral_norm(x.target)
    if norm * gamma / x.alpha > 1.0 - delta + 1e-12:
        raise HeadroomError(
            f"amplification headroom violated: boosted norm {norm * gamma / x.alpha:.6g} > {1 - delta:.6g}; "
            "the norm at most 1/2 assumption or the time step is too large")
    reps = costmodel.amp_repetitions(charge_gamma if charge_gamma is not None else gamma, delta, eps)
    ancillas = x.ancillas + 1
    return BlockEncoding(
        x.target,
        x.alpha / gamma,
        ancillas,
        x.err + eps * (norm + x.err),
        x.cost.repeated(reps).plus_depth(reps).touching(ancillas),
    )


def materialize(x: BlockEncoding) -> np.ndarray:
    """The unitary dilation whose top-left block is target/alpha."""
    return unitary_dilation(x.block, tol=BLOCK_TOL)
