"""High-order forward-Euler (Taylor) propagation.

The j-th time derivative of U factors as f_j(H) U, where f_j is a
noncommutative polynomial in H and its time derivatives generated by

    f_1 = -i H,    f_{j+1} = d/dt f_j + f_j (-i H).

A step builds the encoding of (I + sum_j dt^j/j! f_j(H(t_n))) alone, amplifies it,
and only then multiplies by the encoding of U(t_n). Amplifying before the product
keeps the previous propagator out of the repetition count, so depth grows
linearly in the number of steps; the price is that the tracked alpha of U doubles
per step.

The commuting-case form of f_3 that merges H dH/dt and dH/dt H into a single
cross term is only valid when [H, dH/dt] = 0; here the general form is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import blockenc as be
from . import costmodel
from .errors import ContractError
from .hamiltonian import (GRID_SLACK, DerivativeBounds, TimeDependentHamiltonian, block_encode_H,
                          block_encode_H_derivative, derivative_alpha, inner_precision)
from .rk import (DEFAULT_EPS, NOMINAL_POST_ALPHA, PropagatorState, _amplified, _combine, _product,
                 _scaled, _Tally, _tally_record, advance, h_encoding_tally, init_state,
                 projected_h_tally, renormalize)

MAX_ORDER = 6


@dataclass(frozen=True)
class OperatorWord:
    """coefficient * H^(r_1) H^(r_2) ... H^(r_k), with H^(r) the r-th time derivative."""

    coefficient: complex
    symbols: tuple[int, ...]

    @property
    def weight(self) -> int:
        return sum(r + 1 for r in self.symbols)

    def __str__(self) -> str:
        body = " ".join("H" if r == 0 else f"H^({r})" for r in self.symbols) or "I"
        return f"({self.coefficient:g}) {body}"


@dataclass(frozen=True)
class DerivativePolynomial:
    order: int
    words: tuple[OperatorWord, ...]

    def __post_init__(self):
        seen = set()
        for w in self.words:
            if w.symbols in seen:
                raise ContractError(f"duplicate word {w.symbols}")
            seen.add(w.symbols)
            if w.weight != self.order:
                raise ContractError(f"word {w.symbols} has weight {w.weight}, expected {self.order}")

    def __len__(self) -> int:
        return len(self.words)

    def __str__(self) -> str:
        return " + ".join(str(w) for w in self.words)


def _canonical(order: int, table: dict[tuple[int, ...], complex]) -> DerivativePolynomial:
    words = [OperatorWord(c, s) for s, c in table.items() if c != 0]
    words.sort(key=lambda w: (len(w.symbols), w.symbols))
    return DerivativePolynomial(order, tuple(words))


_POLY_CACHE: dict[int, DerivativePolynomial] = {}


def derivative_polynomial(j: int) -> DerivativePolynomial:
    """f_j with d^j U/dt^j = f_j U."""
    if j < 1:
        raise ContractError("order must be >= 1")
    if j in _POLY_CACHE:
        return _POLY_CACHE[j]
    table: dict[tuple[int, ...], complex] = {(0,): -1j}
    for _ in range(j - 1):
        nxt: dict[tuple[int, ...], complex] = {}
        for sym, c in table.items():
            for pos in range(len(sym)):
                bumped = sym[:pos] + (sym[pos] + 1,) + sym[pos + 1:]
                nxt[bumped] = nxt.get(bumped, 0) + c
            grown = sym + (0,)
            nxt[grown] = nxt.get(grown, 0) + c * -1j
        table = nxt
    poly = _canonical(j, table)
    _POLY_CACHE[j] = poly
    return poly


def _factor(H: TimeDependentHamiltonian, t: float, r: int) -> np.ndarray:
    return H.evaluate(t) if r == 0 else H.derivative(t, r)


def evaluate_polynomial(f: DerivativePolynomial, H: TimeDependentHamiltonian, t: float) -> np.ndarray:
    factors: dict[int, np.ndarray] = {}
    out = np.zeros((H.dim, H.dim), dtype=complex)
    for w in f.words:
        prod = np.eye(H.dim, dtype=complex)
        for r in w.symbols:
            if r not in factors:
                factors[r] = _factor(H, t, r)
            prod = prod @ factors[r]
        out += w.coefficient * prod
    return out


def surviving_words(f: DerivativePolynomial, bounds: DerivativeBounds) -> list[OperatorWord]:
    """Words whose derivative factors all have nonzero bounds (the rest vanish identically)."""
    return [w for w in f.words if all(r == 0 or bounds[r] > 0.0 for r in w.symbols)]


class _FactorCache:
    def __init__(self, H, t, eps, bounds):
        self.H, self.t, self.eps, self.bounds = H, t, eps, bounds
        self.made: dict[int, be.BlockEncoding] = {}

    def __call__(self, r: int) -> be.BlockEncoding:
        if r not in self.made:
            if r == 0:
                enc = block_encode_H(self.H, self.t, self.eps)
            else:
                enc = block_encode_H_derivative(self.H, self.t, r, self.eps, self.bounds)
                ratio = self.bounds.overall / self.bounds[r]
                if ratio > be.SCALE_MIN:
                    enc = be.scale_down(enc, ratio)
            self.made[r] = enc
        return self.made[r]


def encode_polynomial(f: DerivativePolynomial, H: TimeDependentHamiltonian, t: float, eps: float,
                      bounds: DerivativeBounds, factors=None) -> be.BlockEncoding:
    """Encoding of f_j(H(t)) as a weighted combination of word products."""
    if bounds.order < max(max(w.symbols) for w in f.words):
        raise ContractError("bounds do not cover every derivative order in f")
    factors = factors or _FactorCache(H, t, eps, bounds)
    encs, weights = [], []
    for w in surviving_words(f, bounds):
        enc = factors(w.symbols[0])
        for r in w.symbols[1:]:
            enc = be.multiply(enc, factors(r))
        c = complex(w.coefficient)
        encs.append(be.phase(enc, c / abs(c)))
        weights.append(abs(c))
    return be.linear_combine(encs, weights)


def step_operator(state: PropagatorState, H: TimeDependentHamiltonian, p: int,
                  bounds: DerivativeBounds, eps: float = DEFAULT_EPS) -> be.BlockEncoding:
    """Encoding of I + sum_{j<=p} dt^j/j! f_j(H(t_n)) before amplification."""
    factors = _FactorCache(H, state.t_now, eps, bounds)
    parts = [be.identity(H.dim)]
    for j in range(1, p + 1):
        fj = encode_polynomial(derivative_polynomial(j), H, state.t_now, eps, bounds, factors)
        parts.append(be.scaled(fj, state.dt**j / math.factorial(j)))
    return be.linear_combine(parts, [1.0] * (p + 1))


def _check_order(p: int, bounds: DerivativeBounds):
    if not 1 <= p <= MAX_ORDER:
        raise ContractError(f"Taylor order must be in 1..{MAX_ORDER}")
    if bounds.order < p:
        raise ContractError("derivative bounds must cover orders 0..p")


def taylor_step(state: PropagatorState, H: TimeDependentHamiltonian, p: int,
                bounds: DerivativeBounds | None = None, eps: float = DEFAULT_EPS) -> PropagatorState:
    bounds = bounds or H.derivative_bounds(p)
    _check_order(p, bounds)
    comb = step_operator(state, H, p, bounds, eps)
    amplified = renormalize(comb, comb.alpha / NOMINAL_POST_ALPHA, eps)
    return advance(state, be.multiply(amplified, state.encoding))


def propagate(H: TimeDependentHamiltonian, p: int, n_steps: int, t_final: float = 1.0,
              eps: float = DEFAULT_EPS, bounds: DerivativeBounds | None = None
              ) -> tuple[list[PropagatorState], be.CostRecord]:
    if n_steps < 1:
        raise ContractError("need at least one step")
    bounds = bounds or H.derivative_bounds(p)
    state = init_state(t_final / n_steps, H.dim)
    states = [state]
    for _ in range(n_steps):
        state = taylor_step(state, H, p, bounds, eps)
        states.append(state)
    return states, state.cumulative_cost


# exact cost replay ---------------------------------------------------------------


def _derivative_tally(H: TimeDependentHamiltonian, r: int, eps: float, bounds: DerivativeBounds):
    """(tally, alpha) of the r-th derivative factor as used inside a word."""
    eta = inner_precision(H.m, eps)
    tally = projected_h_tally(H.m, eps)
    kappa = H.coefficient_bound(r) * (1.0 + GRID_SLACK)
    alpha = derivative_alpha(bounds[r])
    gamma = (H.m * 1.0 * kappa) / alpha
    if gamma > be.SCALE_MIN:
        tally = _amplified(tally, gamma, eta)
    elif 1.0 / gamma > be.SCALE_MIN:
        tally = _scaled(tally)
    ratio = bounds.overall / bounds[r]
    if ratio > be.SCALE_MIN:
        return _scaled(tally), alpha * ratio
    return tally, alpha


def taylor_step_tally(H: TimeDependentHamiltonian, p: int, eps: float, bounds: DerivativeBounds):
    """(tally, alpha) of the unamplified step operator, replayed symbolically."""
    factors: dict[int, tuple[_Tally, float]] = {0: (h_encoding_tally(H.m, eps), 1.0)}
    parts = [(_Tally(), 1.0)]
    for j in range(1, p + 1):
        words, weights = [], []
        for w in surviving_words(derivative_polynomial(j), bounds):
            for r in w.symbols:
                if r not in factors:
                    factors[r] = _derivative_tally(H, r, eps, bounds)
            tally, alpha = factors[w.symbols[0]]
            for r in w.symbols[1:]:
                tally = _product(tally, factors[r][0])
                alpha = alpha * factors[r][1]
            words.append((tally, alpha))
            weights.append(abs(complex(w.coefficient)))
        beta = sum(weights)
        f_alpha = beta * max(a for _, a in words)
        parts.append((_scaled(_combine([t for t, _ in words])), f_alpha))
    comb_alpha = float(p + 1) * max(a for _, a in parts)
    return _combine([t for t, _ in parts]), comb_alpha


def taylor_cost_trace(H: TimeDependentHamiltonian, p: int, n_steps: int, eps: float = DEFAULT_EPS,
                      bounds: DerivativeBounds | None = None) -> list[_Tally]:
    bounds = bounds or H.derivative_bounds(p)
    _check_order(p, bounds)
    step, alpha = taylor_step_tally(H, p, eps, bounds)
    gamma = alpha / NOMINAL_POST_ALPHA
    step = _amplified(step, gamma, eps) if gamma > be.SCALE_MIN else _scaled(step)
    u = _Tally()
    trace = [u]
    for _ in range(n_steps):
        u = _product(step, u)
        trace.append(u)
    return trace


def predicted_cost_taylor(H: TimeDependentHamiltonian, p: int, n_steps: int, eps: float = DEFAULT_EPS,
                          bounds: DerivativeBounds | None = None) -> be.CostRecord:
    """Exact CostRecord of ``propagate`` under the fixed charging rules (linear in N)."""
    return _tally_record(taylor_cost_trace(H, p, n_steps, eps, bounds)[-1], H.m)


def word_counts(p: int, bounds: DerivativeBounds | None = None, convention: str = "words") -> list[int]:
    """Number of terms per f_j, j = 1..p.

    ``"words"`` counts merged noncommutative words (dropping vanishing ones when
    bounds are given); ``"one_per_order"`` uses j terms for f_j.
    """
    if convention == "one_per_order":
        return list(range(1, p + 1))
    if convention != "words":
        raise ValueError("convention must be 'words' or 'one_per_order'")
    polys = [derivative_polynomial(j) for j in range(1, p + 1)]
    if bounds is None:
        return [len(f) for f in polys]
    return [len(surviving_words(f, bounds)) for f in polys]


def asymptotic_shape_taylor(p: int, m: int, n_steps: int, eps: float, M: float, d_max: float,
                       h_max: float = 0.5, convention: str = "words",
                       bounds: Sequence[float] | None = None) -> float:
    """Per-step depth sum_j w_j m^2 T_max log(1/eps), amplified by M(p+1), times N."""
    tmax = costmodel.t_max(d_max, h_max, eps)
    counts = word_counts(p, None, convention) if bounds is None else word_counts(p, DerivativeBounds(tuple(bounds)), convention)
    per_step = sum(counts) * costmodel.encode_h_depth(m, tmax, eps)
    return max(1.0, M) * (p + 1) * per_step * n_steps
