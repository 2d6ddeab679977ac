"""Explicit Runge-Kutta propagation of U(t) built from block encodings.

Each step encodes the stages k_j/j, combines them into
(1/2s)(U + dt sum_j b_j k_j) and amplifies the result back to a subnormalization
of twice its spectral norm (the factor-1/2 convention, which keeps amplified
singular values at most 1/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import blockenc as be
from . import costmodel
from .errors import ContractError, HeadroomError
from .hamiltonian import DELTA, TimeDependentHamiltonian, block_encode_H, inner_precision

HEADROOM = 1e-6
# subnormalization of every propagated U after the first step, relative to ||U||
POST_STEP_FACTOR = 2.0 * (1.0 + HEADROOM)
NOMINAL_POST_ALPHA = 2.0
DEFAULT_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class ButcherTableau:
    name: str
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        c = np.asarray(self.c, dtype=float)
        s = b.size
        if s < 1 or a.shape != (s, s) or c.shape != (s,):
            raise ContractError("tableau arrays must have shapes (s, s), (s,), (s,)")
        if np.any(np.triu(a) != 0):
            raise ContractError("explicit tableau needs a strictly lower-triangular a")
        if abs(b.sum() - 1.0) > 1e-12:
            raise ContractError("tableau weights b must sum to 1")
        if np.max(np.abs(a.sum(axis=1) - c)) > 1e-12:
            raise ContractError("tableau nodes must satisfy c_j = sum_m a_jm")
        if not 1 <= self.order <= 4:
            raise ContractError("declared order must be between 1 and 4")
        failed = _failed_order_conditions(a, b, c, self.order)
        if failed:
            raise ContractError(f"tableau {self.name!r} fails order conditions: {', '.join(failed)}")
        for arr in (a, b, c):
            arr.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def stages(self) -> int:
        return self.b.size

    def to_json(self) -> dict:
        return {"name": self.name, "a": self.a.tolist(), "b": self.b.tolist(),
                "c": self.c.tolist(), "order": self.order}


def _failed_order_conditions(a, b, c, order) -> list[str]:
    ac = a @ c
    conditions = [
        (1, "sum b = 1", b.sum(), 1.0),
        (2, "b.c = 1/2", b @ c, 1 / 2),
        (3, "b.c^2 = 1/3", b @ c**2, 1 / 3),
        (3, "b.Ac = 1/6", b @ ac, 1 / 6),
        (4, "b.c^3 = 1/4", b @ c**3, 1 / 4),
        (4, "b.(c*Ac) = 1/8", b @ (c * ac), 1 / 8),
        (4, "b.Ac^2 = 1/12", b @ (a @ c**2), 1 / 12),
        (4, "b.AAc = 1/24", b @ (a @ ac), 1 / 24),
    ]
    return [name for p, name, got, want in conditions if p <= order and abs(got - want) > 1e-12]


EULER = ButcherTableau("euler", [[0.0]], [1.0], [0.0], 1)
MIDPOINT = ButcherTableau("midpoint", [[0.0, 0.0], [0.5, 0.0]], [0.0, 1.0], [0.0, 0.5], 2)
RK4 = ButcherTableau(
    "rk4",
    [[0, 0, 0, 0], [0.5, 0, 0, 0], [0, 0.5, 0, 0], [0, 0, 1, 0]],
    [1 / 6, 1 / 3, 1 / 3, 1 / 6],
    [0, 0.5, 0.5, 1],
    4,
)
TABLEAUX = {t.name: t for t in (EULER, MIDPOINT, RK4)}


def tableau_from(spec) -> ButcherTableau:
    """A named preset or a mapping with a, b, c and order."""
    if isinstance(spec, ButcherTableau):
        return spec
    if isinstance(spec, str):
        try:
            return TABLEAUX[spec.lower()]
        except KeyError:
            raise ContractError(f"unknown tableau {spec!r}; presets: {sorted(TABLEAUX)}") from None
    return ButcherTableau(spec.get("name", "custom"), spec["a"], spec["b"], spec["c"], int(spec["order"]))


@dataclass(frozen=True)
class PropagatorState:
    encoding: be.BlockEncoding
    step_index: int
    dt: float
    t_now: float
    cumulative_cost: be.CostRecord = field(default_factory=be.CostRecord)

    def __post_init__(self):
        if abs(self.t_now - self.step_index * self.dt) > 1e-12:
            raise ContractError("t_now must equal step_index * dt")

    @property
    def nominal_alpha(self) -> float:
        """Alpha the state would carry if every propagated U were exactly unitary."""
        return 1.0 if self.step_index == 0 else NOMINAL_POST_ALPHA


def init_state(dt: float, dim: int = 4) -> PropagatorState:
    if not 0 < dt <= 1:
        raise ContractError("dt must lie in (0, 1]")
    enc = be.identity(dim)
    return PropagatorState(enc, 0, dt, 0.0, enc.cost)


def advance(state: PropagatorState, enc: be.BlockEncoding) -> PropagatorState:
    n = state.step_index + 1
    return PropagatorState(enc, n, state.dt, n * state.dt, enc.cost)


def renormalize(x: be.BlockEncoding, charge_gamma: float, eps: float) -> be.BlockEncoding:
    """Bring alpha to POST_STEP_FACTOR * ||target||.

    Amplifies when the structural factor ``charge_gamma`` exceeds one (charging
    repetitions for it), otherwise scales down.
    """
    norm = float(np.linalg.norm(x.target, 2))
    if norm == 0.0:
        raise HeadroomError("step operator vanished; cannot renormalize")
    alpha = POST_STEP_FACTOR * norm
    gamma = x.alpha / alpha
    if charge_gamma > be.SCALE_MIN:
        if not gamma > 1.0:
            raise HeadroomError(f"step operator norm {norm:.6g} leaves no room to amplify; reduce dt")
        y = be.amplify(x, gamma, DELTA, eps, charge_gamma=charge_gamma)
    else:
        if not 1.0 / gamma > be.SCALE_MIN:
            raise HeadroomError(f"step operator norm {norm:.6g} does not fit the scale-down branch")
        y = be.scale_down(x, 1.0 / gamma)
    return be.relabel(y, alpha)


def rk_stages(state: PropagatorState, tableau: ButcherTableau, H: TimeDependentHamiltonian,
              eps: float = DEFAULT_EPS) -> list[be.BlockEncoding]:
    """Encodings e_j with target k_j and alpha j * alpha_U."""
    u = state.encoding
    dt, tn = state.dt, state.t_now
    stages: list[be.BlockEncoding] = []
    for j in range(1, tableau.stages + 1):
        h = block_encode_H(H, tn + tableau.c[j - 1] * dt, eps)
        if j == 1:
            inner = u
        else:
            parts = [u]
            for mi, e_m in enumerate(stages, start=1):
                shrunk = be.scaled(e_m, dt * tableau.a[j - 1, mi - 1] * mi)
                parts.append(be.relabel(shrunk, u.alpha))
            inner = be.linear_combine(parts, [1.0] * j)
        stages.append(be.phase(be.multiply(h, inner), -1j))
    return stages


def rk_step(state: PropagatorState, tableau: ButcherTableau, H: TimeDependentHamiltonian,
            eps: float = DEFAULT_EPS) -> PropagatorState:
    u = state.encoding
    s = tableau.stages
    stages = rk_stages(state, tableau, H, eps)
    weighted = [be.relabel(be.scaled(e_j, state.dt * j * tableau.b[j - 1]), u.alpha)
                for j, e_j in enumerate(stages, start=1)]
    increment = be.linear_combine(weighted, [1.0] * s)
    top = be.linear_combine([u, increment], [1.0, 1.0])
    charge_gamma = s * state.nominal_alpha
    return advance(state, renormalize(top, charge_gamma, eps))


def propagate(H: TimeDependentHamiltonian, tableau, n_steps: int, t_final: float = 1.0,
              eps: float = DEFAULT_EPS) -> tuple[list[PropagatorState], be.CostRecord]:
    tableau = tableau_from(tableau)
    if n_steps < 1:
        raise ContractError("need at least one step")
    state = init_state(t_final / n_steps, H.dim)
    states = [state]
    for _ in range(n_steps):
        state = rk_step(state, tableau, H, eps)
        states.append(state)
    return states, state.cumulative_cost


def steps_for_accuracy(t: float, eps: float, p: int) -> int:
    """N = ceil(t / eps^(1/p))."""
    if not 0 < eps < 1 or not 0 < t <= 1 or p < 1:
        raise ContractError("need 0 < eps < 1, 0 < t <= 1, p >= 1")
    return max(1, costmodel.ceil_count(t / eps ** (1.0 / p)))


# exact cost replay ---------------------------------------------------------------


@dataclass(frozen=True)
class _Tally:
    depth: int = 0
    queries: int = 0  # per Hamiltonian term; every term is queried equally
    ancillas: int = 0


def _combine(parts: Sequence[_Tally]) -> _Tally:
    m = len(parts)
    return _Tally(sum(p.depth for p in parts) + m, sum(p.queries for p in parts),
                  max(p.ancillas for p in parts) + costmodel.combine_ancillas(m))


def _product(x: _Tally, y: _Tally) -> _Tally:
    return _Tally(x.depth + y.depth + costmodel.MULTIPLY_DEPTH, x.queries + y.queries, x.ancillas + y.ancillas)


def _scaled(x: _Tally) -> _Tally:
    return _Tally(x.depth + costmodel.SCALE_DEPTH, x.queries, x.ancillas + 1)


def _amplified(x: _Tally, gamma: float, eps: float) -> _Tally:
    r = costmodel.amp_repetitions(gamma, DELTA, eps)
    return _Tally(r * x.depth + r, r * x.queries, x.ancillas + 1)


def _renormalized(x: _Tally, charge_gamma: float, eps: float) -> _Tally:
    return _amplified(x, charge_gamma, eps) if charge_gamma > be.SCALE_MIN else _scaled(x)


def projected_h_tally(m: int, eps: float) -> _Tally:
    """Cost of the projected two-block combination, before any amplification."""
    eta = inner_precision(m, eps)
    q = costmodel.unitary_log_queries(eta)
    term = _Tally(q + costmodel.SCALE_DEPTH, q, 2 + 1)
    diag = _Tally(costmodel.diagonal_depth(1) + q, 0, 1 + 3)
    part = _Tally(term.depth + diag.depth + costmodel.TENSOR_DEPTH, q, term.ancillas + diag.ancillas)
    # each part queries only its own term; per-term count stays q
    combined = _Tally(m * part.depth + m, q, part.ancillas + costmodel.combine_ancillas(m))
    return _Tally(combined.depth, combined.queries, combined.ancillas + 1)


def h_encoding_tally(m: int, eps: float) -> _Tally:
    """Cost of one alpha-1 encoding of H(t), replayed from the charging rules."""
    projected = projected_h_tally(m, eps)
    if m == 1:
        return projected
    return _amplified(projected, float(m), inner_precision(m, eps))


def _tally_record(x: _Tally, m: int) -> be.CostRecord:
    return be.CostRecord({i: x.queries for i in range(m)}, x.depth, x.ancillas)


def predicted_cost(tableau, m: int, n_steps: int, eps: float = DEFAULT_EPS) -> be.CostRecord:
    """Exact CostRecord of ``propagate`` under the fixed charging rules, without any matrices."""
    tableau = tableau_from(tableau)
    return _tally_record(rk_cost_trace(tableau, m, n_steps, eps)[-1], m)


def rk_cost_trace(tableau, m: int, n_steps: int, eps: float = DEFAULT_EPS) -> list[_Tally]:
    """Cost tallies of U(0), U(dt), ..., U(N dt)."""
    tableau = tableau_from(tableau)
    s = tableau.stages
    h = h_encoding_tally(m, eps)
    u = _Tally()
    trace = [u]
    for n in range(n_steps):
        stages: list[_Tally] = []
        for j in range(1, s + 1):
            inner = u if j == 1 else _combine([u] + [_scaled(e) for e in stages])
            stages.append(_product(h, inner))
        increment = _combine([_scaled(e) for e in stages])
        top = _combine([u, increment])
        nominal = 1.0 if n == 0 else NOMINAL_POST_ALPHA
        u = _renormalized(top, s * nominal, eps)
        trace.append(u)
    return trace
