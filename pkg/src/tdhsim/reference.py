"""Dense time-ordered propagator, error metric and convergence fitting.

The oracle is the midpoint exponential product
U_K = exp(-i H(t_K) d) ... exp(-i H(t_1) d) with d = (t1 - t0)/K and t_k the
substep midpoints. It is second order and symmetric, so its error expands in
even powers of d and the Richardson combination R_K = (4 U_K - U_{K/2}) / 3 is
fourth order. K is doubled from 256 until successive R_K differ by less than
``tol``. Testing the raw U_K instead stalls near 1e-11: past K ~ 2^17 the
accumulated roundoff of the exponentials exceeds the shrinking differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ContractError, OracleError
from .hamiltonian import TimeDependentHamiltonian
from .numerics import batched_hermitian_exp, spectral_norm

K_START = 256
K_MAX = 2**22
DEFAULT_TOL = 1e-12
CHUNK = 2**15
UNITARITY_TOL = 1e-10


def _ordered_product(mats: np.ndarray) -> np.ndarray:
    """mats[-1] @ ... @ mats[0] by pairwise tree reduction."""
    while len(mats) > 1:
        if len(mats) % 2:
            mats = np.concatenate([mats, np.eye(mats.shape[-1], dtype=complex)[None]])
        mats = mats[1::2] @ mats[0::2]
    return mats[0]


def midpoint_product(H: TimeDependentHamiltonian, t0: float, t1: float, k: int) -> np.ndarray:
    """Plain midpoint exponential product with ``k`` uniform substeps."""
    d = (t1 - t0) / k
    u = np.eye(H.dim, dtype=complex)
    for start in range(0, k, CHUNK):
        idx = np.arange(start, min(k, start + CHUNK))
        mids = t0 + (idx + 0.5) * d
        u = _ordered_product(batched_hermitian_exp(H.evaluate_many(mids), d)) @ u
    return u


def _converge(H, t0, t1, tol):
    if t1 == t0:
        return np.eye(H.dim, dtype=complex), 0
    k = K_START
    prev = midpoint_product(H, t0, t1, k)
    extrapolated = None
    while True:
        k *= 2
        if k > K_MAX:
            raise OracleError(f"midpoint products did not settle to {tol:g} by K = {K_MAX}")
        cur = midpoint_product(H, t0, t1, k)
        nxt = (4.0 * cur - prev) / 3.0
        if extrapolated is not None and spectral_norm(nxt - extrapolated) < tol:
            return nxt, k
        prev, extrapolated = cur, nxt


def exact_propagator(H: TimeDependentHamiltonian, t_final: float, tol: float = DEFAULT_TOL,
                     t_start: float = 0.0) -> np.ndarray:
    """Time-ordered propagator from ``t_start`` to ``t_final`` (cached per Hamiltonian)."""
    if not 0.0 <= t_start <= t_final <= 1.0:
        raise ContractError("need 0 <= t_start <= t_final <= 1")
    if tol <= 0:
        raise ContractError("tol must be positive")
    key = ("exact", float(t_start), float(t_final), float(tol))
    u = H._memo(key, lambda: _converge(H, t_start, t_final, tol)[0])
    return u.copy()


def doubling_history(H: TimeDependentHamiltonian, t_final: float, doublings: int) -> list[float]:
    """||U_{2K} - U_K|| for K = 256, 512, ...; ratios near 4 confirm the second-order rule."""
    k = K_START
    prev = midpoint_product(H, 0.0, t_final, k)
    out = []
    for _ in range(doublings):
        k *= 2
        cur = midpoint_product(H, 0.0, t_final, k)
        out.append(spectral_norm(cur - prev))
        prev = cur
    return out


def global_error(u_approx, u_ref) -> float:
    u_approx, u_ref = np.asarray(u_approx), np.asarray(u_ref)
    if u_approx.shape != u_ref.shape:
        raise ContractError("dimension mismatch")
    return spectral_norm(u_approx - u_ref)


_STENCILS = {
    1: ((-1, -0.5), (1, 0.5)),
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    3: ((-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)),
}


def finite_diff_derivative(H: TimeDependentHamiltonian, t: float, j: int, h: float,
                           tol: float = DEFAULT_TOL) -> np.ndarray:
    """j-th central difference of s -> U_ref(s) at t (second order in h)."""
    if j not in _STENCILS:
        raise ContractError("finite differences are provided for j = 1, 2, 3")
    if h <= 0:
        raise ContractError("h must be positive")
    reach = max(abs(o) for o, _ in _STENCILS[j]) * h
    if t - reach < -1e-15 or t + reach > 1.0 + 1e-15:
        raise ContractError(f"stencil [{t - reach:g}, {t + reach:g}] leaves [0, 1]")
    out = np.zeros((H.dim, H.dim), dtype=complex)
    for offset, w in _STENCILS[j]:
        s = min(1.0, max(0.0, t + offset * h))
        out += w * exact_propagator(H, s, tol)
    return out / h**j


@dataclass(frozen=True)
class ConvergenceReport:
    points: tuple[tuple[float, float], ...]
    fitted_order: float
    fit_residual: float
    excluded: tuple[tuple[float, float], ...] = field(default=())

    @property
    def warning(self) -> bool:
        return bool(self.excluded)


def fit_convergence_order(points: Sequence[tuple[float, float]]) -> ConvergenceReport:
    """Least-squares slope of log(error) against log(dt).

    Points with nonpositive error are dropped and listed in ``excluded``.
    """
    pts = sorted(((float(d), float(e)) for d, e in points), key=lambda p: -p[0])
    used = tuple(p for p in pts if p[1] > 0 and math.isfinite(p[1]))
    excluded = tuple(p for p in pts if p not in used)
    if len(used) < 3:
        raise ContractError("need at least three points with positive error")
    if len({d for d, _ in used}) != len(used) or any(d <= 0 for d, _ in used):
        raise ContractError("step sizes must be positive and distinct")
    x = np.log([d for d, _ in used])
    y = np.log([e for _, e in used])
    a = np.stack([x, np.ones_like(x)], axis=1)
    coef = np.linalg.lstsq(a, y, rcond=None)[0]
    resid = y - a @ coef
    slope = coef[0]
    return ConvergenceReport(used, float(slope), float(np.sqrt(np.mean(resid**2))), excluded)


def check_unitary(u: np.ndarray, tol: float = UNITARITY_TOL) -> float:
    dev = spectral_norm(u.conj().T @ u - np.eye(u.shape[0]))
    if dev > tol:
        raise OracleError(f"reference propagator is not unitary (deviation {dev:.3g})")
    return dev
