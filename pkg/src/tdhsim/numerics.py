"""Dense complex linear algebra kernel.

Everything works on plain ``numpy`` arrays of dtype ``complex128`` whose
dimension is a power of two. All routines use full decompositions; at the
sizes in scope (dim <= 1024) accuracy and determinism matter more than speed.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import BranchAmbiguityError, ContractError, NumericalError, SubnormalizationError

MAX_DIM = 2**10
HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
BRANCH_TOL = 1e-8


def as_matrix(a) -> np.ndarray:
    """Validate and coerce to a square complex matrix of power-of-two size."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {m.shape}")
    dim = m.shape[0]
    if dim < 1 or dim & (dim - 1) or dim > 2 * MAX_DIM:
        raise ContractError(f"dimension {dim} is not a power of two within range")
    if not np.all(np.isfinite(m)):
        raise ContractError("matrix has non-finite entries")
    return m


def spectral_norm(a) -> float:
    """Largest singular value, by full SVD."""
    m = np.asarray(a, dtype=complex)
    if m.size == 0:
        return 0.0
    try:
        s = np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    return float(s[0])


def batched_spectral_norm(stack: np.ndarray) -> np.ndarray:
    """Spectral norms of a stack of matrices shaped (k, d, d)."""
    try:
        return np.linalg.svd(stack, compute_uv=False)[..., 0]
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc


def is_hermitian(h, tol: float = HERMITIAN_TOL) -> bool:
    h = np.asarray(h, dtype=complex)
    return spectral_norm(h - h.conj().T) <= tol


def hermitian_exp(h, theta: float) -> np.ndarray:
    """exp(-i * theta * H) for Hermitian H, via eigendecomposition."""
    h = as_matrix(h)
    if not is_hermitian(h):
        raise ContractError("hermitian_exp requires a Hermitian matrix")
    h = 0.5 * (h + h.conj().T)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigh did not converge: {exc}") from exc
    return (v * np.exp(-1j * theta * w)) @ v.conj().T


def batched_hermitian_exp(stack: np.ndarray, theta: float) -> np.ndarray:
    """exp(-i * theta * H_k) for a stack of Hermitian matrices (k, d, d)."""
    stack = 0.5 * (stack + np.conj(np.swapaxes(stack, -1, -2)))
    try:
        w, v = np.linalg.eigh(stack)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigh did not converge: {exc}") from exc
    phases = np.exp(-1j * theta * w)
    return (v * phases[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def unitary_log(u) -> np.ndarray:
    """Hermitian H on the principal branch with exp(-iH) = U.

    Eigenphases must stay at least ``BRANCH_TOL`` away from +-pi.
    """
    u = as_matrix(u)
    dim = u.shape[0]
    if spectral_norm(u.conj().T @ u - np.eye(dim)) > UNITARY_TOL:
        raise ContractError("unitary_log requires a unitary matrix")
    # complex Schur form of a normal matrix is diagonal with unitary Z
    try:
        t, z = scipy.linalg.schur(u, output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"Schur decomposition failed: {exc}") from exc
    lam = np.diag(t)
    phase = np.angle(lam)  # in (-pi, pi]
    if np.any(np.pi - np.abs(phase) < BRANCH_TOL):
        raise BranchAmbiguityError("eigenphase within tolerance of the branch cut at pi")
    h = (z * (-phase)) @ z.conj().T
    return 0.5 * (h + h.conj().T)


def unitary_dilation(b, tol: float = 1e-9) -> np.ndarray:
    """Unitary [[B, sqrt(I-BB^+)], [sqrt(I-B^+B), -B^+]] with B in the top-left block.

    Built from the SVD B = U C V^+ as diag(U, V) [[C, S], [S, -C]] diag(V^+, U^+)
    with S = sqrt(1 - C^2), which stays unitary to roundoff even when singular
    values touch 1. Singular values above 1 by at most ``tol`` are clipped.
    """
    b = as_matrix(b)
    try:
        u, c, vh = np.linalg.svd(b)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    if c[0] > 1.0 + tol:
        raise SubnormalizationError(f"block norm {c[0]:.12g} exceeds 1 + {tol}")
    clipped = c[0] > 1.0
    c = np.minimum(c, 1.0)
    s = np.sqrt((1.0 - c) * (1.0 + c))
    v = vh.conj().T
    dim = b.shape[0]
    w = np.empty((2 * dim, 2 * dim), dtype=complex)
    w[:dim, :dim] = (u * c) @ vh if clipped else b
    w[:dim, dim:] = (u * s) @ u.conj().T
    w[dim:, :dim] = (v * s) @ vh
    w[dim:, dim:] = -w[:dim, :dim].conj().T
    return w


def top_left(w: np.ndarray, dim: int) -> np.ndarray:
    return w[:dim, :dim]
