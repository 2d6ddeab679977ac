import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdhsim import numerics as nu
from tdhsim.errors import BranchAmbiguityError, ContractError
from tdhsim.hamiltonian import pauli_matrix
from tdhsim.selftest import random_hermitian, random_matrix


def test_spectral_norm_of_pauli_is_one():
    assert nu.spectral_norm(pauli_matrix("XZ")) == pytest.approx(1.0, abs=1e-15)


def test_spectral_norm_power_iteration(rng):
    a = random_matrix(rng, 4, 1.0) * 2.3
    v = np.ones(4, dtype=complex)
    for _ in range(1000):
        v = a.conj().T @ (a @ v)
        v /= np.linalg.norm(v)
    assert nu.spectral_norm(a) == pytest.approx(np.linalg.norm(a @ v), abs=1e-10)
    assert nu.spectral_norm(a) <= np.linalg.norm(a)


def test_batched_norm_matches(rng):
    stack = np.stack([random_matrix(rng, 4, s) for s in (0.1, 0.5, 2.0)])
    assert np.allclose(nu.batched_spectral_norm(stack), [0.1, 0.5, 2.0], atol=1e-14)


def test_as_matrix_rejects_bad_shapes():
    with pytest.raises(ContractError):
        nu.as_matrix(np.zeros((2, 3)))
    with pytest.raises(ContractError):
        nu.as_matrix(np.eye(3))


def test_hermitian_exp_series():
    h = 0.4 * pauli_matrix("X")
    series = sum(np.linalg.matrix_power(-1j * h, k) / math.factorial(k) for k in range(30))
    assert np.allclose(nu.hermitian_exp(h, 1.0), series, atol=1e-15)


def test_hermitian_exp_rejects_non_hermitian():
    with pytest.raises(ContractError):
        nu.hermitian_exp(np.array([[0, 1], [0, 0]]), 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 0.49))
def test_log_inverts_exp(seed, norm):
    h = random_hermitian(np.random.default_rng(seed), 4, norm)
    assert np.allclose(nu.unitary_log(nu.hermitian_exp(h, 1.0)), h, atol=1e-10)


def test_log_branch_cut():
    with pytest.raises(BranchAmbiguityError):
        nu.unitary_log(np.diag([1.0, -1.0]))


def test_log_requires_unitary():
    with pytest.raises(ContractError):
        nu.unitary_log(0.5 * np.eye(2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 1.0))
def test_dilation_properties(seed, norm):
    b = random_matrix(np.random.default_rng(seed), 2, max(norm, 1e-3))
    w = nu.unitary_dilation(b)
    assert np.allclose(w.conj().T @ w, np.eye(4), atol=1e-10)
    assert np.allclose(nu.top_left(w, 2), b, atol=1e-12)


def test_dilation_rejects_expansion():
    with pytest.raises(ContractError):
        nu.unitary_dilation(1.1 * np.eye(2))
