import math

import numpy as np
import pytest

from tdhsim import hamiltonian as hm
from tdhsim import numerics as nu
from tdhsim import reference as rf
from tdhsim import rk
from tdhsim.errors import ContractError, OracleError


def test_zero_hamiltonian_gives_identity():
    H = hm.TimeDependentHamiltonian.from_terms([("0", [("X", 0.3)])])
    assert np.allclose(rf.exact_propagator(H, 1.0), np.eye(2), atol=1e-15)
    for j in (1, 2, 3):
        assert np.allclose(rf.finite_diff_derivative(H, 0.5, j, 0.01), 0, atol=1e-9)


def test_constant_closed_form():
    H = hm.TimeDependentHamiltonian.from_terms([("1", [("Z", 0.4)])])
    want = nu.hermitian_exp(0.4 * hm.pauli_matrix("Z"), 1.0)
    assert rf.global_error(rf.exact_propagator(H, 1.0), want) < 1e-12


def test_unitary_and_composition(bench):
    u1 = rf.exact_propagator(bench, 0.5)
    u12 = rf.exact_propagator(bench, 1.0, t_start=0.5)
    u = rf.exact_propagator(bench, 1.0)
    rf.check_unitary(u)
    assert rf.global_error(u12 @ u1, u) < 2 * rf.DEFAULT_TOL


def test_doubling_differences_decay_by_four(bench):
    diffs = rf.doubling_history(bench, 1.0, 4)
    ratios = [a / b for a, b in zip(diffs, diffs[1:])]
    assert all(3.8 < r < 4.2 for r in ratios)


def test_oracle_failure(bench, monkeypatch):
    monkeypatch.setattr(rf, "K_MAX", 512)
    with pytest.raises(OracleError):
        rf._converge(bench, 0.0, 1.0, 1e-15)


def test_global_error_phase():
    u = nu.hermitian_exp(0.3 * hm.pauli_matrix("X"), 1.0)
    theta = 0.7
    assert rf.global_error(u, u * np.exp(1j * theta)) == pytest.approx(2 * abs(math.sin(theta / 2)))
    assert rf.global_error(u, u) == 0.0
    with pytest.raises(ContractError):
        rf.global_error(np.eye(2), np.eye(4))


def test_euler_error_halves(bench):
    u = rf.exact_propagator(bench, 1.0)
    e8 = rf.global_error(rk.propagate(bench, rk.EULER, 8)[0][-1].encoding.target, u)
    e16 = rf.global_error(rk.propagate(bench, rk.EULER, 16)[0][-1].encoding.target, u)
    assert 1.8 < e8 / e16 < 2.2


def test_first_difference_example(bench):
    u = rf.exact_propagator(bench, 0.5)
    fd = rf.finite_diff_derivative(bench, 0.5, 1, 1e-3)
    assert nu.spectral_norm(fd - (-1j * bench.evaluate(0.5)) @ u) < 1e-5


def test_stencil_range(bench):
    with pytest.raises(ContractError):
        rf.finite_diff_derivative(bench, 0.01, 3, 0.01)
    with pytest.raises(ContractError):
        rf.finite_diff_derivative(bench, 0.5, 4, 0.01)


def test_fit_synthetic():
    dts = [1 / 8, 1 / 16, 1 / 32, 1 / 64]
    r = rf.fit_convergence_order([(d, d**2) for d in dts])
    assert r.fitted_order == pytest.approx(2.0, abs=1e-9)
    assert r.fit_residual < 1e-12
    assert [p[0] for p in r.points] == sorted(dts, reverse=True)
    assert rf.fit_convergence_order([(d, 3 * d) for d in dts]).fitted_order == pytest.approx(1.0)


def test_fit_excludes_nonpositive():
    pts = [(0.5, 0.25), (0.25, 0.0625), (0.125, 0.0), (0.1, 0.01)]
    r = rf.fit_convergence_order(pts)
    assert r.warning and r.excluded == ((0.125, 0.0),)
    with pytest.raises(ContractError):
        rf.fit_convergence_order(pts[:3])
