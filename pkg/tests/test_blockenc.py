import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compositions import random_composition
from tdhsim import blockenc as be
from tdhsim import costmodel as cm
from tdhsim import numerics as nu
from tdhsim.errors import ContractError, HeadroomError, NormAssumptionError, SubnormalizationError
from tdhsim.hamiltonian import pauli_matrix
from tdhsim.selftest import random_encoding, random_hermitian


def enc(m, alpha=1.0, **kw):
    return be.BlockEncoding(np.asarray(m, dtype=complex), alpha, **kw)


def test_from_unitary_recovers_h():
    h = 0.3 * pauli_matrix("X") + 0.1 * pauli_matrix("Z")
    x = be.encode_from_unitary(nu.hermitian_exp(h, 1.0), 1e-3)
    assert np.allclose(x.target, h, atol=1e-12)
    assert x.alpha == pytest.approx(2 / math.pi)
    assert x.ancillas == 2 and x.err == 1e-3
    assert x.cost.queries == {0: 10} and x.cost.depth_units == 10


def test_from_unitary_norm_assumption():
    with pytest.raises(NormAssumptionError, match="norm at most 1/2"):
        be.encode_from_unitary(nu.hermitian_exp(0.8 * pauli_matrix("X"), 1.0), 1e-3)


def test_diagonal_requires_normalized_power_of_two():
    with pytest.raises(ContractError):
        be.encode_diagonal([0.6, 0.6])
    with pytest.raises(ContractError):
        be.encode_diagonal([1.0, 0.0, 0.0])
    x = be.encode_diagonal([0.5, 0.5, 0.5, 0.5])
    assert x.ancillas == 5 and x.cost.depth_units == 2


def test_tensor_example():
    z = be.tensor(enc(0.4 * pauli_matrix("X")), enc(0.4 * pauli_matrix("Z")))
    assert np.allclose(z.target, 0.16 * pauli_matrix("XZ"))
    assert z.alpha == 1.0 and z.cost.depth_units == cm.TENSOR_DEPTH


def test_combine_alpha_and_ancillas(rng):
    xs = [random_encoding(rng, 2, a) for a in (1.0, 3.0, 2.0)]
    z = be.linear_combine(xs, [1.0, -0.5, 0.25])
    assert z.alpha == pytest.approx(1.75 * 3.0)
    assert z.ancillas == 2
    assert z.cost.depth_units == 3


def test_combine_rejects_bad_inputs(rng):
    x = random_encoding(rng, 2)
    with pytest.raises(ContractError):
        be.linear_combine([], [])
    with pytest.raises(ContractError):
        be.linear_combine([x], [0.0])
    with pytest.raises(ContractError):
        be.linear_combine([x, random_encoding(rng, 4)], [1.0, 1.0])


def test_multiply_dimension_mismatch(rng):
    with pytest.raises(ContractError):
        be.multiply(random_encoding(rng, 2), random_encoding(rng, 4))


def test_scale_down_boundary(rng):
    x = random_encoding(rng, 2)
    with pytest.raises(ContractError):
        be.scale_down(x, 1.0 + 1e-9)
    assert be.scale_down(x, 1.0 + 2e-9).alpha == pytest.approx(1.0 + 2e-9)


def test_scaled_charges_gadget_even_at_zero(rng):
    x = random_encoding(rng, 2)
    z = be.scaled(x, 0.0)
    assert np.all(z.target == 0) and z.cost.depth_units == 1 and z.ancillas == x.ancillas + 1
    with pytest.raises(HeadroomError):
        be.scaled(x, -1.01)


def test_amplify_counts():
    x = enc(0.1 * np.eye(2), cost=be.CostRecord({0: 2}, 4, 1))
    z = be.amplify(x, 3.0, 0.5, 1e-4)
    r = cm.amp_repetitions(3.0, 0.5, 1e-4)
    assert z.cost.queries == {0: 2 * r}
    assert z.cost.depth_units == 4 * r + r
    assert z.ancillas == 1 and z.alpha == pytest.approx(1 / 3)


def test_amplify_structural_charge():
    x = enc(0.1 * np.eye(2))
    z = be.amplify(x, 3.0, 0.5, 1e-4, charge_gamma=4.0)
    assert z.cost.depth_units == cm.amp_repetitions(4.0, 0.5, 1e-4)


def test_amplify_headroom():
    with pytest.raises(HeadroomError):
        be.amplify(enc(0.3 * np.eye(2)), 2.0, 0.5, 1e-4)
    with pytest.raises(ContractError):
        be.amplify(enc(0.1 * np.eye(2)), 1.0, 0.5, 1e-4)


def test_subnormalization_checked():
    with pytest.raises(SubnormalizationError):
        enc(np.eye(2), 0.5)
    with pytest.raises(SubnormalizationError):
        enc(np.eye(2), 0.0)


def test_cost_high_water_tracks_ancillas(rng):
    z = be.multiply(random_encoding(rng, 2), be.scale_down(random_encoding(rng, 2), 2.0))
    assert z.cost.ancilla_high_water >= z.ancillas


def test_cost_record_addition():
    a = be.CostRecord({0: 1}, 2, 5)
    b = be.CostRecord({0: 3, 2: 1}, 4, 2)
    assert a + b == be.CostRecord({0: 4, 2: 1}, 6, 5)
    assert a.repeated(3) == be.CostRecord({0: 3}, 6, 5)
    assert (a + b).queries_total == 5


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_compositions_materialize(seed):
    node = random_composition(np.random.default_rng(seed))
    assert node.enc.alpha == pytest.approx(node.alpha, rel=1e-12)
    w = be.materialize(node.enc)
    d = node.enc.dim
    assert np.allclose(w.conj().T @ w, np.eye(2 * d), atol=1e-10)
    assert np.abs(w[:d, :d] - node.exact / node.alpha).max() <= 1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_err_bounds_injected_perturbations(seed):
    node = random_composition(np.random.default_rng(seed), perturb=1e-3)
    assert nu.spectral_norm(node.enc.target - node.exact) <= node.enc.err * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 0.49))
def test_unitary_log_encoding_materializes(seed, norm):
    h = random_hermitian(np.random.default_rng(seed), 2, norm)
    x = be.encode_from_unitary(nu.hermitian_exp(h, 1.0), 1e-6)
    assert np.allclose(be.materialize(x)[:2, :2], h * math.pi / 2, atol=1e-10)
