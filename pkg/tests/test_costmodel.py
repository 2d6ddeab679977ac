import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tdhsim import costmodel as cm


def test_unitary_log_queries():
    assert cm.unitary_log_queries(1e-6) == 20
    assert cm.unitary_log_queries(0.5) == 1
    with pytest.raises(ValueError):
        cm.unitary_log_queries(1.0)


def test_amp_repetitions():
    assert cm.amp_repetitions(2.0, 0.5, 1e-6) == math.ceil(4 * math.log(2e6))
    with pytest.raises(ValueError):
        cm.amp_repetitions(1.0, 0.5, 1e-6)


def test_ceil_count_tolerates_roundoff():
    assert cm.ceil_count(1 / 1e-4 ** 0.25) == 10
    assert cm.ceil_count(10.2) == 11


eps_s = st.floats(1e-8, 0.4)


@given(eps_s, eps_s, st.integers(1, 6), st.integers(1, 8))
def test_rk_asymptotic_monotone(e1, e2, p, m):
    lo, hi = sorted((e1, e2))
    assert cm.rk_asymptotic_depth(p, m, 2, 0.5, lo) >= cm.rk_asymptotic_depth(p, m, 2, 0.5, hi)
    assert cm.rk_asymptotic_depth(p, m + 1, 2, 0.5, lo) >= cm.rk_asymptotic_depth(p, m, 2, 0.5, lo)
    assert cm.rk_asymptotic_log_depth(p, m, 2, 0.5, lo) >= cm.rk_asymptotic_log_depth(p, m, 2, 0.5, hi)


def test_rk_asymptotic_overflow_is_inf():
    assert cm.rk_asymptotic_depth(2, 1, 2, 0.5, 1e-8) == math.inf
    assert cm.rk_asymptotic_log_depth(2, 1, 2, 0.5, 1e-8) == pytest.approx(1e4 * math.log(2), rel=1e-2)
    assert cm.rk_asymptotic_depth(1, 1, 2, 0.5, 1e-8) < math.inf


@given(eps_s, eps_s, st.integers(1, 6), st.floats(0.01, 5))
def test_taylor_asymptotic_monotone(e1, e2, p, M):
    lo, hi = sorted((e1, e2))
    assert cm.taylor_asymptotic_depth(M, p, 2, 2, 0.5, lo) >= cm.taylor_asymptotic_depth(M, p, 2, 2, 0.5, hi)
    assert cm.taylor_asymptotic_depth(M * 2, p, 2, 2, 0.5, lo) >= cm.taylor_asymptotic_depth(M, p, 2, 2, 0.5, lo)
    assert cm.taylor_per_step(M, p + 1, 2, 2, 0.5, lo) >= cm.taylor_per_step(M, p, 2, 2, 0.5, lo)


@given(eps_s, st.integers(1, 5), st.integers(1, 6))
def test_amp_and_encode_monotone(eps, m, n):
    assert cm.amp_repetitions(m + 1.5, 0.5, eps) >= cm.amp_repetitions(m + 1.0, 0.5, eps)
    assert cm.encode_h_depth(m + 1, 3.0, eps) >= cm.encode_h_depth(m, 3.0, eps)
    rec = cm.rk_recursion(2, m, 3.0, eps, n)
    assert rec == sorted(rec)


def test_constants_table_rows():
    assert len(cm.constants_table()) >= 6
