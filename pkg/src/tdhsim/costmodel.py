"""Cost conventions: every complexity formula instantiated with constant 1.

Two layers live here.

* Charging rules used by the block-encoding algebra while it runs
  (``unitary_log_queries``, ``amp_repetitions`` and the fixed depth charges). The
  exact predictors in the propagator modules replay these same rules, so a
  measured :class:`~tdhsim.blockenc.CostRecord` can be compared for equality.
* Asymptotic shape evaluators (``encode_h_depth``, ``rk_recursion``,
  ``rk_asymptotic_depth``, ``taylor_per_step``, ``taylor_asymptotic_depth``) that evaluate the
  asymptotic big-O expressions with every hidden constant set to one and every
  fractional count rounded up. They are monotone nonincreasing in ``eps`` and
  nondecreasing in every other argument.

Fixed depth charges (in abstract depth units):

==========================  =======================================
operation                   depth units added
==========================  =======================================
encode_from_unitary         ceil(log2(1/eps))  (same as queries)
encode_diagonal             n (number of amplitude qubits), min 1
coefficient transform       ceil(log2(1/eps))
tensor                      1 (swap network)
linear_combine of m inputs  m
multiply                    0
scale_down                  1
amplify                     cost * r + r, r = amp_repetitions
==========================  =======================================
"""

from __future__ import annotations

import math

TENSOR_DEPTH = 1
SCALE_DEPTH = 1
MULTIPLY_DEPTH = 0


def ceil_count(x: float) -> int:
    # guards against ceil(10.000000000000002) == 11 from roundoff
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


def unitary_log_queries(eps: float) -> int:
    """Controlled-exp(-iH_i) uses for a (2/pi, 2, eps) encoding of H_i."""
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    return ceil_count(math.log2(1.0 / eps))


def amp_repetitions(gamma: float, delta: float, eps: float) -> int:
    """Uses of the input encoding when amplifying singular values by gamma."""
    if gamma <= 1 or not 0 < delta < 1 or not 0 < eps < 1:
        raise ValueError("need gamma > 1 and delta, eps in (0, 1)")
    return ceil_count((gamma / delta) * math.log(gamma / eps))


def combine_ancillas(m: int) -> int:
    return ceil_count(math.log2(m)) if m > 1 else 0


def diagonal_depth(n: int) -> int:
    return max(1, n)


def t_max(d_max: float, h_max: float, eps: float) -> float:
    """Per-term simulation cost d_max * ||H||_max + log(1/eps)."""
    return d_max * h_max + math.log(1.0 / eps)


def encode_h_depth(m: int, tmax: float, eps: float) -> int:
    """Depth of one block encoding of H(t): m^2 * T_max * log(1/eps)."""
    return ceil_count(m * m * tmax * math.log(1.0 / eps))


def rk_recursion(s: int, m: int, tmax: float, eps: float, n_steps: int) -> list[int]:
    """T_n = (m^2 T_max log(1/eps) + s T_{n-1} + s^2) s with T_0 = 0.

    Returns [T_0, ..., T_N].
    """
    h = m * m * tmax * math.log(1.0 / eps)
    out = [0]
    for _ in range(n_steps):
        out.append(ceil_count((h + s * out[-1] + s * s) * s))
    return out


def rk_asymptotic_depth(p: int, m: int, d_max: float, h_max: float, eps: float, t: float = 1.0) -> float:
    """(m^2 (d_max ||H||_max + log 1/eps) log(1/eps) p + p^3) p^(t / eps^(1/p)).

    Returns inf once the value leaves the float range; see ``rk_asymptotic_log_depth``.
    """
    log_depth = rk_asymptotic_log_depth(p, m, d_max, h_max, eps, t)
    return math.exp(log_depth) if log_depth < 709.0 else math.inf


def rk_asymptotic_log_depth(p: int, m: int, d_max: float, h_max: float, eps: float, t: float = 1.0) -> float:
    """Natural log of ``rk_asymptotic_depth``, finite for every valid input."""
    log_inv = math.log(1.0 / eps)
    base = m * m * (d_max * h_max + log_inv) * log_inv * p + p**3
    return math.log(base) + (t / eps ** (1.0 / p)) * math.log(p)


def taylor_per_step(M: float, p: int, m: int, d_max: float, h_max: float, eps: float) -> float:
    """M p^3 m^2 (d_max ||H||_max + log 1/eps)."""
    return M * p**3 * m * m * (d_max * h_max + math.log(1.0 / eps))


def taylor_asymptotic_depth(M: float, p: int, m: int, d_max: float, h_max: float, eps: float, t: float = 1.0) -> float:
    """M p^3 d_max m^2 (d_max ||H||_max + log 1/eps) (t / eps^(1/p)) log(1/eps)."""
    log_inv = math.log(1.0 / eps)
    return (
        M * p**3 * d_max * m * m * (d_max * h_max + log_inv) * (t / eps ** (1.0 / p)) * log_inv
    )


def constants_table() -> list[tuple[str, str]]:
    """Rows for the rendered constants table in the README."""
    return [
        ("unitary-log encoding of H_i", "queries = depth = ceil(log2(1/eps))"),
        ("amplification by gamma", "r = ceil((gamma/delta) ln(gamma/eps)), delta = 1/2"),
        ("linear combination of m", "depth + m, ancillas + ceil(log2 m)"),
        ("tensor product", "depth + 1"),
        ("scale down", "depth + 1, ancillas + 1"),
        ("diagonal encoding", "depth + max(1, n), ancillas n + 3"),
        ("coefficient transform", "depth + ceil(log2(1/eps))"),
        ("T_max", "d_max ||H||_max + ln(1/eps)"),
    ]
