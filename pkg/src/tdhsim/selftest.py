"""Invariant suite run by ``tdhsim selftest``.

Every check reaches library code through module attributes (``be.multiply``
rather than a bound import), so a patched function is what gets exercised.
"""

from __future__ import annotations

import math
import traceback
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import blockenc as be
from . import coeffexpr as ce
from . import costmodel as cm
from . import errors
from . import hamiltonian as hm
from . import numerics as nu
from . import reference as rf
from . import rk
from . import taylor as tl

SEED = 20240611

CHECKS: list[tuple[str, Callable[[np.random.Generator], None]]] = []


def check(name: str):
    def register(fn):
        CHECKS.append((name, fn))
        return fn
    return register


def _close(a, b, tol: float, what: str):
    d = float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) if np.size(a) else 0.0
    if not d <= tol:
        raise AssertionError(f"{what}: deviation {d:.3e} > {tol:.1e}")


def _require(cond: bool, what: str):
    if not cond:
        raise AssertionError(what)


def _raises(exc, fn, what: str):
    try:
        fn()
    except exc:
        return
    raise AssertionError(f"{what}: expected {exc.__name__}")


def random_matrix(rng: np.random.Generator, dim: int, norm: float = 0.9) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return a * (norm / nu.spectral_norm(a))


def random_hermitian(rng: np.random.Generator, dim: int, norm: float = 0.4) -> np.ndarray:
    a = random_matrix(rng, dim)
    h = a + a.conj().T
    return h * (norm / nu.spectral_norm(h))


def random_encoding(rng: np.random.Generator, dim: int = 2, alpha: float = 1.0) -> be.BlockEncoding:
    return be.BlockEncoding(random_matrix(rng, dim, 0.9 * alpha), alpha)


def _materializes(x: be.BlockEncoding, what: str):
    w = be.materialize(x)
    _close(w.conj().T @ w, np.eye(w.shape[0]), 1e-10, f"{what}: dilation unitary")
    _close(w[: x.dim, : x.dim], x.target / x.alpha, 1e-10, f"{what}: top-left block equals target/alpha")


# numerics -------------------------------------------------------------------------


@check("numerics: spectral norm agrees with power iteration")
def _(rng):
    a = random_matrix(rng, 4, 1.3)
    v = rng.normal(size=4) + 0j
    for _ in range(500):
        v = a.conj().T @ (a @ v)
        v /= np.linalg.norm(v)
    _close(nu.spectral_norm(a), np.linalg.norm(a @ v), 1e-10, "spectral norm")


@check("numerics: spectral norm below Frobenius norm")
def _(rng):
    a = random_matrix(rng, 5, 2.0)
    _require(nu.spectral_norm(a) <= np.linalg.norm(a) + 1e-12, "spectral <= Frobenius")


@check("numerics: hermitian_exp matches its power series")
def _(rng):
    h = 0.4 * hm.pauli_matrix("X")
    series = sum(np.linalg.matrix_power(-1j * h, k) / math.factorial(k) for k in range(30))
    _close(nu.hermitian_exp(h, 1.0), series, 1e-14, "exp(-0.4iX)")


@check("numerics: hermitian_exp is unitary")
def _(rng):
    u = nu.hermitian_exp(random_hermitian(rng, 4, 3.0), 1.7)
    _close(u.conj().T @ u, np.eye(4), 1e-12, "unitarity")


@check("numerics: batched exponential equals single exponentials")
def _(rng):
    stack = np.stack([random_hermitian(rng, 4) for _ in range(5)])
    batch = nu.batched_hermitian_exp(stack, 0.3)
    for k in range(5):
        _close(batch[k], nu.hermitian_exp(stack[k], 0.3), 1e-13, f"batch entry {k}")


@check("numerics: unitary_log inverts hermitian_exp")
def _(rng):
    h = random_hermitian(rng, 4, 0.5)
    _close(nu.unitary_log(nu.hermitian_exp(h, 1.0)), h, 1e-10, "log(exp(-iH))")


@check("numerics: unitary_log rejects the branch cut")
def _(rng):
    _raises(errors.BranchAmbiguityError, lambda: nu.unitary_log(-np.eye(2)), "eigenphase pi")


@check("numerics: dilation is unitary with the block on top")
def _(rng):
    b = random_matrix(rng, 4, 0.95)
    w = nu.unitary_dilation(b)
    _close(w.conj().T @ w, np.eye(8), 1e-10, "dilation unitary")
    _close(nu.top_left(w, 4), b, 1e-12, "top-left block")


# block encodings ----------------------------------------------------------------


@check("blockenc: unitary-log encoding has alpha 2/pi and recovers H")
def _(rng):
    h = random_hermitian(rng, 2, 0.45)
    x = be.encode_from_unitary(nu.hermitian_exp(h, 1.0), 1e-6)
    _close(x.alpha, 2 / math.pi, 1e-15, "alpha")
    _close(x.target, h, 1e-10, "target")
    _require(x.cost.queries == {0: 20}, "ceil(log2 1e6) = 20 queries")
    _materializes(x, "unitary-log encoding")


@check("blockenc: diagonal encoding")
def _(rng):
    x = be.encode_diagonal([0.6, 0.8])
    _close(x.target, np.diag([0.6, 0.8]), 1e-15, "diag target")
    _require(x.alpha == 1.0, "diag alpha 1")
    _materializes(x, "diagonal encoding")


@check("blockenc: tensor multiplies alphas and krons targets")
def _(rng):
    x, y = random_encoding(rng, 2, 2.0), random_encoding(rng, 2, 3.0)
    z = be.tensor(x, y)
    _close(z.alpha, 6.0, 1e-15, "tensor alpha")
    _close(z.target, np.kron(x.target, y.target), 1e-15, "tensor target")
    _materializes(z, "tensor")


@check("blockenc: linear_combine alpha is beta times max alpha")
def _(rng):
    xs = [random_encoding(rng, 2, a) for a in (1.0, 2.0, 0.5)]
    w = [0.3, -1.2, 0.5]
    z = be.linear_combine(xs, w)
    _close(z.alpha, 2.0 * 2.0, 1e-15, "combine alpha")
    _close(z.target, sum(c * x.target for c, x in zip(w, xs)), 1e-14, "combine target")
    _materializes(z, "linear_combine")


@check("blockenc: multiply composes targets and alphas")
def _(rng):
    x, y = random_encoding(rng, 4, 1.5), random_encoding(rng, 4, 0.7)
    z = be.multiply(x, y)
    _close(z.alpha, 1.05, 1e-14, "product alpha")
    _close(z.target, x.target @ y.target, 1e-14, "product target")
    _materializes(z, "multiply")


@check("blockenc: scale_down keeps the target and grows alpha")
def _(rng):
    x = random_encoding(rng, 2)
    z = be.scale_down(x, 3.0)
    _close(z.alpha, 3.0, 1e-15, "scaled alpha")
    _close(z.target, x.target, 0.0, "scaled target")
    _raises(errors.ContractError, lambda: be.scale_down(x, 1.0), "p = 1 rejected")
    _materializes(z, "scale_down")


@check("blockenc: scaled encodes c*A at fixed alpha")
def _(rng):
    x = random_encoding(rng, 2, 2.0)
    z = be.scaled(x, -0.25)
    _close(z.alpha, 2.0, 1e-14, "scaled alpha")
    _close(z.target, -0.25 * x.target, 1e-14, "scaled target")
    _raises(errors.HeadroomError, lambda: be.scaled(x, 1.5), "|c| > 1 rejected")


@check("blockenc: amplify divides alpha by gamma and charges repetitions")
def _(rng):
    x = be.BlockEncoding(random_matrix(rng, 2, 0.2), 1.0, cost=be.CostRecord({0: 3}, 5))
    z = be.amplify(x, 2.0, 0.5, 1e-6)
    r = cm.amp_repetitions(2.0, 0.5, 1e-6)
    _close(z.alpha, 0.5, 1e-15, "amplified alpha")
    _close(z.target, x.target, 0.0, "amplified target")
    _require(z.cost.queries == {0: 3 * r}, "queries scale by r")
    _require(z.cost.depth_units == 5 * r + r, "depth = cost*r + r")
    _materializes(z, "amplify")


@check("blockenc: amplify refuses to exceed 1 - delta")
def _(rng):
    x = be.BlockEncoding(0.4 * np.eye(2), 1.0)
    _raises(errors.HeadroomError, lambda: be.amplify(x, 2.0, 0.5, 1e-6), "headroom")


@check("blockenc: relabel and phase")
def _(rng):
    x = random_encoding(rng, 2)
    y = be.relabel(x, 2.0)
    _close(y.block, x.block, 1e-15, "relabel keeps the block")
    z = be.phase(x, 1j)
    _close(z.target, 1j * x.target, 0.0, "phase target")


@check("blockenc: projection keeps the leading block")
def _(rng):
    x = random_encoding(rng, 4)
    z = be.project_top_left(x, 2)
    _close(z.target, x.target[:2, :2], 0.0, "projected target")
    _require(z.ancillas == x.ancillas + 1, "one index qubit joins the ancillas")


@check("blockenc: subnormalization is enforced")
def _(rng):
    _raises(errors.SubnormalizationError, lambda: be.BlockEncoding(2.0 * np.eye(2), 1.0), "norm > alpha")


def _perturbed(rng, dim, alpha):
    exact = random_matrix(rng, dim, 0.8 * alpha)
    delta = random_matrix(rng, dim, 0.01 * alpha)
    return exact, be.BlockEncoding(exact + delta, alpha, err=nu.spectral_norm(delta))


@check("blockenc: tracked err bounds true deviation through compositions")
def _(rng):
    a, x = _perturbed(rng, 2, 1.0)
    b, y = _perturbed(rng, 2, 2.0)
    cases = {
        "tensor": (be.tensor(x, y), np.kron(a, b)),
        "multiply": (be.multiply(x, y), a @ b),
        "combine": (be.linear_combine([x, y], [0.7, -0.4]), 0.7 * a - 0.4 * b),
        "scale_down": (be.scale_down(x, 2.5), a),
        "scaled": (be.scaled(y, 0.3), 0.3 * b),
        "relabel": (be.relabel(x, 1.3), 1.3 * a),
    }
    for name, (enc, exact) in cases.items():
        _require(nu.spectral_norm(enc.target - exact) <= enc.err + 1e-14, f"err sound for {name}")


@check("blockenc: cost records compose sequentially")
def _(rng):
    a = be.CostRecord({0: 2, 1: 1}, 5, 3)
    b = be.CostRecord({1: 4}, 7, 6)
    c = a + b
    _require(c.queries == {0: 2, 1: 5}, "queries add")
    _require(c.depth_units == 12, "depth adds")
    _require(c.ancilla_high_water == 6, "high water is a max")


# coefficient expressions ----------------------------------------------------------


@check("coeffexpr: parse and print round trip")
def _(rng):
    for text in ("cos(t)*0.4", "t^3 - 2*t + exp(-t)", "sin(2*t)**2"):
        e = ce.parse(text)
        _require(ce.parse(ce.to_text(e)) == e, f"round trip of {text!r}")


@check("coeffexpr: derivative of t*t*0.3 at 0.7")
def _(rng):
    _close(ce.eval_float(ce.differentiate(ce.parse("t*t*0.3")), 0.7), 0.42, 1e-12, "d/dt")


@check("coeffexpr: derivatives match central differences")
def _(rng):
    e = ce.parse("sin(2*t)*exp(-t) + t^3")
    h = 1e-3
    for j, stencil in ((1, [(-1, -0.5), (1, 0.5)]), (2, [(-1, 1), (0, -2), (1, 1)])):
        fd = sum(w * ce.eval_float(e, 0.4 + o * h) for o, w in stencil) / h**j
        _close(ce.eval_float(ce.differentiate(e, j), 0.4), fd, 1e-4, f"order {j}")


@check("coeffexpr: bound_abs of cos on [0, 1] is 1")
def _(rng):
    _close(ce.bound_abs(ce.parse("cos(t)"), 4096), 1.0, 1e-12, "max |cos|")


@check("coeffexpr: syntax errors carry an offset")
def _(rng):
    try:
        ce.parse("cos(t) + * 2")
    except errors.ExprSyntaxError as exc:
        _require(exc.offset == 9, f"offset {exc.offset} should be 9")
        return
    raise AssertionError("malformed expression accepted")


# Hamiltonians ---------------------------------------------------------------------


@check("hamiltonian: Pauli strings put the first letter on the top qubit")
def _(rng):
    _close(hm.pauli_matrix("XZ"), np.kron(hm.PAULI["X"], hm.PAULI["Z"]), 0.0, "XZ")


@check("hamiltonian: benchmark evaluation")
def _(rng):
    H = hm.benchmark_hamiltonian()
    want = 0.4 * math.cos(0.5) * hm.pauli_matrix("XI") + 0.4 * math.sin(0.5) * hm.pauli_matrix("ZZ")
    _close(H.evaluate(0.5), want, 1e-15, "H(0.5)")


@check("hamiltonian: second derivative matches finite differences")
def _(rng):
    H = hm.benchmark_hamiltonian()
    h = 1e-3
    fd = (H.evaluate(0.3 + h) - 2 * H.evaluate(0.3) + H.evaluate(0.3 - h)) / h**2
    _close(H.derivative(0.3, 2), fd, 1e-6, "d2H/dt2")


@check("hamiltonian: H(t) encoding has alpha 1 and the right block")
def _(rng):
    H = hm.benchmark_hamiltonian()
    x = hm.block_encode_H(H, 0.5, 1e-6)
    _require(x.alpha == 1.0, "alpha 1")
    _require(x.err <= 1e-6, "err within eps")
    _close(x.target, H.evaluate(0.5), 1e-10, "target")
    _materializes(x, "H(t) encoding")


@check("hamiltonian: H(t) encoding query count for two terms")
def _(rng):
    H = hm.benchmark_hamiltonian()
    x = hm.block_encode_H(H, 0.5, 1e-6)
    eta = hm.inner_precision(2, 1e-6)
    want = cm.amp_repetitions(2.0, 0.5, eta) * cm.unitary_log_queries(eta)
    _require(x.cost.queries == {0: want, 1: want}, f"queries {x.cost.queries} != {want} per term")


@check("hamiltonian: derivative encodings")
def _(rng):
    H = hm.benchmark_hamiltonian()
    bounds = H.derivative_bounds(3)
    for j in (1, 2, 3):
        x = hm.block_encode_H_derivative(H, 0.3, j, 1e-6, bounds)
        _close(x.target, H.derivative(0.3, j), 1e-10, f"derivative {j} target")
        _close(x.alpha, hm.derivative_alpha(bounds[j]), 1e-12, f"derivative {j} alpha")


@check("hamiltonian: oversized term norm is rejected")
def _(rng):
    _raises(errors.NormAssumptionError,
            lambda: hm.TimeDependentHamiltonian.from_terms([("1", [("X", 0.6)])]), "norm at most 1/2")


@check("hamiltonian: oversized coefficient is rejected")
def _(rng):
    _raises(errors.CoefficientBoundError,
            lambda: hm.TimeDependentHamiltonian.from_terms([("1 + t", [("X", 0.4)])]), "|gamma| <= 1")


# Runge-Kutta ----------------------------------------------------------------------


@check("rk: RK4 tableau satisfies the order conditions")
def _(rng):
    _require(not rk._failed_order_conditions(rk.RK4.a, rk.RK4.b, rk.RK4.c, 4), "order 4 conditions")


def _constant_h():
    return hm.TimeDependentHamiltonian.from_terms([("0.8", [("XI", 0.3), ("ZZ", 0.2), ("YX", 0.1)])])


@check("rk: one RK4 step on constant H is the degree-4 truncation")
def _(rng):
    H = _constant_h()
    dt = 0.25
    states, _ = rk.propagate(H, rk.RK4, 1, dt)
    a = -1j * dt * H.evaluate(0.0)
    want = sum(np.linalg.matrix_power(a, k) / math.factorial(k) for k in range(5))
    _close(states[-1].encoding.target, want, 1e-12, "RK4 step")


@check("rk: post-step alpha is twice the propagator norm")
def _(rng):
    H = hm.benchmark_hamiltonian()
    states, _ = rk.propagate(H, rk.MIDPOINT, 4, 1.0)
    for s in states[1:]:
        enc = s.encoding
        _close(enc.alpha, rk.POST_STEP_FACTOR * nu.spectral_norm(enc.target), 1e-12, "alpha")


@check("rk: measured cost equals the replayed prediction")
def _(rng):
    H = hm.benchmark_hamiltonian()
    for tab, t in ((rk.EULER, 1.0), (rk.MIDPOINT, 0.25)):
        for n in (1, 2, 3):
            _, cost = rk.propagate(H, tab, n, t, 1e-6)
            _require(cost == rk.predicted_cost(tab, H.m, n, 1e-6), f"{tab.name} N={n}")


@check("rk: step count rule")
def _(rng):
    _require(rk.steps_for_accuracy(1.0, 1e-4, 2) == 100, "1e-4, p=2 -> 100")
    _require(rk.steps_for_accuracy(1.0, 1e-4, 4) == 10, "1e-4, p=4 -> 10")


# Taylor ---------------------------------------------------------------------------


@check("taylor: word weights are conserved")
def _(rng):
    for j in range(1, 6):
        for w in tl.derivative_polynomial(j).words:
            _require(w.weight == j, f"word {w.symbols} in f_{j}")


@check("taylor: third derivative polynomial")
def _(rng):
    got = {w.symbols: w.coefficient for w in tl.derivative_polynomial(3).words}
    _require(got == {(2,): -1j, (0, 1): -1, (1, 0): -2, (0, 0, 0): 1j}, f"f_3 = {got}")


@check("taylor: one step of order p is the degree-p truncation")
def _(rng):
    H = _constant_h()
    a = -1j * 0.3 * H.evaluate(0.0)
    for p in (1, 2, 3):
        states, _ = tl.propagate(H, p, 1, 0.3)
        want = sum(np.linalg.matrix_power(a, k) / math.factorial(k) for k in range(p + 1))
        _close(states[-1].encoding.target, want, 1e-12, f"order {p}")


@check("taylor: order 1 reproduces forward Euler")
def _(rng):
    H = hm.benchmark_hamiltonian()
    u1 = tl.propagate(H, 1, 4)[0][-1].encoding.target
    u2 = rk.propagate(H, rk.EULER, 4)[0][-1].encoding.target
    _close(u1, u2, 1e-14, "Taylor p=1 vs Euler")


@check("taylor: measured cost equals the replayed prediction")
def _(rng):
    H = hm.benchmark_hamiltonian()
    for p in (1, 2, 3):
        for n in (1, 2):
            _, cost = tl.propagate(H, p, n, 1.0, 1e-6)
            _require(cost == tl.predicted_cost_taylor(H, p, n, 1e-6), f"p={p} N={n}")


@check("taylor: f_j U matches finite differences of the reference")
def _(rng):
    H = hm.benchmark_hamiltonian()
    for j in (1, 2, 3):
        u = rf.exact_propagator(H, 0.5)
        f = tl.evaluate_polynomial(tl.derivative_polynomial(j), H, 0.5) @ u
        _close(rf.finite_diff_derivative(H, 0.5, j, 0.02), f, 1e-3, f"j={j}")


# reference oracle and cost model -------------------------------------------------


@check("reference: constant H gives the closed form")
def _(rng):
    H = hm.TimeDependentHamiltonian.from_terms([("1", [("Z", 0.4)])])
    _close(rf.exact_propagator(H, 1.0), nu.hermitian_exp(0.4 * hm.pauli_matrix("Z"), 1.0), 1e-12, "exp(-0.4iZ)")


@check("reference: propagator is unitary")
def _(rng):
    rf.check_unitary(rf.exact_propagator(hm.benchmark_hamiltonian(), 1.0))


@check("reference: convergence fit recovers synthetic orders")
def _(rng):
    dts = [1 / 8, 1 / 16, 1 / 32, 1 / 64]
    _close(rf.fit_convergence_order([(d, d**2) for d in dts]).fitted_order, 2.0, 1e-9, "order 2")
    _close(rf.fit_convergence_order([(d, 3 * d) for d in dts]).fitted_order, 1.0, 1e-9, "order 1")


@check("costmodel: fixed conventions")
def _(rng):
    _require(cm.unitary_log_queries(1e-6) == 20, "ceil(log2 1e6) = 20")
    _require(cm.amp_repetitions(2.0, 0.5, 1e-6) == math.ceil(4 * math.log(2e6)), "amplification count")


@check("costmodel: shape evaluators are monotone")
def _(rng):
    _require(cm.rk_asymptotic_depth(4, 2, 2, 0.4, 1e-3) > cm.rk_asymptotic_depth(4, 2, 2, 0.4, 1e-2), "eps")
    _require(cm.taylor_asymptotic_depth(1, 3, 3, 2, 0.4, 1e-3) > cm.taylor_asymptotic_depth(1, 3, 2, 2, 0.4, 1e-3), "m")


# runner ---------------------------------------------------------------------------


@dataclass
class Outcome:
    name: str
    ok: bool
    detail: str = ""


def run(seed: int = SEED) -> list[Outcome]:
    out = []
    for name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        try:
            fn(rng)
            out.append(Outcome(name, True))
        except AssertionError as exc:
            out.append(Outcome(name, False, str(exc)))
        except Exception as exc:  # a crash is a failed invariant too
            last = traceback.extract_tb(exc.__traceback__)[-1]
            out.append(Outcome(name, False, f"{type(exc).__name__}: {exc} ({last.name}:{last.lineno})"))
    return out


def report(outcomes: list[Outcome], stream) -> int:
    for o in outcomes:
        line = f"[{'PASS' if o.ok else 'FAIL'}] {o.name}"
        if not o.ok:
            line += f" -- {o.detail}"
        print(line, file=stream)
    failed = sum(not o.ok for o in outcomes)
    print(f"{len(outcomes) - failed}/{len(outcomes)} checks passed", file=stream)
    return 1 if failed else 0
