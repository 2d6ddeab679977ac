"""Command line: simulate, converge, resources, selftest.

Exit codes: 0 success, 1 self-test failure or unexpected error, 2 bad
configuration (including violated Hamiltonian assumptions), 3 a violated
operation contract during a run, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import numpy as np

from . import costmodel as cm
from . import hamiltonian as hm
from . import reference as rf
from . import rk
from . import selftest
from . import taylor as tl
from .blockenc import CostRecord
from .coeffexpr import DEFAULT_GRID
from .errors import ConfigError, ContractError, TdhsimError

CSV_COLUMNS = ("steps", "dt", "error", "alpha", "depth_units", "queries_total")


@dataclass(frozen=True)
class PauliWeight:
    string: str
    weight: float


@dataclass(frozen=True)
class TermConfig:
    coeff: str
    paulis: tuple[PauliWeight, ...]


@dataclass(frozen=True)
class MethodConfig:
    kind: str
    tableau: Any = None
    order: int | None = None


@dataclass(frozen=True)
class RunConfig:
    qubits: int
    terms: tuple[TermConfig, ...]
    method: MethodConfig
    t_final: float = 1.0
    steps: int | str = 16
    epsilon: float = 1e-6
    grid_points: int = DEFAULT_GRID
    seed: int = 0
    reference_tol: float = rf.DEFAULT_TOL

    def to_json(self) -> dict:
        return asdict(self)


def _fields(obj: dict, where: str, required: set[str], optional: set[str]) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = set(obj) - required - optional
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing field(s) {sorted(missing)}")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{where} must be a finite number")
    return float(value)


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where} must be an integer")
    return value


def parse_config(doc: dict) -> RunConfig:
    """Structural validation; Hamiltonian assumptions are checked by ``build_hamiltonian``."""
    _fields(doc, "config", {"qubits", "terms", "method"},
            {"t_final", "steps", "epsilon", "grid_points", "seed", "reference_tol"})
    qubits = _integer(doc["qubits"], "qubits")
    if not 1 <= qubits <= 10:
        raise ConfigError("qubits must be in 1..10")
    if not isinstance(doc["terms"], list) or not doc["terms"]:
        raise ConfigError("terms must be a nonempty list")
    terms = []
    for i, t in enumerate(doc["terms"]):
        _fields(t, f"terms[{i}]", {"coeff", "paulis"}, set())
        if not isinstance(t["coeff"], str):
            raise ConfigError(f"terms[{i}].coeff must be an expression string")
        if not isinstance(t["paulis"], list) or not t["paulis"]:
            raise ConfigError(f"terms[{i}].paulis must be a nonempty list")
        paulis = []
        for k, p in enumerate(t["paulis"]):
            where = f"terms[{i}].paulis[{k}]"
            _fields(p, where, {"string", "weight"}, set())
            s = p["string"]
            if not isinstance(s, str) or len(s) != qubits or set(s) - set("IXYZ"):
                raise ConfigError(f"{where}.string must be {qubits} letters from I, X, Y, Z")
            paulis.append(PauliWeight(s, _number(p["weight"], f"{where}.weight")))
        terms.append(TermConfig(t["coeff"], tuple(paulis)))

    m = doc["method"]
    if not isinstance(m, dict) or m.get("kind") not in ("rk", "taylor"):
        raise ConfigError('method.kind must be "rk" or "taylor"')
    if m["kind"] == "rk":
        _fields(m, "method", {"kind", "tableau"}, set())
        try:
            rk.tableau_from(m["tableau"])
        except (ContractError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"method.tableau: {exc}") from None
        method = MethodConfig("rk", tableau=m["tableau"])
    else:
        _fields(m, "method", {"kind", "order"}, set())
        order = _integer(m["order"], "method.order")
        if not 1 <= order <= tl.MAX_ORDER:
            raise ConfigError(f"method.order must be in 1..{tl.MAX_ORDER}")
        method = MethodConfig("taylor", order=order)

    t_final = _number(doc.get("t_final", 1.0), "t_final")
    if not 0 < t_final <= 1:
        raise ConfigError("t_final must be in (0, 1]")
    steps = doc.get("steps", 16)
    if steps != "auto":
        steps = _integer(steps, "steps")
        if steps < 1:
            raise ConfigError('steps must be a positive integer or "auto"')
    eps = _number(doc.get("epsilon", 1e-6), "epsilon")
    if not 0 < eps < 0.5:
        raise ConfigError("epsilon must be in (0, 0.5)")
    grid = _integer(doc.get("grid_points", DEFAULT_GRID), "grid_points")
    if grid < 2:
        raise ConfigError("grid_points must be at least 2")
    tol = _number(doc.get("reference_tol", rf.DEFAULT_TOL), "reference_tol")
    if tol <= 0:
        raise ConfigError("reference_tol must be positive")
    return RunConfig(qubits, tuple(terms), method, t_final, steps, eps, grid,
                     _integer(doc.get("seed", 0), "seed"), tol)


def build_hamiltonian(cfg: RunConfig) -> hm.TimeDependentHamiltonian:
    """Assemble H(t); any violated assumption becomes a configuration error."""
    spec = [(t.coeff, [(p.string, p.weight) for p in t.paulis]) for t in cfg.terms]
    try:
        return hm.TimeDependentHamiltonian.from_terms(spec, cfg.grid_points)
    except (ContractError, ConfigError) as exc:
        raise ConfigError(f"rejected at load: {exc}") from None


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(doc)


def method_order(cfg: RunConfig) -> int:
    if cfg.method.kind == "taylor":
        return cfg.method.order
    return rk.tableau_from(cfg.method.tableau).order


def resolve_steps(cfg: RunConfig) -> int:
    if cfg.steps == "auto":
        return rk.steps_for_accuracy(cfg.t_final, cfg.epsilon, method_order(cfg))
    return cfg.steps


def run_method(cfg: RunConfig, H: hm.TimeDependentHamiltonian, n_steps: int):
    """(final state, measured CostRecord)."""
    if cfg.method.kind == "rk":
        states, cost = rk.propagate(H, rk.tableau_from(cfg.method.tableau), n_steps, cfg.t_final, cfg.epsilon)
    else:
        states, cost = tl.propagate(H, cfg.method.order, n_steps, cfg.t_final, cfg.epsilon)
    return states[-1], cost


def predicted(cfg: RunConfig, H: hm.TimeDependentHamiltonian, n_steps: int) -> CostRecord:
    if cfg.method.kind == "rk":
        return rk.predicted_cost(rk.tableau_from(cfg.method.tableau), H.m, n_steps, cfg.epsilon)
    return tl.predicted_cost_taylor(H, cfg.method.order, n_steps, cfg.epsilon)


def matrix_json(a: np.ndarray) -> dict:
    a = np.asarray(a)
    return {"dim": int(a.shape[0]),
            "entries": [[float(z.real), float(z.imag)] for z in a.reshape(-1)]}


def matrix_from_json(doc: dict) -> np.ndarray:
    dim = doc["dim"]
    flat = np.array([complex(re, im) for re, im in doc["entries"]])
    return flat.reshape(dim, dim)


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


# commands ---------------------------------------------------------------------


def cmd_simulate(cfg: RunConfig, reference: bool = False, timing: bool = False) -> dict:
    started = time.perf_counter()
    H = build_hamiltonian(cfg)
    n = resolve_steps(cfg)
    state, cost = run_method(cfg, H, n)
    enc = state.encoding
    doc = {
        "config": cfg.to_json(),
        "steps": n,
        "dt": state.dt,
        "t_final": cfg.t_final,
        "final_target": matrix_json(enc.target),
        "alpha": enc.alpha,
        "err": enc.err,
        "ancillas": enc.ancillas,
        "cost": cost.to_json(),
    }
    if reference:
        u_ref = rf.exact_propagator(H, cfg.t_final, cfg.reference_tol)
        doc["global_error"] = rf.global_error(enc.target, u_ref)
    if timing:
        doc["wall_time_s"] = time.perf_counter() - started
    return doc


def converge_rows(cfg: RunConfig, steps_list: list[int], jobs: int = 1) -> list[dict]:
    if len(steps_list) < 3:
        raise ConfigError("converge needs at least three step counts")
    if len(set(steps_list)) != len(steps_list) or min(steps_list) < 1:
        raise ConfigError("step counts must be distinct positive integers")
    H = build_hamiltonian(cfg)
    u_ref = rf.exact_propagator(H, cfg.t_final, cfg.reference_tol)

    def one(n: int) -> dict:
        state, cost = run_method(cfg, H, n)
        return {"steps": n, "dt": state.dt, "error": rf.global_error(state.encoding.target, u_ref),
                "alpha": state.encoding.alpha, "depth_units": cost.depth_units,
                "queries_total": cost.queries_total}

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, steps_list))
    return [one(n) for n in steps_list]


def converge_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r["steps"], repr(r["dt"]), repr(r["error"]), repr(r["alpha"]),
                    r["depth_units"], r["queries_total"]])
    fit = rf.fit_convergence_order([(r["dt"], r["error"]) for r in rows])
    buf.write(f"# fitted_order={fit.fitted_order!r}\n")
    return buf.getvalue()


def cmd_converge(cfg: RunConfig, steps_list: list[int], jobs: int = 1) -> str:
    return converge_csv(converge_rows(cfg, steps_list, jobs))


def _ratio(a: int, b: int) -> float | None:
    return a / b if b else None


def cmd_resources(cfg: RunConfig) -> dict:
    H = build_hamiltonian(cfg)
    n = resolve_steps(cfg)
    _, measured = run_method(cfg, H, n)
    pred = predicted(cfg, H, n)
    p = method_order(cfg)
    bounds = H.derivative_bounds(p)
    doc = {
        "method": cfg.method.kind,
        "order": p,
        "steps": n,
        "m": H.m,
        "d_max": H.d_max,
        "h_max": H.h_max,
        "M": bounds.overall,
        "derivative_bounds": list(bounds.per_order),
        "measured": measured.to_json(),
        "predicted": pred.to_json(),
        "exact_match": measured == pred,
        "ratio": {
            "depth_units": _ratio(measured.depth_units, pred.depth_units),
            "queries_total": _ratio(measured.queries_total, pred.queries_total),
        },
    }
    tmax = cm.t_max(H.d_max, H.h_max, cfg.epsilon)
    if cfg.method.kind == "rk":
        s = rk.tableau_from(cfg.method.tableau).stages
        depth = cm.rk_asymptotic_depth(p, H.m, H.d_max, H.h_max, cfg.epsilon, cfg.t_final)
        doc["shape"] = {"recursion_depth": cm.rk_recursion(s, H.m, tmax, cfg.epsilon, n)[-1],
                        "asymptotic_depth": depth if math.isfinite(depth) else None,
                        "asymptotic_log_depth": cm.rk_asymptotic_log_depth(p, H.m, H.d_max, H.h_max,
                                                                      cfg.epsilon, cfg.t_final)}
    else:
        doc["shape"] = {
            "per_step": cm.taylor_per_step(bounds.overall, p, H.m, H.d_max, H.h_max, cfg.epsilon),
            "asymptotic_depth": cm.taylor_asymptotic_depth(bounds.overall, p, H.m, H.d_max, H.h_max, cfg.epsilon,
                                                  cfg.t_final),
            "word_counts": tl.word_counts(p, bounds),
            "word_counts_one_per_order": tl.word_counts(p, convention="one_per_order"),
        }
    return doc


# entry point ------------------------------------------------------------------


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _steps_arg(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("steps must be a comma-separated list of integers") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tdhsim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="run one propagation and emit JSON")
    sim.add_argument("--config", required=True)
    sim.add_argument("--reference", action="store_true", help="include the error against the dense oracle")
    sim.add_argument("--timing", action="store_true", help="include wall time (output no longer reproducible)")
    sim.add_argument("--out")
    conv = sub.add_parser("converge", help="error sweep over step counts, CSV output")
    conv.add_argument("--config", required=True)
    conv.add_argument("--steps", type=_steps_arg, default=[8, 16, 32, 64])
    conv.add_argument("--jobs", type=int, default=1, help="evaluate step counts concurrently")
    conv.add_argument("--out")
    res = sub.add_parser("resources", help="measured versus predicted cost")
    res.add_argument("--config", required=True)
    res.add_argument("--out")
    st = sub.add_parser("selftest", help="run the invariant suite")
    st.add_argument("--seed", type=int, default=selftest.SEED)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            return selftest.report(selftest.run(args.seed), sys.stdout)
        cfg = load_config(args.config)
        if args.command == "simulate":
            _write(dumps(cmd_simulate(cfg, args.reference, args.timing)), args.out)
        elif args.command == "converge":
            _write(cmd_converge(cfg, args.steps, max(1, args.jobs)), args.out)
        else:
            _write(dumps(cmd_resources(cfg)), args.out)
        return 0
    except TdhsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4 if isinstance(exc, ArithmeticError) else 1


if __name__ == "__main__":
    sys.exit(main())
