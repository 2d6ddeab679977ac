"""Global error against the dense oracle for every propagator on the benchmark.

Writes one CSV per method plus a summary of fitted orders.

    python scripts/convergence_sweep.py --out results/convergence
"""

from __future__ import annotations

import argparse
import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from tdhsim import hamiltonian as hm
from tdhsim import reference as rf
from tdhsim import rk
from tdhsim import taylor as tl


@dataclass(frozen=True)
class SweepConfig:
    steps: tuple[int, ...] = (8, 16, 32, 64, 128)
    t_final: float = 1.0
    epsilon: float = 1e-6
    reference_tol: float = rf.DEFAULT_TOL
    methods: tuple[str, ...] = ("euler", "midpoint", "rk4", "taylor1", "taylor2", "taylor3")
    expected: dict = field(default_factory=lambda: {
        "euler": 1, "midpoint": 2, "rk4": 4, "taylor1": 1, "taylor2": 2, "taylor3": 3})


def run_method(H, name: str, n: int, cfg: SweepConfig):
    if name.startswith("taylor"):
        return tl.propagate(H, int(name[-1]), n, cfg.t_final, cfg.epsilon)
    return rk.propagate(H, rk.TABLEAUX[name], n, cfg.t_final, cfg.epsilon)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/convergence")
    args = ap.parse_args(argv)
    cfg = SweepConfig()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    H = hm.benchmark_hamiltonian()
    u_ref = rf.exact_propagator(H, cfg.t_final, cfg.reference_tol)
    summary = {"config": asdict(cfg), "fitted_order": {}}
    for name in cfg.methods:
        rows = []
        for n in cfg.steps:
            states, cost = run_method(H, name, n, cfg)
            err = rf.global_error(states[-1].encoding.target, u_ref)
            rows.append((n, cfg.t_final / n, err, states[-1].encoding.alpha, cost.depth_units))
        fit = rf.fit_convergence_order([(r[1], r[2]) for r in rows])
        summary["fitted_order"][name] = fit.fitted_order
        with open(out / f"{name}.csv", "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["steps", "dt", "error", "alpha", "depth_units"])
            w.writerows([r[0], repr(r[1]), repr(r[2]), repr(r[3]), r[4]] for r in rows)
        print(f"{name:9s} fitted order {fit.fitted_order:.3f} (expected {cfg.expected[name]})")
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
