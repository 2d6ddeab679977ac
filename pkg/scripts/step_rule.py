"""Error of the N = ceil(t / eps^(1/p)) step rule at several target accuracies.

    python scripts/step_rule.py [--out results/step_rule.csv]
"""

from __future__ import annotations

import argparse
import csv
from dataclasses import dataclass
from pathlib import Path

from tdhsim import hamiltonian as hm
from tdhsim import reference as rf
from tdhsim import rk
from tdhsim import taylor as tl


@dataclass(frozen=True)
class StepRuleConfig:
    epsilons: tuple[float, ...] = (1e-2, 1e-3, 1e-4)
    t_final: float = 1.0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/step_rule.csv")
    args = ap.parse_args(argv)
    cfg = StepRuleConfig()
    H = hm.benchmark_hamiltonian()
    u_ref = rf.exact_propagator(H, cfg.t_final)
    methods = {"midpoint": (2, lambda n: rk.propagate(H, rk.MIDPOINT, n, cfg.t_final)),
               "rk4": (4, lambda n: rk.propagate(H, rk.RK4, n, cfg.t_final)),
               "taylor2": (2, lambda n: tl.propagate(H, 2, n, cfg.t_final)),
               "taylor3": (3, lambda n: tl.propagate(H, 3, n, cfg.t_final))}
    rows = []
    for name, (p, run) in methods.items():
        for eps in cfg.epsilons:
            n = rk.steps_for_accuracy(cfg.t_final, eps, p)
            err = rf.global_error(run(n)[0][-1].encoding.target, u_ref)
            rows.append((name, f"{eps:g}", n, f"{err:.6e}", f"{err / eps:.4g}"))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["method", "eps", "steps", "error", "error_over_eps"])
        w.writerows(rows)
    print(out.read_text(), end="")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
