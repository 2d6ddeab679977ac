"""Depth and query growth with the number of steps, measured and replayed.

RK depth compounds per step because each step amplifies a circuit that already
contains the previous propagator; the Taylor step amplifies only its own step
operator, so its depth is linear in N.

    python scripts/cost_scaling.py --out results/cost_scaling.csv
"""

from __future__ import annotations

import argparse
import csv
import math
from dataclasses import dataclass
from pathlib import Path

from tdhsim import hamiltonian as hm
from tdhsim import rk
from tdhsim import taylor as tl


@dataclass(frozen=True)
class ScalingConfig:
    steps: tuple[int, ...] = (1, 2, 3, 4, 6, 8, 12, 16)
    epsilon: float = 1e-6
    # RK4 and midpoint need dt <= 1/3 and 1/2 for their stage scalings
    rk_t_final: float = 0.25
    taylor_t_final: float = 1.0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/cost_scaling.csv")
    args = ap.parse_args(argv)
    cfg = ScalingConfig()
    H = hm.benchmark_hamiltonian()
    bounds = H.derivative_bounds(3)
    rows = []
    for n in cfg.steps:
        for tab in (rk.EULER, rk.MIDPOINT, rk.RK4):
            _, cost = rk.propagate(H, tab, n, cfg.rk_t_final, cfg.epsilon)
            pred = rk.predicted_cost(tab, H.m, n, cfg.epsilon)
            rows.append((tab.name, n, cost.depth_units, cost.queries_total, cost.ancilla_high_water, cost == pred))
        for p in (1, 2, 3):
            _, cost = tl.propagate(H, p, n, cfg.taylor_t_final, cfg.epsilon, bounds)
            pred = tl.predicted_cost_taylor(H, p, n, cfg.epsilon, bounds)
            rows.append((f"taylor{p}", n, cost.depth_units, cost.queries_total, cost.ancilla_high_water, cost == pred))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["method", "steps", "depth_units", "queries_total", "ancilla_high_water", "matches_prediction"])
        w.writerows(rows)
    for name in ("euler", "midpoint", "rk4", "taylor1", "taylor2", "taylor3"):
        d = [r[2] for r in rows if r[0] == name]
        print(f"{name:9s} log10 depth at N={cfg.steps[0]}..{cfg.steps[-1]}: "
              + " ".join(f"{math.log10(x):.1f}" for x in d))
    print("all measured == predicted:", all(r[5] for r in rows))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
