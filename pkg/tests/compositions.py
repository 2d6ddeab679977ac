"""Random composition trees evaluated twice: through the algebra and with plain numpy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tdhsim import blockenc as be
from tdhsim import numerics as nu
from tdhsim.selftest import random_matrix

MAX_DIM = 16


@dataclass
class Node:
    enc: be.BlockEncoding
    exact: np.ndarray  # independently computed operator (unperturbed)
    alpha: float  # independently computed subnormalization


def leaf(rng, dim, perturb=0.0):
    alpha = float(rng.uniform(0.5, 3.0))
    exact = random_matrix(rng, dim, alpha * rng.uniform(0.2, 0.85))
    if perturb:
        delta = random_matrix(rng, dim, perturb * alpha)
        enc = be.BlockEncoding(exact + delta, alpha, err=nu.spectral_norm(delta))
    else:
        enc = be.BlockEncoding(exact, alpha)
    return Node(enc, exact, alpha)


def step(rng, nodes, perturb):
    """Apply one random operation to nodes drawn from the pool."""
    x = nodes[rng.integers(len(nodes))]
    kind = rng.choice(["tensor", "combine", "multiply", "scale_down", "scaled", "relabel",
                       "phase", "amplify", "project"])
    if kind == "tensor":
        y = leaf(rng, 2, perturb)
        if x.enc.dim * 2 > MAX_DIM:
            kind = "multiply"
        else:
            return Node(be.tensor(x.enc, y.enc), np.kron(x.exact, y.exact), x.alpha * y.alpha)
    if kind in ("combine", "multiply"):
        same = [n for n in nodes if n.enc.dim == x.enc.dim]
        y = same[rng.integers(len(same))] if len(same) > 1 else leaf(rng, x.enc.dim, perturb)
        if kind == "multiply":
            return Node(be.multiply(x.enc, y.enc), x.exact @ y.exact, x.alpha * y.alpha)
        w = rng.uniform(-1.5, 1.5, size=2)
        return Node(be.linear_combine([x.enc, y.enc], list(w)), w[0] * x.exact + w[1] * y.exact,
                    (abs(w[0]) + abs(w[1])) * max(x.alpha, y.alpha))
    if kind == "scale_down":
        p = float(rng.uniform(1.1, 4.0))
        return Node(be.scale_down(x.enc, p), x.exact, x.alpha * p)
    if kind == "scaled":
        c = float(rng.uniform(-1.0, 1.0))
        return Node(be.scaled(x.enc, c), c * x.exact, x.alpha)
    if kind == "relabel":
        a = float(rng.uniform(0.5, 2.0)) * x.alpha
        return Node(be.relabel(x.enc, a), x.exact * (a / x.alpha), a)
    if kind == "phase":
        z = complex(np.exp(1j * rng.uniform(0, 2 * math.pi)))
        return Node(be.phase(x.enc, z), z * x.exact, x.alpha)
    if kind == "project":
        if x.enc.dim < 4:
            return x
        d = x.enc.dim // 2
        return Node(be.project_top_left(x.enc, d), x.exact[:d, :d], x.alpha)
    # amplify within the 1 - delta headroom
    norm = nu.spectral_norm(x.enc.target)
    room = 0.5 * x.enc.alpha / max(norm, 1e-12)
    if room <= 1.05:
        return Node(be.scale_down(x.enc, 1.5), x.exact, x.alpha * 1.5)
    g = float(rng.uniform(1.01, min(room, 8.0)))
    return Node(be.amplify(x.enc, g, 0.5, 1e-6), x.exact, x.alpha / g)


def random_composition(rng, depth=6, perturb=0.0) -> Node:
    nodes = [leaf(rng, int(rng.choice([2, 4])), perturb) for _ in range(3)]
    for _ in range(depth):
        nodes.append(step(rng, nodes, perturb))
    return nodes[-1]
