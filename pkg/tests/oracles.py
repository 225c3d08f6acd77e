"""Slow, loop-based reference implementations used as independent oracles.

Nothing here shares code with the package beyond reading kernel tables and
graph edge lists.
"""
from __future__ import annotations

import itertools
import math


def copy_inputs(x: int, subset) -> int:
    return sum(((x >> v) & 1) << j for j, v in enumerate(subset))


def joint_table(g, kernel):
    """{(x, y_flat): P(x, y)} by enumerating every assignment and every output sequence."""
    copies = [s for s, m in g.edges for _ in range(m)]
    table = kernel.table
    out = {}
    for x in range(2**g.n):
        for ys in itertools.product(range(kernel.q), repeat=len(copies)):
            p = 2.0**-g.n
            for s, y in zip(copies, ys):
                p *= table[copy_inputs(x, s), y]
                if p == 0.0:
                    break
            if p > 0.0:
                out[(x, ys)] = p
    return out


def brute_conditional_entropy(g, kernel) -> float:
    joint = joint_table(g, kernel)
    marg = {}
    for (_, ys), p in joint.items():
        marg[ys] = marg.get(ys, 0.0) + p
    return -sum(p * math.log2(p / marg[ys]) for (_, ys), p in joint.items())


def brute_output_entropy(g, kernel) -> float:
    marg = {}
    for (_, ys), p in joint_table(g, kernel).items():
        marg[ys] = marg.get(ys, 0.0) + p
    return -sum(p * math.log2(p) for p in marg.values())


def brute_count(g, kernel, y) -> int:
    """Assignments x with Q(y_e | x[e]) > 0 for every observed symbol."""
    count = 0
    for x in range(2**g.n):
        if all(kernel.table[copy_inputs(x, s), sym] > 0 for (s, _), ys in zip(g.edges, y) for sym in ys):
            count += 1
    return count


def brute_posterior_entropy(g, kernel, y) -> float:
    weights = []
    for x in range(2**g.n):
        w = 1.0
        for (s, _), ys in zip(g.edges, y):
            for sym in ys:
                w *= kernel.table[copy_inputs(x, s), sym]
        weights.append(w)
    total = sum(weights)
    return -sum(w / total * math.log2(w / total) for w in weights if w > 0)


def brute_gamma(kernel, l: int, nu) -> float:
    """Gamma_l by its defining sum: tuples of l kernel inputs, replica r of coordinate i is bit i of u_r."""
    k, q, table = kernel.k, kernel.q, kernel.table
    total = 0.0
    for us in itertools.product(range(2**k), repeat=l):
        weight = 1.0
        for i in range(k):
            config = sum(((us[r] >> i) & 1) << r for r in range(l))
            weight *= nu[config]
        if weight == 0.0:
            continue
        bracket = sum(math.prod(1.0 - table[u, z] for u in us) for z in range(q))
        total += bracket * weight
    return total / q


def brute_walsh(f) -> list[float]:
    size = len(f)
    return [sum(f[x] * (-1) ** bin(x & w).count("1") for x in range(size)) for w in range(size)]
