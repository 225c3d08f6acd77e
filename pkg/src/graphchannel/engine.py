"""Planted instances, posteriors and conditional entropies by enumeration.

All entropies are in bits.  Assignments ``x`` are integers whose bit ``i`` is
the value of vertex ``i``; the k inputs of an edge ``(i1 < ... < ik)`` are
packed so that vertex ``i1`` is bit 0 of the kernel row index.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .hypergraphs import EnsembleParams, Hypergraph, IntensityMap, sample_inhomogeneous, sample_poisson
from .kernels import Kernel, KernelError, kernel_entropy
from .rng import mean_and_stderr, parallel_map, stream

MAX_POSTERIOR_N = 26
MAX_COUNT_N = 30
DEFAULT_BUDGET = 2**24
_CHUNK = 2**20


class EngineError(ValueError):
    pass


class ZeroMarginal(EngineError):
    """The observations have zero probability under every assignment."""


class Infeasible(EngineError):
    """The requested computation is beyond the configured enumeration limits."""


class BudgetExceeded(Infeasible):
    pass


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    stderr: float = 0.0
    nsamples: int = 0
    method: str = "exact-y-enumeration"

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")


@dataclass(frozen=True)
class PosteriorTable:
    n: int
    weights: np.ndarray
    log_marginal: float

    def entropy(self) -> float:
        return _entropy_bits(self.weights)


@dataclass(frozen=True)
class PlantedInstance:
    graph: Hypergraph
    kernel: Kernel
    x: int
    y: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        y = tuple(tuple(int(s) for s in ys) for ys in self.y)
        object.__setattr__(self, "y", y)
        if self.graph.k != self.kernel.k:
            raise EngineError("graph arity does not match kernel arity")
        if len(y) != len(self.graph.edges):
            raise EngineError("need one observation list per edge")
        if not 0 <= self.x < 2**self.graph.n:
            raise EngineError("planted assignment out of range")
        for (subset, mult), ys in zip(self.graph.edges, y):
            if len(ys) != mult:
                raise EngineError(f"edge {subset}: {len(ys)} symbols for multiplicity {mult}")
            if any(not 0 <= s < self.kernel.q for s in ys):
                raise EngineError(f"edge {subset}: symbol outside output alphabet")
            if self.kernel.is_csp:
                u = edge_input(self.x, subset)
                if any(self.kernel.table[u, s] == 0 for s in ys):
                    raise EngineError(f"edge {subset}: observation violates the planted assignment")

    def x_bits(self) -> list[int]:
        return [(self.x >> i) & 1 for i in range(self.graph.n)]


def _entropy_bits(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def _row_entropies(p: np.ndarray) -> np.ndarray:
    safe = np.where(p > 0, p, 1.0)
    return -(p * np.log2(safe)).sum(axis=-1)


def edge_input(x, subset: Sequence[int]):
    """Kernel row index of the edge inputs x[I] (scalar or array of assignments)."""
    x = np.asarray(x, dtype=np.int64)
    u = np.zeros_like(x)
    for j, v in enumerate(subset):
        u |= ((x >> v) & 1) << j
    return u if u.ndim else int(u)


def _check_pair(g: Hypergraph, kernel: Kernel) -> None:
    if g.k != kernel.k:
        raise EngineError(f"graph arity {g.k} does not match kernel arity {kernel.k}")


def _symbol_counts(g: Hypergraph, kernel: Kernel, y) -> list[np.ndarray]:
    if len(y) != len(g.edges):
        raise EngineError("need one observation list per edge")
    out = []
    for (subset, mult), ys in zip(g.edges, y):
        if len(ys) != mult:
            raise EngineError(f"edge {subset}: {len(ys)} symbols for multiplicity {mult}")
        counts = np.bincount(np.asarray(ys, dtype=np.int64), minlength=kernel.q)
        if counts.size > kernel.q:
            raise EngineError(f"edge {subset}: symbol outside output alphabet")
        out.append(counts)
    return out


def log_likelihood(g: Hypergraph, kernel: Kernel, y) -> np.ndarray:
    """log2 P_g(y | x) for every assignment x (``-inf`` where zero)."""
    _check_pair(g, kernel)
    if g.n > MAX_POSTERIOR_N:
        raise Infeasible(f"n={g.n} exceeds the enumeration limit {MAX_POSTERIOR_N}")
    xs = np.arange(2**g.n, dtype=np.int64)
    with np.errstate(divide="ignore"):
        logq = np.log2(kernel.table)
    ll = np.zeros(xs.size)
    for (subset, _), counts in zip(g.edges, _symbol_counts(g, kernel, y)):
        u = edge_input(xs, subset)
        for z in np.flatnonzero(counts):
            ll += counts[z] * logq[u, z]
    return ll


def posterior(g: Hypergraph, kernel: Kernel, y) -> PosteriorTable:
    """R_g(x | y) by full enumeration, accumulated in the log domain."""
    ll = log_likelihood(g, kernel, y)
    top = ll.max()
    if not np.isfinite(top):
        raise ZeroMarginal("no assignment is consistent with the observations")
    w = np.exp2(ll - top)
    total = w.sum()
    return PosteriorTable(g.n, w / total, float(top + np.log2(total) - g.n))


def entropy_given_y(g: Hypergraph, kernel: Kernel, y) -> float:
    return posterior(g, kernel, y).entropy()


def count_solutions(g: Hypergraph, kernel: Kernel, y) -> int:
    """Number of assignments satisfying every observed constraint (brute force)."""
    _check_pair(g, kernel)
    if not kernel.is_csp:
        raise KernelError(f"{kernel.tag} kernel is not a CSP kernel")
    if g.n > MAX_COUNT_N:
        raise Infeasible(f"n={g.n} exceeds the counting limit {MAX_COUNT_N}")
    counts = _symbol_counts(g, kernel, y)
    allowed = kernel.table > 0
    total = 0
    for start in range(0, 2**g.n, _CHUNK):
        xs = np.arange(start, min(start + _CHUNK, 2**g.n), dtype=np.int64)
        ok = np.ones(xs.size, dtype=bool)
        for (subset, _), c in zip(g.edges, counts):
            u = edge_input(xs, subset)
            for z in np.flatnonzero(c):
                ok &= allowed[u, z]
        total += int(ok.sum())
    return total


def draw_observations(
    g: Hypergraph, kernel: Kernel, x: int, rng: np.random.Generator
) -> tuple[tuple[int, ...], ...]:
    """One output symbol per edge copy, drawn from Q(. | x[I])."""
    copies = list(g.copies())
    if not copies:
        return tuple(() for _ in g.edges)
    u = np.array([edge_input(x, s) for s in copies])
    cdf = np.cumsum(kernel.table, axis=1)
    last = kernel.q - 1 - np.argmax(kernel.table[:, ::-1] > 0, axis=1)
    cdf[np.arange(kernel.q)[None, :] >= last[:, None]] = np.inf
    z = (rng.random(len(copies))[:, None] >= cdf[u]).sum(axis=1)
    out, pos = [], 0
    for _, mult in g.edges:
        out.append(tuple(int(v) for v in z[pos : pos + mult]))
        pos += mult
    return tuple(out)


def sample_instance(g: Hypergraph, kernel: Kernel, rng: np.random.Generator) -> PlantedInstance:
    """Uniform planted x, then every edge copy observed independently through the kernel."""
    _check_pair(g, kernel)
    bits = rng.integers(0, 2, size=g.n)
    x = int(sum(int(b) << i for i, b in enumerate(bits)))
    return PlantedInstance(g, kernel, x, draw_observations(g, kernel, x, rng))


# ---------------------------------------------------------------------------
# exact enumeration over observations


def components(g: Hypergraph) -> tuple[list[list[int]], int]:
    """Connected vertex sets touched by edges, and the number of isolated vertices."""
    parent = list(range(g.n))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    touched = set()
    for subset, _ in g.edges:
        touched.update(subset)
        root = find(subset[0])
        for v in subset[1:]:
            parent[find(v)] = root
    groups: dict[int, list[int]] = {}
    for v in sorted(touched):
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values()), g.n - len(touched)


class _Work:
    def __init__(self, budget: int):
        self.budget = budget
        self.used = 0

    def charge(self, amount: int) -> None:
        self.used += amount
        if self.used > self.budget:
            raise BudgetExceeded(f"exact enumeration needs more than {self.budget} evaluations")


def _frontier(
    n: int, copies: Sequence[Sequence[int]], kernel: Kernel, work: _Work
) -> tuple[np.ndarray, np.ndarray]:
    """Distinct posteriors reachable by observation sequences, with their total probability.

    Sequences whose posteriors coincide are merged: extending them by the same
    symbol keeps the posteriors equal, so only the summed output probability
    matters downstream.
    """
    xs = np.arange(2**n, dtype=np.int64)
    posts = np.full((1, xs.size), 2.0**-n)
    masses = np.ones(1)
    for subset in copies:
        qu = kernel.table[edge_input(xs, subset)]
        work.charge(posts.shape[0] * xs.size * kernel.q)
        joint = posts[:, :, None] * qu[None, :, :]
        pred = joint.sum(axis=1)
        rows, syms = np.nonzero(pred > 0)
        posts = joint[rows, :, syms] / pred[rows, syms][:, None]
        masses = masses[rows] * pred[rows, syms]
        _, first, inverse = np.unique(
            np.round(posts, 12), axis=0, return_index=True, return_inverse=True
        )
        masses = np.bincount(inverse.ravel(), weights=masses)
        posts = posts[first]
    return masses, posts


def _local_copies(g: Hypergraph, vertices: Sequence[int]) -> list[tuple[int, ...]]:
    index = {v: i for i, v in enumerate(vertices)}
    return [tuple(index[v] for v in s) for s in g.copies() if s[0] in index]


def exact_conditional_entropy(
    g: Hypergraph, kernel: Kernel, budget: int = DEFAULT_BUDGET
) -> EntropyEstimate:
    """H_g(X | Y) exactly, by enumerating every reachable observation vector.

    The posterior factorises over connected components, so each component is
    enumerated on its own; isolated vertices contribute one bit each.
    ``budget`` caps the number of (posterior row, assignment, symbol)
    evaluations.
    """
    _check_pair(g, kernel)
    work = _Work(budget)
    comps, isolated = components(g)
    total = float(isolated)
    for comp in comps:
        masses, posts = _frontier(len(comp), _local_copies(g, comp), kernel, work)
        total += float(masses @ _row_entropies(posts))
    return EntropyEstimate(total, 0.0, 0, "exact-y-enumeration")


def exact_output_entropy(g: Hypergraph, kernel: Kernel, budget: int = DEFAULT_BUDGET) -> float:
    """H_g(Y) = -sum_y S_g(y) log2 S_g(y), enumerating every observation vector separately."""
    _check_pair(g, kernel)
    copies = list(g.copies())
    xs = np.arange(2**g.n, dtype=np.int64)
    work = _Work(budget)
    # rows: likelihood P(y_prefix | x) for every prefix with S > 0
    like = np.ones((1, xs.size))
    for subset in copies:
        work.charge(like.shape[0] * xs.size * kernel.q)
        qu = kernel.table[edge_input(xs, subset)]
        like = (like[:, :, None] * qu[None, :, :]).transpose(0, 2, 1).reshape(-1, xs.size)
        like = like[like.sum(axis=1) > 0]
    s = like.sum(axis=1) / xs.size
    return _entropy_bits(s)


# ---------------------------------------------------------------------------
# Monte Carlo


def _root_seed(rng) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**63))
    return int(rng)


def _mc_sample(g: Hypergraph, kernel: Kernel, seed: int, index: int, method: str) -> float:
    rng = stream(seed, "mc", index)
    inst = sample_instance(g, kernel, rng)
    if method == "csp-count":
        return float(np.log2(count_solutions(g, kernel, inst.y)))
    post = posterior(g, kernel, inst.y)
    if method == "mc-posterior":
        return post.entropy()
    return float(-np.log2(post.weights[inst.x]))


def mc_conditional_entropy(
    g: Hypergraph,
    kernel: Kernel,
    nsamples: int,
    rng,
    threads: int = 1,
    method: str = "auto",
) -> EntropyEstimate:
    """Monte Carlo estimate of H_g(X | Y) from i.i.d. planted draws (x, y).

    ``method`` is ``"mc-joint"`` (average of -log2 R(x|y)), ``"csp-count"``
    (average of log2 Z(y), CSP kernels only), ``"mc-posterior"`` (average
    posterior entropy) or ``"auto"`` (csp-count for CSP kernels, else
    mc-joint).  ``rng`` is a seed or a generator used to draw one.
    """
    _check_pair(g, kernel)
    if g.n > MAX_POSTERIOR_N:
        raise Infeasible(f"n={g.n} exceeds the enumeration limit {MAX_POSTERIOR_N}")
    if method == "auto":
        method = "csp-count" if kernel.is_csp else "mc-joint"
    if method not in ("mc-joint", "csp-count", "mc-posterior"):
        raise EngineError(f"unknown method {method!r}")
    if nsamples < 1:
        raise EngineError("nsamples must be positive")
    seed = _root_seed(rng)
    values = parallel_map(lambda i: _mc_sample(g, kernel, seed, i, method), range(nsamples), threads)
    mean, err = mean_and_stderr(values)
    return EntropyEstimate(mean, err, nsamples, method)


def graph_entropy(
    g: Hypergraph,
    kernel: Kernel,
    seed: int,
    inner_samples: int = 64,
    budget: int = DEFAULT_BUDGET,
) -> EntropyEstimate:
    """Exact H_g(X|Y) when enumeration fits the budget, Monte Carlo otherwise."""
    try:
        return exact_conditional_entropy(g, kernel, budget)
    except BudgetExceeded:
        method = "csp-count" if kernel.is_csp else "mc-posterior"
        return mc_conditional_entropy(g, kernel, inner_samples, seed, method=method)


def ensemble_values(
    ensemble: EnsembleParams | IntensityMap,
    kernel: Kernel,
    graph_samples: int,
    seed: int,
    inner_samples: int = 64,
    threads: int = 1,
    budget: int = DEFAULT_BUDGET,
) -> list[float]:
    """Per-graph entropy estimates for ``graph_samples`` independent graph draws."""

    def one(i):
        g = draw_graph(ensemble, stream(seed, "graph", i))
        return graph_entropy(g, kernel, stream_seed(seed, "inner", i), inner_samples, budget).value

    return parallel_map(one, range(graph_samples), threads)


def draw_graph(ensemble: EnsembleParams | IntensityMap, rng: np.random.Generator) -> Hypergraph:
    if isinstance(ensemble, IntensityMap):
        return sample_inhomogeneous(ensemble, rng)
    return sample_poisson(ensemble, rng)


def stream_seed(seed: int, *key) -> int:
    return int(stream(seed, *key).integers(0, 2**63))


def ensemble_entropy(
    params: EnsembleParams | IntensityMap,
    kernel: Kernel,
    graph_samples: int,
    inner_samples: int,
    rng,
    threads: int = 1,
    budget: int = DEFAULT_BUDGET,
) -> EntropyEstimate:
    """Two-stage estimate of E_G H_G(X|Y).

    Each sampled graph gets an exact entropy when it fits ``budget`` and an
    ``inner_samples`` Monte Carlo estimate otherwise.  The standard error is
    the spread of the per-graph values over sqrt(graph_samples), which
    already includes the inner-sampling noise.
    """
    if graph_samples < 1:
        raise EngineError("graph_samples must be positive")
    if params.k != kernel.k:
        raise EngineError("ensemble arity does not match kernel arity")
    values = ensemble_values(params, kernel, graph_samples, _root_seed(rng), inner_samples, threads, budget)
    mean, err = mean_and_stderr(values)
    return EntropyEstimate(mean, err, graph_samples, "ensemble")


def mutual_information(est: EntropyEstimate, n: int) -> EntropyEstimate:
    """I(X;Y) = n - H(X|Y), with the standard error carried over."""
    return EntropyEstimate(n - est.value, est.stderr, est.nsamples, est.method)


# ---------------------------------------------------------------------------
# derivative identity


def _probe_block(g: Hypergraph, subset: Sequence[int]) -> tuple[list[int], list[tuple[int, ...]]]:
    comps, _ = components(g)
    block = set(subset)
    for comp in comps:
        if block.intersection(comp):
            block.update(comp)
    vertices = sorted(block)
    return vertices, _local_copies(g, vertices)


def predictive_entropy(
    g: Hypergraph, kernel: Kernel, subset: Sequence[int], budget: int = DEFAULT_BUDGET
) -> float:
    """H(Y_I | Y) for one fresh observation on ``subset``, via predictive distributions."""
    vertices, copies = _probe_block(g, subset)
    index = {v: i for i, v in enumerate(vertices)}
    local = tuple(index[v] for v in subset)
    masses, posts = _frontier(len(vertices), copies, kernel, _Work(budget))
    xs = np.arange(2 ** len(vertices), dtype=np.int64)
    pred = posts @ kernel.table[edge_input(xs, local)]
    return float(masses @ _row_entropies(pred))


def edge_derivative_check(
    g: Hypergraph,
    kernel: Kernel,
    subset: Iterable[int],
    rng=None,
    nsamples: int = 1000,
    budget: int = DEFAULT_BUDGET,
) -> tuple[float, float]:
    """Both sides of dH/d eps_I = -I(Y_I; X_I | Y).

    ``lhs`` is H(X | Y, Y_I) - H(X | Y) with Y_I one extra observation on the
    subset; ``rhs`` is -(H(Y_I | Y) - H(Q)).  Without ``rng`` both sides are
    exact; with ``rng`` both are Monte Carlo averages over planted draws.
    """
    _check_pair(g, kernel)
    subset = tuple(sorted(int(v) for v in subset))
    Hypergraph(g.n, g.k, ((subset, 1),))
    if rng is None:
        lhs = exact_conditional_entropy(g.add_copy(subset), kernel, budget).value
        lhs -= exact_conditional_entropy(g, kernel, budget).value
        rhs = -(predictive_entropy(g, kernel, subset, budget) - kernel_entropy(kernel))
        return lhs, rhs
    seed = _root_seed(rng)
    bigger = g.add_copy(subset)
    xs = np.arange(2**g.n, dtype=np.int64)
    q_probe = kernel.table[edge_input(xs, subset)]
    lhs_vals, rhs_vals = [], []
    for i in range(nsamples):
        r = stream(seed, "derivative", i)
        inst = sample_instance(g, kernel, r)
        extra = draw_observations(Hypergraph(g.n, g.k, ((subset, 1),)), kernel, inst.x, r)[0][0]
        before = posterior(g, kernel, inst.y)
        after_y = _insert_observation(g, bigger, inst.y, subset, extra)
        after = posterior(bigger, kernel, after_y)
        lhs_vals.append(np.log2(before.weights[inst.x]) - np.log2(after.weights[inst.x]))
        pz = float(before.weights @ q_probe[:, extra])
        rhs_vals.append(np.log2(pz) - np.log2(kernel.table[edge_input(inst.x, subset), extra]))
    return float(np.mean(lhs_vals)), float(np.mean(rhs_vals))


def _insert_observation(g: Hypergraph, bigger: Hypergraph, y, subset, symbol: int):
    by_edge = {s: list(ys) for (s, _), ys in zip(g.edges, y)}
    by_edge.setdefault(subset, []).append(symbol)
    return tuple(tuple(by_edge[s]) for s, _ in bigger.edges)
