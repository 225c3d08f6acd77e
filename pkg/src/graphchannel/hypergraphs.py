"""Random k-uniform multi-hypergraphs: Poisson, Erdos-Renyi and inhomogeneous ensembles.

Edges are sorted k-tuples of distinct vertices.  Repeated draws of the same
subset are folded into a multiplicity, so a Poisson hypergraph with ``M``
edge slots is stored as ``(subset, count)`` pairs.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from math import comb
from typing import Iterable, Iterator, Mapping

import numpy as np

CLASS_NAMES = ("all", "within1", "within2", "crossing")


class HypergraphError(ValueError):
    pass


@dataclass(frozen=True)
class Hypergraph:
    n: int
    k: int
    edges: tuple[tuple[tuple[int, ...], int], ...] = ()

    def __post_init__(self):
        if self.k < 1 or self.n < self.k:
            raise HypergraphError(f"need n >= k >= 1, got n={self.n}, k={self.k}")
        norm = []
        seen = set()
        for subset, mult in self.edges:
            subset = tuple(int(v) for v in subset)
            mult = int(mult)
            if len(subset) != self.k:
                raise HypergraphError(f"edge {subset} does not have {self.k} vertices")
            if any(b <= a for a, b in zip(subset, subset[1:])):
                raise HypergraphError(f"edge {subset} is not strictly increasing")
            if subset[0] < 0 or subset[-1] >= self.n:
                raise HypergraphError(f"edge {subset} out of range for n={self.n}")
            if mult < 1:
                raise HypergraphError("multiplicities must be positive")
            if subset in seen:
                raise HypergraphError(f"duplicate edge {subset}")
            seen.add(subset)
            norm.append((subset, mult))
        object.__setattr__(self, "edges", tuple(norm))

    @classmethod
    def from_slots(cls, n: int, k: int, slots: Iterable[Iterable[int]]) -> "Hypergraph":
        """Aggregate a list of (possibly repeated) edge slots into multiplicities."""
        counts = Counter(tuple(sorted(int(v) for v in s)) for s in slots)
        return cls(n, k, tuple(sorted(counts.items())))

    @classmethod
    def empty(cls, n: int, k: int) -> "Hypergraph":
        return cls(n, k, ())

    @property
    def n_copies(self) -> int:
        """Total number of edge copies M (sum of multiplicities)."""
        return sum(m for _, m in self.edges)

    def copies(self) -> Iterator[tuple[int, ...]]:
        for subset, mult in self.edges:
            for _ in range(mult):
                yield subset

    def add_copy(self, subset: Iterable[int]) -> "Hypergraph":
        return Hypergraph.from_slots(self.n, self.k, list(self.copies()) + [tuple(subset)])

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "edges": [[list(s), m] for s, m in self.edges]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Hypergraph":
        edges = tuple((tuple(s), int(m)) for s, m in data.get("edges", []))
        return cls(int(data["n"]), int(data["k"]), edges)


@dataclass(frozen=True)
class EnsembleParams:
    n: int
    k: int
    alpha: float

    def __post_init__(self):
        if self.k < 1 or self.n < self.k:
            raise HypergraphError(f"need n >= k >= 1, got n={self.n}, k={self.k}")
        if self.alpha < 0:
            raise HypergraphError("edge density must be nonnegative")

    @property
    def n_subsets(self) -> int:
        return comb(self.n, self.k)

    @property
    def p(self) -> float:
        """Per-subset Poisson intensity alpha * n / C(n, k)."""
        return self.alpha * self.n / self.n_subsets


def unrank_subsets(ranks: np.ndarray, n: int, k: int, offset: int = 0) -> np.ndarray:
    """Map colexicographic ranks in [0, C(n,k)) to sorted k-subsets of [offset, offset+n)."""
    ranks = np.asarray(ranks, dtype=np.int64).copy()
    out = np.empty(ranks.shape + (k,), dtype=np.int64)
    for j in range(k, 0, -1):
        table = np.array([comb(c, j) for c in range(n)], dtype=np.int64)
        # largest c with C(c, j) <= rank; table is nondecreasing in c
        c = np.searchsorted(table, ranks, side="right") - 1
        out[..., j - 1] = c
        ranks -= table[c]
    return out + offset


def _uniform_subsets(rng: np.random.Generator, count: int, n: int, k: int, offset: int = 0) -> np.ndarray:
    if count == 0:
        return np.empty((0, k), dtype=np.int64)
    total = comb(n, k)
    if total >= 2**62:
        raise HypergraphError("subset space too large for rank sampling")
    return unrank_subsets(rng.integers(0, total, size=count), n, k, offset)


def sample_poisson(params: EnsembleParams, rng: np.random.Generator) -> Hypergraph:
    """Draw from P_k(alpha, n): M ~ Poisson(alpha n) slots, each a uniform k-subset."""
    m = int(rng.poisson(params.alpha * params.n))
    slots = _uniform_subsets(rng, m, params.n, params.k)
    return Hypergraph.from_slots(params.n, params.k, slots.tolist())


def sample_er(params: EnsembleParams, rng: np.random.Generator) -> Hypergraph:
    """Simple hypergraph with every k-subset present independently w.p. p."""
    p = params.p
    if p > 1.0:
        raise HypergraphError(f"edge probability {p} exceeds 1")
    total = params.n_subsets
    m = int(rng.binomial(total, p))
    ranks = np.sort(rng.choice(total, size=m, replace=False)) if m else np.empty(0, dtype=np.int64)
    slots = unrank_subsets(ranks, params.n, params.k)
    return Hypergraph.from_slots(params.n, params.k, slots.tolist())


def edge_classes(n: int, k: int, n1: int, n2: int) -> tuple[int, int, int, int]:
    """Return (m, m1, m2, crossing) for the partition [0, n1) | [n1, n)."""
    if n1 + n2 != n:
        raise HypergraphError("partition sizes must add up to n")
    if n1 < k or n2 < k:
        raise HypergraphError(f"both parts need at least k={k} vertices")
    m, m1, m2 = comb(n, k), comb(n1, k), comb(n2, k)
    return m, m1, m2, m - m1 - m2


@dataclass(frozen=True)
class IntensityMap:
    """Edge intensities stored per class instead of per subset.

    ``rates`` maps class names to per-subset Poisson rates.  Either the single
    class ``"all"`` is used, or the partition classes ``"within1"``,
    ``"within2"`` and ``"crossing"`` for the split [0, n1) | [n1, n).  An
    explicit ``sparse`` map gives rates for individual subsets; every subset it
    does not list has rate 0.
    """

    n: int
    k: int
    rates: tuple[tuple[str, float], ...] = ()
    n1: int | None = None
    sparse: tuple[tuple[tuple[int, ...], float], ...] = ()

    def __post_init__(self):
        rates = dict(self.rates)
        if self.sparse and rates:
            raise HypergraphError("use either class rates or an explicit sparse list")
        if any(r < 0 for r in rates.values()) or any(r < 0 for _, r in self.sparse):
            raise HypergraphError("rates must be nonnegative")
        if set(rates) - set(CLASS_NAMES):
            raise HypergraphError(f"unknown classes {set(rates) - set(CLASS_NAMES)}")
        if "all" in rates and len(rates) > 1:
            raise HypergraphError("'all' cannot be combined with partition classes")
        if rates and "all" not in rates:
            if self.n1 is None:
                raise HypergraphError("partition classes need n1")
            if set(rates) != {"within1", "within2", "crossing"}:
                raise HypergraphError("partition classes must all be given")
            edge_classes(self.n, self.k, self.n1, self.n - self.n1)
        for subset, _ in self.sparse:
            Hypergraph(self.n, self.k, ((tuple(subset), 1),))
        object.__setattr__(self, "rates", tuple(sorted(rates.items())))

    @classmethod
    def constant(cls, n: int, k: int, rate: float) -> "IntensityMap":
        return cls(n, k, (("all", rate),))

    def class_sizes(self) -> dict[str, int]:
        if dict(self.rates).keys() == {"all"}:
            return {"all": comb(self.n, self.k)}
        m, m1, m2, cross = edge_classes(self.n, self.k, self.n1, self.n - self.n1)
        return {"within1": m1, "within2": m2, "crossing": cross}

    def class_masses(self) -> dict[str, float]:
        if self.sparse:
            return {}
        sizes = self.class_sizes()
        return {name: rate * sizes[name] for name, rate in self.rates}

    def total_mass(self) -> float:
        if self.sparse:
            return float(sum(r for _, r in self.sparse))
        return float(sum(self.class_masses().values()))

    def rate_of(self, subset: Iterable[int]) -> float:
        subset = tuple(sorted(subset))
        if self.sparse:
            return dict(self.sparse).get(subset, 0.0)
        rates = dict(self.rates)
        if not rates:
            return 0.0
        if "all" in rates:
            return rates["all"]
        return rates[classify(subset, self.n1)]


def classify(subset: Iterable[int], n1: int) -> str:
    subset = tuple(subset)
    if all(v < n1 for v in subset):
        return "within1"
    if all(v >= n1 for v in subset):
        return "within2"
    return "crossing"


def sample_class_subsets(
    rng: np.random.Generator, name: str, count: int, n: int, k: int, n1: int | None
) -> np.ndarray:
    """Uniform k-subsets from one edge class."""
    if name == "all":
        return _uniform_subsets(rng, count, n, k)
    if name == "within1":
        return _uniform_subsets(rng, count, n1, k)
    if name == "within2":
        return _uniform_subsets(rng, count, n - n1, k, offset=n1)
    if name == "crossing":
        out = np.empty((0, k), dtype=np.int64)
        while len(out) < count:
            cand = _uniform_subsets(rng, 2 * (count - len(out)) + 4, n, k)
            keep = (cand.min(axis=1) < n1) & (cand.max(axis=1) >= n1)
            out = np.concatenate([out, cand[keep]])
        return out[:count]
    raise HypergraphError(f"unknown class {name!r}")


def sample_inhomogeneous(eps: IntensityMap, rng: np.random.Generator) -> Hypergraph:
    """Draw from P_k(eps, n): M ~ Poisson(total mass), slots split over classes by mass."""
    total = eps.total_mass()
    m = int(rng.poisson(total)) if total > 0 else 0
    if m == 0:
        return Hypergraph.empty(eps.n, eps.k)
    if eps.sparse:
        subsets = [s for s, _ in eps.sparse]
        weights = np.array([r for _, r in eps.sparse]) / total
        picks = rng.choice(len(subsets), size=m, p=weights)
        return Hypergraph.from_slots(eps.n, eps.k, [subsets[i] for i in picks])
    masses = eps.class_masses()
    names = list(masses)
    counts = rng.multinomial(m, np.array([masses[c] for c in names]) / total)
    slots = []
    for name, count in zip(names, counts):
        slots.extend(sample_class_subsets(rng, name, int(count), eps.n, eps.k, eps.n1).tolist())
    return Hypergraph.from_slots(eps.n, eps.k, slots)


@dataclass(frozen=True)
class CanonicalPath:
    """Linear interpolation from P_k(alpha, n) to P_k(alpha, n1) x P_k(alpha, n2)."""

    n1: int
    n2: int
    k: int
    alpha: float

    def __post_init__(self):
        edge_classes(self.n, self.k, self.n1, self.n2)
        if self.alpha < 0:
            raise HypergraphError("edge density must be nonnegative")

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    def endpoint_rates(self) -> dict[str, tuple[float, float]]:
        """Per-class (rate at t=0, rate at t=1)."""
        m, m1, m2, _ = edge_classes(self.n, self.k, self.n1, self.n2)
        start = self.alpha * self.n / m
        return {
            "within1": (start, self.alpha * self.n1 / m1),
            "within2": (start, self.alpha * self.n2 / m2),
            "crossing": (start, 0.0),
        }

    def at(self, t: float) -> IntensityMap:
        return path_intensity(self, t)


def path_intensity(path: CanonicalPath, t: float) -> IntensityMap:
    if not 0.0 <= t <= 1.0:
        raise HypergraphError(f"t={t} outside [0, 1]")
    rates = {c: (1.0 - t) * r0 + t * r1 for c, (r0, r1) in path.endpoint_rates().items()}
    return IntensityMap(path.n, path.k, tuple(rates.items()), n1=path.n1)


def sample_path_family(
    path: CanonicalPath, ts: Iterable[float], rng: np.random.Generator
) -> list[Hypergraph]:
    """Coupled draws of P_k(eps(t), n) for several t from one marked Poisson process.

    Each class is sampled once at its largest rate along the path; a point
    with uniform mark ``u`` belongs to the graph at time ``t`` iff
    ``u * max_rate < rate(t)``.  Every returned graph has the exact law of
    :func:`sample_inhomogeneous` at its own ``t``.
    """
    ts = list(ts)
    for t in ts:
        if not 0.0 <= t <= 1.0:
            raise HypergraphError(f"t={t} outside [0, 1]")
    sizes = path.at(0.0).class_sizes()
    slots: list[list[tuple[int, ...]]] = [[] for _ in ts]
    for name, (r0, r1) in sorted(path.endpoint_rates().items()):
        top = max(r0, r1)
        if top == 0:
            continue
        count = int(rng.poisson(top * sizes[name]))
        subsets = sample_class_subsets(rng, name, count, path.n, path.k, path.n1)
        marks = rng.random(count)
        for j, t in enumerate(ts):
            keep = marks * top < (1.0 - t) * r0 + t * r1
            slots[j].extend(map(tuple, subsets[keep].tolist()))
    return [Hypergraph.from_slots(path.n, path.k, s) for s in slots]
