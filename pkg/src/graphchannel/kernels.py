"""Probability kernels from {0,1}^k to a finite output alphabet.

A kernel row is indexed by the k-bit integer encoding of the input tuple,
bit ``i`` holding coordinate ``i`` (coordinate 0 is the least significant
bit).  k-SAT and NAE-SAT outputs live in {0,1}^k and use the same encoding.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

ATOL = 1e-12
CSP_TAGS = ("ksat", "nae", "xor")
TAGS = CSP_TAGS + ("sbm", "encoded", "custom")


class KernelError(ValueError):
    pass


class NotBiso(KernelError):
    """Raised when a binary-input channel has no symmetric column decomposition."""


def parity(u: int | np.ndarray):
    """Parity of the set bits of ``u`` (scalar or integer array)."""
    u = np.asarray(u, dtype=np.int64)
    out = np.zeros_like(u)
    while np.any(u):
        out ^= u & 1
        u = u >> 1
    return out if out.ndim else int(out)


@dataclass(frozen=True, eq=False)
class Kernel:
    k: int
    q: int
    table: np.ndarray
    tag: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        if self.k < 1 or self.q < 1:
            raise KernelError("k and q must be positive")
        if self.tag not in TAGS:
            raise KernelError(f"unknown kernel tag {self.tag!r}")
        if table.shape != (2**self.k, self.q):
            raise KernelError(f"table shape {table.shape} != {(2**self.k, self.q)}")
        if np.any(table < 0):
            raise KernelError("negative kernel entry")
        if np.any(np.abs(table.sum(axis=1) - 1.0) > ATOL):
            raise KernelError("kernel rows must sum to 1")
        if self.tag in CSP_TAGS:
            nonzero = table > 0
            sizes = nonzero.sum(axis=1)
            if np.any(sizes != sizes[0]):
                raise KernelError("CSP kernel rows must have equal authorized-set sizes")
            if np.any(np.abs(table[nonzero] - 1.0 / sizes[0]) > ATOL):
                raise KernelError("CSP kernel rows must be uniform on the authorized set")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def is_csp(self) -> bool:
        return self.tag in CSP_TAGS

    @property
    def authorized_size(self) -> int:
        if not self.is_csp:
            raise KernelError(f"{self.tag} kernel is not a CSP kernel")
        return int((self.table[0] > 0).sum())

    def __eq__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        return (self.k, self.q, self.tag) == (other.k, other.q, other.tag) and np.array_equal(
            self.table, other.table
        )

    def __hash__(self):
        return hash((self.k, self.q, self.tag, self.table.tobytes()))

    def to_dict(self) -> dict:
        out = {"tag": self.tag, "k": self.k, "q": self.q, "rows": self.table.tolist()}
        if self.params:
            out["params"] = dict(self.params)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Kernel":
        return cls(
            k=int(data["k"]),
            q=int(data["q"]),
            table=np.asarray(data["rows"], dtype=float),
            tag=data.get("tag", "custom"),
            params=dict(data.get("params", {})),
        )


def make_ksat_kernel(k: int) -> Kernel:
    """Planted k-SAT: uniform over all clause patterns except the complement of u."""
    if k < 1:
        raise KernelError("k-SAT needs k >= 1")
    size = 2**k
    u = np.arange(size)
    table = np.full((size, size), 1.0 / (size - 1)) if size > 2 else np.ones((size, size))
    table[u, u ^ (size - 1)] = 0.0
    return Kernel(k, size, table, "ksat", {"k": k})


def make_nae_kernel(k: int) -> Kernel:
    if k < 2:
        raise KernelError("NAE-SAT needs k >= 2")
    size = 2**k
    u = np.arange(size)
    table = np.full((size, size), 1.0 / (size - 2))
    table[u, u] = 0.0
    table[u, u ^ (size - 1)] = 0.0
    return Kernel(k, size, table, "nae", {"k": k})


def make_xor_kernel(k: int) -> Kernel:
    if k < 1:
        raise KernelError("XOR-SAT needs k >= 1")
    p = parity(np.arange(2**k))
    table = np.zeros((2**k, 2))
    table[np.arange(2**k), p] = 1.0
    return Kernel(k, 2, table, "xor", {"k": k})


@dataclass(frozen=True)
class SbmParams:
    a: float
    b: float
    gamma: float

    def __post_init__(self):
        if min(self.a, self.b, self.gamma) <= 0:
            raise KernelError("SBM intensities and scale must be positive")
        if self.a > self.gamma + ATOL or self.b > self.gamma + ATOL:
            raise KernelError(f"need gamma >= max(a, b); got a={self.a}, b={self.b}, gamma={self.gamma}")

    @property
    def s(self) -> float:
        return (self.a + self.b) / self.gamma

    @property
    def d(self) -> float:
        return (self.a - self.b) / self.gamma


def make_sbm_kernel(p: SbmParams) -> Kernel:
    """Two-community kernel: emits 1 w.p. a/gamma on equal labels, b/gamma otherwise."""
    one = np.array([p.a, p.b, p.b, p.a]) / p.gamma  # rows 00, 10, 01, 11
    table = np.column_stack([1.0 - one, one])
    return Kernel(2, 2, table, "sbm", {"a": p.a, "b": p.b, "gamma": p.gamma})


@dataclass(frozen=True)
class BisoChannel:
    """Binary-input symmetric-output channel as symmetric column pairs plus constant columns.

    A pair ``(c, d)`` contributes the columns ``(c, d)`` and ``(d, c)`` of the
    2 x q transition matrix (row 0 is input 0).  A constant ``e`` contributes
    the column ``(e, e)``.
    """

    pair_params: tuple[tuple[float, float], ...] = ()
    const_cols: tuple[float, ...] = ()

    def __post_init__(self):
        pairs = tuple((float(c), float(d)) for c, d in self.pair_params)
        consts = tuple(float(e) for e in self.const_cols)
        object.__setattr__(self, "pair_params", pairs)
        object.__setattr__(self, "const_cols", consts)
        if any(v < 0 for pair in pairs for v in pair) or any(e < 0 for e in consts):
            raise NotBiso("negative transition probability")
        total = sum(c + d for c, d in pairs) + sum(consts)
        if not pairs and not consts or abs(total - 1.0) > ATOL:
            raise NotBiso(f"rows sum to {total}, not 1")

    @property
    def q(self) -> int:
        return 2 * len(self.pair_params) + len(self.const_cols)

    @property
    def matrix(self) -> np.ndarray:
        cols = []
        for c, d in self.pair_params:
            cols += [(c, d), (d, c)]
        cols += [(e, e) for e in self.const_cols]
        return np.array(cols, dtype=float).T

    def _binary(self) -> np.ndarray:
        if self.q != 2:
            raise KernelError("s and d are defined for two-output channels only")
        return self.matrix

    @property
    def s(self) -> float:
        w = self._binary()
        return float(w[0, 1] + w[1, 1])

    @property
    def d(self) -> float:
        w = self._binary()
        return float(w[0, 1] - w[1, 1])

    def entropy(self) -> float:
        """Conditional entropy H(W) in bits (identical for both inputs)."""
        row = self.matrix[0]
        row = row[row > 0]
        return float(-(row * np.log2(row)).sum())


def bsc(p: float) -> BisoChannel:
    if not 0 <= p <= 1:
        raise KernelError("flip probability must lie in [0, 1]")
    return BisoChannel(((1.0 - p, p),))


def bec(eps: float) -> BisoChannel:
    if not 0 <= eps <= 1:
        raise KernelError("erasure probability must lie in [0, 1]")
    return BisoChannel(((1.0 - eps, 0.0),), (eps,))


def validate_biso(matrix: Sequence[Sequence[float]]) -> BisoChannel:
    """Decompose a 2 x q stochastic matrix into symmetric pairs and constant columns.

    Constant columns are taken first; the remaining columns are paired
    greedily, column ``(c, d)`` with the first unused column equal to
    ``(d, c)`` within 1e-12.  Raises :class:`NotBiso` when that fails.
    """
    w = np.asarray(matrix, dtype=float)
    if w.ndim != 2 or w.shape[0] != 2:
        raise NotBiso("expected a 2 x q matrix")
    if np.any(w < 0) or np.any(np.abs(w.sum(axis=1) - 1.0) > ATOL):
        raise NotBiso("matrix is not row-stochastic")
    consts = []
    pending = []
    for c, d in w.T:
        if abs(c - d) <= ATOL:
            consts.append(c)
        else:
            pending.append((c, d))
    pairs = []
    while pending:
        c, d = pending.pop(0)
        for j, (c2, d2) in enumerate(pending):
            if abs(c2 - d) <= ATOL and abs(d2 - c) <= ATOL:
                pending.pop(j)
                pairs.append((c, d))
                break
        else:
            raise NotBiso(f"column ({c}, {d}) has no symmetric partner")
    return BisoChannel(tuple(pairs), tuple(consts))


def make_encoded_kernel(w: BisoChannel, k: int) -> Kernel:
    """Q(z | u) = W(z | parity(u))."""
    if not isinstance(w, BisoChannel):
        w = validate_biso(w)
    if k < 1:
        raise KernelError("encoded kernel needs k >= 1")
    mat = w.matrix
    table = mat[parity(np.arange(2**k))]
    params = {"k": k, "pairs": [list(p) for p in w.pair_params], "consts": list(w.const_cols)}
    return Kernel(k, w.q, table, "encoded", params)


def kernel_entropy(kernel: Kernel) -> float:
    """Average row entropy 2^-k * sum_u H(Q(.|u)) in bits."""
    t = kernel.table
    safe = np.where(t > 0, t, 1.0)
    return float(-(t * np.log2(safe)).sum() / 2**kernel.k)


def parse_kernel_spec(spec: str) -> Kernel:
    """Build a kernel from a short descriptor.

    Accepted forms: ``ksat:K``, ``nae:K``, ``xor:K``, ``sbm:A:B:GAMMA``,
    ``bsc:P:K`` and ``bec:EPS:K``.
    """
    parts = spec.strip().split(":")
    name, args = parts[0].lower(), parts[1:]
    try:
        if name in ("ksat", "sat") and len(args) == 1:
            return make_ksat_kernel(int(args[0]))
        if name == "nae" and len(args) == 1:
            return make_nae_kernel(int(args[0]))
        if name == "xor" and len(args) == 1:
            return make_xor_kernel(int(args[0]))
        if name == "sbm" and len(args) == 3:
            return make_sbm_kernel(SbmParams(*map(float, args)))
        if name == "bsc" and len(args) == 2:
            return make_encoded_kernel(bsc(float(args[0])), int(args[1]))
        if name == "bec" and len(args) == 2:
            return make_encoded_kernel(bec(float(args[0])), int(args[1]))
    except ValueError as exc:
        raise KernelError(f"bad kernel spec {spec!r}: {exc}") from exc
    raise KernelError(f"unrecognised kernel spec {spec!r}")
