"""The replica functional Gamma_l, its closed forms, Walsh spectra and convexity audits.

A distribution on {0,1}^l is a length-2^l vector whose index bit ``r`` is the
value of replica ``r``.  Every Gamma evaluator accepts a batch with shape
``(..., 2^l)`` and returns shape ``(...)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .kernels import ATOL, BisoChannel, Kernel, validate_biso
from .rng import as_generator

GammaFn = Callable[[np.ndarray], np.ndarray]

MAX_BRUTE_KL = 20


class GammaError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EmpiricalDist:
    l: int
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (2**self.l,):
            raise GammaError(f"expected {2**self.l} probabilities, got shape {p.shape}")
        if np.any(p < 0) or abs(p.sum() - 1.0) > ATOL:
            raise GammaError("not a probability vector")
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, l: int) -> "EmpiricalDist":
        return cls(l, np.full(2**l, 2.0**-l))

    @classmethod
    def point(cls, l: int, index: int) -> "EmpiricalDist":
        p = np.zeros(2**l)
        p[index] = 1.0
        return cls(l, p)


def _as_batch(nu, l: int) -> np.ndarray:
    if isinstance(nu, EmpiricalDist):
        nu = nu.probs
    arr = np.asarray(nu, dtype=float)
    if arr.shape[-1:] != (2**l,):
        raise GammaError(f"last axis must have length 2^l = {2**l}")
    return arr


def _popcount(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.int64)
    out = np.zeros_like(w)
    while np.any(w):
        out += w & 1
        w = w >> 1
    return out


# ---------------------------------------------------------------------------
# Walsh-Hadamard


def walsh_transform(f) -> np.ndarray:
    """Unnormalised Walsh-Hadamard transform along the last axis.

    ``F(f)(w) = sum_x (-1)^{x.w} f(x)``; applying it twice multiplies by 2^l.
    """
    a = np.array(f, dtype=float)
    size = a.shape[-1]
    if size < 1 or size & (size - 1):
        raise GammaError(f"length {size} is not a power of two")
    lead = a.shape[:-1]
    h = 1
    while h < size:
        a = a.reshape(lead + (size // (2 * h), 2, h))
        lo, hi = a[..., 0, :], a[..., 1, :]
        a = np.stack([lo + hi, lo - hi], axis=-2)
        h *= 2
    return a.reshape(lead + (size,))


def convolution_power(nu, k: int) -> np.ndarray:
    """k-fold XOR convolution of ``nu`` with itself, via the Walsh domain."""
    if k < 1:
        raise GammaError("k must be positive")
    nu = np.asarray(nu, dtype=float)
    return walsh_transform(walsh_transform(nu) ** k) / nu.shape[-1]


# ---------------------------------------------------------------------------
# Gamma


def _tuple_brackets(kernel: Kernel, l: int) -> np.ndarray:
    """sum_z prod_r (1 - Q(z|u_r)) for every l-tuple, tuple index t = sum_r u_r << (k r)."""
    comp = 1.0 - kernel.table
    acc = comp
    for _ in range(l - 1):
        acc = (comp[:, None, :] * acc[None, :, :]).reshape(-1, kernel.q)
    return acc.sum(axis=1)


def gamma_bruteforce(kernel: Kernel, l: int, nu) -> np.ndarray:
    """Gamma_l(nu) by direct summation over all l-tuples of kernel inputs."""
    k = kernel.k
    if l < 1:
        raise GammaError("l must be positive")
    if k * l > MAX_BRUTE_KL:
        raise GammaError(f"k*l={k * l} exceeds the brute-force limit {MAX_BRUTE_KL}")
    nu = _as_batch(nu, l)
    brackets = _tuple_brackets(kernel, l)
    t = np.arange(2 ** (k * l), dtype=np.int64)
    weight = np.ones(nu.shape[:-1] + t.shape)
    for i in range(k):
        col = np.zeros_like(t)
        for r in range(l):
            col |= ((t >> (k * r + i)) & 1) << r
        weight = weight * nu[..., col]
    return weight @ brackets / kernel.q


def _diagonal_mass(nu: np.ndarray, l: int, subset: int) -> np.ndarray:
    """Mass of configurations constant on the replicas in ``subset``."""
    x = np.arange(2**l, dtype=np.int64)
    on = x & subset
    return nu[..., (on == 0) | (on == subset)].sum(axis=-1)


def gamma_ksat_closed(k: int, l: int, nu) -> np.ndarray:
    """Gamma_l for planted k-SAT in closed form.

    Writing 1 - Q(z|u) = c + e * 1[z = complement(u)] and expanding the
    replica product gives

        Gamma_l = c^l + 2^-k * sum_{S nonempty} c^(l-|S|) e^|S| D_S^k,

    where D_S is the mass of configurations constant on the replicas in S.
    The term S = {1..l} is :func:`ksat_diagonal_term`.
    """
    if k < 1 or l < 1:
        raise GammaError("k and l must be positive")
    nu = _as_batch(nu, l)
    size = 2**k
    c, e = (size - 2) / (size - 1), 1.0 / (size - 1)
    total = np.full(nu.shape[:-1], c**l)
    for s in range(1, 2**l):
        r = bin(s).count("1")
        total = total + c ** (l - r) * e**r * _diagonal_mass(nu, l, s) ** k / size
    return total


def ksat_diagonal_term(k: int, l: int, nu) -> np.ndarray:
    """2^-k (2^k - 1)^-l (nu(0..0) + nu(1..1))^k, the all-replica term of the k-SAT Gamma."""
    nu = _as_batch(nu, l)
    return 2.0**-k * (2.0**k - 1) ** -l * (nu[..., 0] + nu[..., -1]) ** k


def gamma_nae_closed(k: int, l: int, nu) -> np.ndarray:
    """Gamma_l for planted k-NAE-SAT in closed form.

    With 1 - Q(z|u) = c + e * 1[u in {z, complement(z)}],

        Gamma_l = c^l + 2^-k * sum_{S nonempty} c^(l-|S|) e^|S|
                        * sum_{b in {0,1}^S} (nu_S(b) + nu_S(~b))^k.
    """
    if k < 2:
        raise GammaError("NAE-SAT needs k >= 2")
    if l < 1:
        raise GammaError("l must be positive")
    nu = _as_batch(nu, l)
    size = 2**k
    c, e = (size - 3) / (size - 2), 1.0 / (size - 2)
    x = np.arange(2**l, dtype=np.int64)
    total = np.full(nu.shape[:-1], c**l)
    for s in range(1, 2**l):
        r = bin(s).count("1")
        on = x & s
        acc = np.zeros(nu.shape[:-1])
        for b in range(2**l):
            if b & ~s:
                continue
            acc = acc + nu[..., (on == b) | (on == (b ^ s))].sum(axis=-1) ** k
        total = total + c ** (l - r) * e**r * acc / size
    return total


def nae_diagonal_term(k: int, l: int, nu) -> np.ndarray:
    """2^-k (2^k - 2)^-l sum_b (nu(b) + nu(~b))^k, the all-replica term of the NAE Gamma."""
    nu = _as_batch(nu, l)
    full = 2**l - 1
    b = np.arange(2**l)
    return 2.0**-k * (2.0**k - 2) ** -l * ((nu[..., b] + nu[..., b ^ full]) ** k).sum(axis=-1)


def parity_coefficients(s: float, d: float, l: int) -> np.ndarray:
    """d^|w| [s^(l-|w|) + (-1)^|w| (2-s)^(l-|w|)]: the Walsh spectrum of the replica bracket."""
    w = _popcount(np.arange(2**l))
    return d**w * (s ** (l - w) + (-1.0) ** w * (2.0 - s) ** (l - w))


def _check_sd(s: float, d: float) -> None:
    lo, hi = (s + d) / 2, (s - d) / 2  # W(1|0), W(1|1)
    if not (-ATOL <= lo <= 1 + ATOL and -ATOL <= hi <= 1 + ATOL):
        raise GammaError(f"(s, d) = ({s}, {d}) is not realisable by a binary channel")


def gamma_parity_closed(s: float, d: float, k: int, l: int, nu) -> np.ndarray:
    """Gamma_l for Q(z|u) = W(z | parity(u)) with binary W, through the Walsh domain.

    Gamma_l = 1/2 * 2^-l * sum_w coeff(w) F(nu)(w)^k, where s = W(1|0)+W(1|1),
    d = W(1|0)-W(1|1) and coeff is :func:`parity_coefficients`.  The 2^-l is
    the Parseval factor of the unnormalised transform.
    """
    _check_sd(s, d)
    nu = _as_batch(nu, l)
    return 0.5 * 2.0**-l * (walsh_transform(nu) ** k) @ parity_coefficients(s, d, l)


def biso_bracket(w: BisoChannel | np.ndarray, l: int) -> np.ndarray:
    """g(v) = sum_y prod_r (1 - W(y | v_r)) over v in {0,1}^l."""
    mat = w.matrix if isinstance(w, BisoChannel) else np.asarray(w, dtype=float)
    ones = _popcount(np.arange(2**l))
    comp = 1.0 - mat
    return (comp[0][None, :] ** (l - ones)[:, None] * comp[1][None, :] ** ones[:, None]).sum(axis=1)


def biso_spectrum(w: BisoChannel, l: int) -> np.ndarray:
    """Walsh spectrum of the replica bracket assembled pair by pair.

    A symmetric pair with complemented entries (C, D) contributes
    (C+D)^(l-|w|) (C-D)^|w| (1 + (-1)^|w|); a constant column E contributes
    2^l E^l at w = 0.  All entries are nonnegative.
    """
    wt = _popcount(np.arange(2**l))
    out = np.zeros(2**l)
    for c, d in w.pair_params:
        big_c, big_d = 1.0 - c, 1.0 - d
        out += (big_c + big_d) ** (l - wt) * (big_c - big_d) ** wt * (1 + (-1.0) ** wt)
    for e in w.const_cols:
        out[0] += 2.0**l * (1.0 - e) ** l
    return out


def gamma_encoded_closed(w: BisoChannel, k: int, l: int, nu) -> np.ndarray:
    """Gamma_l for the encoded kernel W(z | parity(u)) with any BISO channel W."""
    nu = _as_batch(nu, l)
    return (walsh_transform(nu) ** k) @ biso_spectrum(w, l) / (w.q * 2**l)


# ---------------------------------------------------------------------------
# convexity audit


@dataclass
class ConvexityReport:
    verdict: str
    trials: int
    worst_midpoint_gap: float
    worst_second_difference: float
    witness: tuple[np.ndarray, np.ndarray] | None = None
    witness_gap: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def convex(self) -> bool:
        return self.verdict == "convex-no-counterexample-found"

    def to_dict(self) -> dict:
        out = {
            "verdict": self.verdict,
            "trials": self.trials,
            "worst_midpoint_gap": float(self.worst_midpoint_gap).hex(),
            "worst_second_difference": float(self.worst_second_difference).hex(),
            "witness": None,
            "witness_gap": None if self.witness_gap is None else float(self.witness_gap).hex(),
        }
        if self.witness is not None:
            out["witness"] = [[float(v).hex() for v in nu] for nu in self.witness]
        out.update(self.extra)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ConvexityReport":
        witness = data.get("witness")
        if witness is not None:
            witness = tuple(np.array([float.fromhex(v) for v in nu]) for nu in witness)
        gap = data.get("witness_gap")
        known = {"verdict", "trials", "worst_midpoint_gap", "worst_second_difference", "witness", "witness_gap"}
        return cls(
            data["verdict"],
            int(data["trials"]),
            float.fromhex(data["worst_midpoint_gap"]),
            float.fromhex(data["worst_second_difference"]),
            witness,
            None if gap is None else float.fromhex(gap),
            {k: v for k, v in data.items() if k not in known},
        )


def sample_simplex(rng: np.random.Generator, size: int, dim: int, face_fraction: float = 0.1) -> np.ndarray:
    """Uniform simplex points from normalised exponentials; a fraction lives on random faces."""
    pts = rng.exponential(size=(size, dim))
    faces = rng.random(size) < face_fraction
    if faces.any():
        keep = rng.random((int(faces.sum()), dim)) < 0.5
        keep[np.arange(keep.shape[0]), rng.integers(0, dim, keep.shape[0])] = True
        pts[faces] *= keep
    return pts / pts.sum(axis=1, keepdims=True)


def _vertex_grid(dim: int) -> np.ndarray:
    eye = np.eye(dim)
    mids = [(eye[i] + eye[j]) / 2 for i, j in itertools.combinations(range(dim), 2)]
    return np.vstack([eye] + mids) if mids else eye


def check_convexity(
    gamma_fn: GammaFn,
    l: int,
    trials: int,
    rng,
    tol: float = 1e-9,
    second_tol: float = 1e-6,
    h: float = 1e-3,
    exhaustive: bool = False,
) -> ConvexityReport:
    """Search for violations of midpoint convexity of ``gamma_fn`` on the simplex over {0,1}^l.

    Each trial draws a pair for the midpoint test and a point plus a
    zero-sum direction for the second-difference test.  A negative second
    difference is turned into a witness pair by stepping as far along the
    direction as the simplex allows.  ``exhaustive`` also tests every pair
    drawn from the vertices and edge midpoints of the simplex.
    """
    rng = as_generator(rng)
    dim = 2**l
    nu1 = sample_simplex(rng, trials, dim)
    nu2 = sample_simplex(rng, trials, dim)
    if exhaustive:
        grid = _vertex_grid(dim)
        i, j = np.triu_indices(len(grid), 1)
        nu1, nu2 = np.vstack([nu1, grid[i]]), np.vstack([nu2, grid[j]])
    gaps = (gamma_fn(nu1) + gamma_fn(nu2)) / 2 - gamma_fn((nu1 + nu2) / 2)

    base = sample_simplex(rng, trials, dim)
    delta = rng.normal(size=(trials, dim))
    delta -= delta.mean(axis=1, keepdims=True)
    delta /= np.linalg.norm(delta, axis=1, keepdims=True)
    # largest step keeping base +/- step*delta inside the simplex
    with np.errstate(divide="ignore", invalid="ignore"):
        reach = np.where(np.abs(delta) > 0, base / np.abs(delta), np.inf).min(axis=1)
    scale = np.minimum(1.0, reach / h)[:, None]
    dirs = delta * scale
    second = (gamma_fn(base + h * dirs) - 2 * gamma_fn(base) + gamma_fn(base - h * dirs)) / h**2
    far_lo, far_hi = base - reach[:, None] * delta, base + reach[:, None] * delta
    far_lo, far_hi = np.clip(far_lo, 0, None), np.clip(far_hi, 0, None)
    far_lo /= far_lo.sum(axis=1, keepdims=True)
    far_hi /= far_hi.sum(axis=1, keepdims=True)
    far_gaps = (gamma_fn(far_lo) + gamma_fn(far_hi)) / 2 - gamma_fn((far_lo + far_hi) / 2)

    report = ConvexityReport(
        "convex-no-counterexample-found",
        int(nu1.shape[0] + trials),
        float(gaps.min()),
        float(second.min()),
    )
    candidates = [(gaps, nu1, nu2)]
    flagged = second < -second_tol
    if flagged.any():
        candidates.append((np.where(flagged, far_gaps, np.inf), far_lo, far_hi))
    best = None
    for gap_arr, lo, hi in candidates:
        idx = int(np.argmin(gap_arr))
        if gap_arr[idx] < -tol and (best is None or gap_arr[idx] < best[0]):
            best = (float(gap_arr[idx]), lo[idx].copy(), hi[idx].copy())
    if best is not None:
        report.verdict = "non-convex"
        report.witness_gap = best[0]
        report.witness = (best[1], best[2])
    elif flagged.any():
        report.extra["unreproduced_second_difference"] = True
    return report


def verify_witness(gamma_fn: GammaFn, report: ConvexityReport, tol: float = 1e-9) -> bool:
    if report.witness is None:
        return False
    a, b = report.witness
    gap = (gamma_fn(a[None]) + gamma_fn(b[None])) / 2 - gamma_fn(((a + b) / 2)[None])
    return bool(gap[0] < -tol)


def kernel_gamma(kernel: Kernel, l: int, method: str = "closed") -> GammaFn:
    """Batched Gamma_l evaluator for ``kernel``: its closed form when one exists, else brute force."""
    if method == "brute":
        return lambda nu: gamma_bruteforce(kernel, l, nu)
    if method != "closed":
        raise GammaError(f"unknown method {method!r}")
    k = kernel.k
    if kernel.tag == "ksat":
        return lambda nu: gamma_ksat_closed(k, l, nu)
    if kernel.tag == "nae":
        return lambda nu: gamma_nae_closed(k, l, nu)
    if kernel.tag in ("xor", "sbm") or (kernel.tag == "encoded" and kernel.q == 2):
        # rows 0 and 1 have input parity 0 and 1
        s, d = kernel.table[0, 1] + kernel.table[1, 1], kernel.table[0, 1] - kernel.table[1, 1]
        return lambda nu: gamma_parity_closed(s, d, k, l, nu)
    if kernel.tag == "encoded":
        w = validate_biso(kernel.table[:2])
        return lambda nu: gamma_encoded_closed(w, k, l, nu)
    return lambda nu: gamma_bruteforce(kernel, l, nu)


def hypothesis_h_expected(kernel: Kernel) -> bool:
    """Whether Gamma_l is known to be convex for every l for this kernel family.

    Covered: k-SAT and NAE-SAT kernels, parity kernels with even k,
    block-model kernels with (s <= 1, d <= 0) or (s >= 1, d >= 0), and BISO-encoded
    kernels with even k.
    """
    if kernel.tag in ("ksat", "nae"):
        return True
    if kernel.tag in ("xor", "encoded"):
        return kernel.k % 2 == 0
    if kernel.tag == "sbm":
        s = kernel.table[0, 1] + kernel.table[1, 1]
        d = kernel.table[0, 1] - kernel.table[1, 1]
        return bool((s <= 1 + ATOL and d <= ATOL) or (s >= 1 - ATOL and d >= -ATOL))
    return False
