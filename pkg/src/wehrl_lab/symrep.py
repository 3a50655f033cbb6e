"""Symmetric tensor powers of C^N: basis, coherent vectors, density operators.

Coordinates are taken in the orthonormal basis ``|alpha>`` of
``(C^N)^{(x)M}_sym`` indexed by multi-indices ``alpha`` with ``|alpha| = M``.
Inner products are conjugate-linear in the first slot.
"""

from __future__ import annotations

import functools
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

NORM_TOL = 1e-12
INT64_MAX = 2**63 - 1
BRUTE_FORCE_LIMIT = 10**6


def dim_symmetric(N: int, M: int) -> int:
    """Dimension ``binom(N + M - 1, N - 1)`` of the symmetric power.

    >>> dim_symmetric(3, 2)
    6
    """
    if isinstance(N, bool) or isinstance(M, bool) or not (
        isinstance(N, (int, np.integer)) and isinstance(M, (int, np.integer))
    ):
        raise TypeError("N and M must be integers")
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    d = math.comb(int(N) + int(M) - 1, int(N) - 1)
    if d > INT64_MAX:
        raise OverflowError(f"dim(N={N}, M={M}) does not fit in a 64-bit integer")
    return d


@functools.lru_cache(maxsize=None)
def _log_factorials(M):
    return np.concatenate([[0.0], np.cumsum(np.log(np.arange(1, M + 1)))])


@dataclass(frozen=True)
class SpaceSignature:
    """The pair (N, M) together with the derived dimension."""

    N: int
    M: int
    dim: int = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "dim", dim_symmetric(self.N, self.M))

    @functools.cached_property
    def basis(self) -> list[tuple[int, ...]]:
        return enumerate_basis(self)

    @functools.cached_property
    def exps(self) -> np.ndarray:
        arr = np.array(self.basis, dtype=np.int64).reshape(self.dim, self.N)
        arr.flags.writeable = False
        return arr

    @functools.cached_property
    def sqrt_mult(self) -> np.ndarray:
        """sqrt(M!/alpha!) per basis element, assembled from log-factorials."""
        lf = _log_factorials(self.M)
        out = np.exp(0.5 * (lf[self.M] - lf[self.exps].sum(axis=1)))
        out.flags.writeable = False
        return out

    @functools.cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {alpha: k for k, alpha in enumerate(self.basis)}

    def __repr__(self):
        return f"SpaceSignature(N={self.N}, M={self.M}, dim={self.dim})"


def enumerate_basis(sig: SpaceSignature) -> list[tuple[int, ...]]:
    """All multi-indices of weight M in colexicographic order.

    >>> enumerate_basis(SpaceSignature(2, 2))
    [(2, 0), (1, 1), (0, 2)]
    """
    N, M = sig.N, sig.M
    out = []
    # bars-and-stars: choose N-1 cut positions among M+N-1 slots
    for cuts in itertools.combinations(range(M + N - 1), N - 1):
        prev = -1
        alpha = []
        for c in cuts:
            alpha.append(c - prev - 1)
            prev = c
        alpha.append(M + N - 2 - prev)
        out.append(tuple(alpha))
    out.sort(key=lambda a: a[::-1])
    return out


def _as_unit_vector(v, N, what="v"):
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    if v.shape != (N,):
        raise ValueError(f"{what} must have length {N}, got {v.shape[0]}")
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > NORM_TOL:
        raise ValueError(f"{what} is not normalized (|{what}| = {nrm!r})")
    return v


def _frozen(a):
    a = np.array(a, dtype=np.complex128)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    """A unit vector of H_M in the orthonormal symmetric basis."""

    sig: SpaceSignature
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128).reshape(-1)
        if c.shape != (self.sig.dim,):
            raise ValueError(f"expected {self.sig.dim} coefficients, got {c.shape[0]}")
        nrm = np.linalg.norm(c)
        if abs(nrm - 1.0) > NORM_TOL:
            raise ValueError(f"state vector is not normalized (norm {nrm!r})")
        object.__setattr__(self, "coeffs", _frozen(c))

    def inner(self, other: StateVector) -> complex:
        """<self|other>."""
        _check_same(self.sig, other.sig)
        return complex(np.vdot(self.coeffs, other.coeffs))

    def to_dict(self):
        return {
            "N": self.sig.N,
            "M": self.sig.M,
            "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs],
        }

    @classmethod
    def from_dict(cls, d):
        sig = SpaceSignature(int(d["N"]), int(d["M"]))
        return cls(sig, _complex_list(d["coeffs"]))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _complex_list(pairs):
    return np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)


def _check_same(a: SpaceSignature, b: SpaceSignature):
    if a != b:
        raise ValueError(f"signature mismatch: {a} vs {b}")


def coherent_coefficients(v, sig: SpaceSignature) -> StateVector:
    """Coordinates of the tensor power of ``v``: sqrt(M!/alpha!) v^alpha."""
    v = _as_unit_vector(v, sig.N)
    c = kernels.coherent_matrix(v[None, :], sig.exps, sig.sqrt_mult)[0]
    # the multinomial identity makes |c| = |v|^M; absorb the last ulp drift
    return StateVector(sig, c / np.linalg.norm(c))


def overlap_with_coherent(w, psi: StateVector) -> complex:
    """<(x)^M w | psi>, conjugate-linear in ``w``."""
    w = np.asarray(w, dtype=np.complex128).reshape(-1)
    if w.shape != (psi.sig.N,):
        raise ValueError(f"signature mismatch: w has length {w.shape[0]}, N={psi.sig.N}")
    c = kernels.coherent_matrix(w[None, :], psi.sig.exps, psi.sig.sqrt_mult)[0]
    return complex(np.vdot(c, psi.coeffs))


def _symmetrize(T, M):
    # S_M = (1/M) (1 + sum_{k<M} (k M)) (S_{M-1} (x) 1), applied recursively
    for m in range(2, M + 1):
        acc = T.copy()
        for k in range(m - 1):
            acc += np.swapaxes(T, k, m - 1)
        T = acc / m
    return T


def brute_force_symmetrize(v, sig: SpaceSignature) -> StateVector:
    """Oracle for :func:`coherent_coefficients` built in the full tensor space.

    Forms ``v (x) ... (x) v`` in C^{N^M}, applies the symmetriser, then reads
    off coordinates against the normalised orbit sums ``|alpha>``. The word
    counts per orbit are counted, not taken from a multinomial formula.
    """
    N, M = sig.N, sig.M
    if N**M > BRUTE_FORCE_LIMIT:
        raise ValueError(f"N^M = {N**M} exceeds the brute-force limit {BRUTE_FORCE_LIMIT}")
    v = _as_unit_vector(v, N)
    T = v
    for _ in range(M - 1):
        T = np.multiply.outer(T, v)
    T = _symmetrize(np.asarray(T).reshape((N,) * M), M).reshape(-1)

    words = np.array(list(itertools.product(range(N), repeat=M)), dtype=np.int64)
    content = np.stack([(words == i).sum(axis=1) for i in range(N)], axis=1)
    idx = np.array([sig.index[tuple(row)] for row in content])
    sums = np.zeros(sig.dim, dtype=np.complex128)
    np.add.at(sums, idx, T)
    counts = np.bincount(idx, minlength=sig.dim)
    return StateVector(sig, sums / np.sqrt(counts))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A density operator on H_M stored with its spectral decomposition.

    ``weights`` are the eigenvalues p_j > 0 in descending order and ``vecs``
    the matching orthonormal eigenvectors as columns.
    """

    sig: SpaceSignature
    weights: np.ndarray
    vecs: np.ndarray
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = np.array(self.weights, dtype=np.float64).reshape(-1)
        V = np.array(self.vecs, dtype=np.complex128).reshape(self.sig.dim, -1)
        if V.shape[1] != p.shape[0]:
            raise ValueError("weights and vecs disagree on the rank")
        if p.shape[0] < 1:
            raise ValueError("a density operator needs rank >= 1")
        if np.any(p <= 0) or np.any(p > 1 + NORM_TOL):
            raise ValueError("spectral weights must lie in (0, 1]")
        if abs(p.sum() - 1.0) > NORM_TOL:
            raise ValueError(f"spectral weights sum to {p.sum()!r}, not 1")
        gram = V.conj().T @ V
        if np.max(np.abs(gram - np.eye(p.shape[0]))) > 1e-10:
            raise ValueError("eigenvectors are not orthonormal")
        # ties broken by descending p then basis order of the leading entry
        lead = np.argmax(np.abs(V) > 1e-12, axis=0)
        order = np.lexsort((lead, -p))
        p, V = p[order], V[:, order]
        rho = (V * p) @ V.conj().T
        rho = 0.5 * (rho + rho.conj().T)
        for name, arr in (("weights", p), ("vecs", V), ("matrix", rho)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def rank(self):
        return self.weights.shape[0]

    @property
    def is_pure(self):
        return self.rank == 1

    def psi(self, j) -> StateVector:
        return StateVector(self.sig, self.vecs[:, j])

    @property
    def spectral(self):
        return [(float(self.weights[j]), self.psi(j)) for j in range(self.rank)]

    @classmethod
    def pure(cls, psi: StateVector):
        return cls(psi.sig, [1.0], psi.coeffs[:, None])

    @classmethod
    def coherent(cls, v, sig: SpaceSignature):
        return cls.pure(coherent_coefficients(v, sig))

    @classmethod
    def maximally_mixed(cls, sig: SpaceSignature):
        return cls(sig, np.full(sig.dim, 1.0 / sig.dim), np.eye(sig.dim))

    @classmethod
    def from_matrix(cls, sig: SpaceSignature, matrix, cutoff=1e-14):
        """Diagonalise a Hermitian PSD trace-one matrix; drops eigenvalues <= cutoff."""
        A = np.asarray(matrix, dtype=np.complex128)
        if A.shape != (sig.dim, sig.dim):
            raise ValueError(f"matrix must be {sig.dim}x{sig.dim}")
        if np.max(np.abs(A - A.conj().T)) > 1e-10:
            raise ValueError("matrix is not Hermitian")
        lam, V = np.linalg.eigh(0.5 * (A + A.conj().T))
        if lam.min() < -NORM_TOL or lam.max() > 1 + NORM_TOL:
            raise ValueError("eigenvalues outside [0, 1]")
        keep = lam > cutoff
        p = lam[keep]
        s = p.sum()
        if abs(s - 1.0) > 1e-10:
            raise ValueError(f"trace is {np.trace(A).real!r}, not 1")
        return cls(sig, p / s, V[:, keep])

    def to_dict(self):
        return {
            "N": self.sig.N,
            "M": self.sig.M,
            "spectral": [
                {
                    "p": float(self.weights[j]),
                    "psi": [[float(c.real), float(c.imag)] for c in self.vecs[:, j]],
                }
                for j in range(self.rank)
            ],
        }

    @classmethod
    def from_dict(cls, d):
        sig = SpaceSignature(int(d["N"]), int(d["M"]))
        p = [float(e["p"]) for e in d["spectral"]]
        V = np.stack([_complex_list(e["psi"]) for e in d["spectral"]], axis=1)
        return cls(sig, p, V)

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def haar_unit_vectors(rng, N, n):
    """``n`` unit vectors uniform on the sphere of C^N, shape (n, N)."""
    z = rng.standard_normal((n, N)) + 1j * rng.standard_normal((n, N))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def random_density(sig: SpaceSignature, rank: int, seed: int, uniform=False) -> DensityOperator:
    """Haar-random eigenvectors with Dirichlet(1, ..., 1) eigenvalues.

    ``uniform=True`` sets all eigenvalues to 1/rank, so ``rank=dim`` gives I/dim.
    """
    if not 1 <= rank <= sig.dim:
        raise ValueError(f"rank must be in [1, {sig.dim}], got {rank}")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((sig.dim, rank)) + 1j * rng.standard_normal((sig.dim, rank))
    Q, R = np.linalg.qr(G)
    d = np.diag(R)
    Q = Q * (d / np.abs(d))
    if uniform:
        p = np.full(rank, 1.0 / rank)
    else:
        p = rng.dirichlet(np.ones(rank)) if rank > 1 else np.ones(1)
        # Dirichlet draws can underflow to exactly 0 in extreme cases
        p = np.maximum(p, 1e-300)
        p = p / p.sum()
    return DensityOperator(sig, p, Q)


def random_pure(sig: SpaceSignature, seed: int) -> DensityOperator:
    return random_density(sig, 1, seed)


def one_body_matrix(psi: StateVector) -> np.ndarray:
    """Reduced one-particle matrix gamma with gamma = v v^H for a coherent psi."""
    sig = psi.sig
    N, M = sig.N, sig.M
    c = psi.coeffs
    gamma = np.zeros((N, N), dtype=np.complex128)
    for b, beta in enumerate(sig.basis):
        if c[b] == 0:
            continue
        for k in range(N):
            if beta[k] == 0:
                continue
            lowered = list(beta)
            lowered[k] -= 1
            for i in range(N):
                raised = lowered.copy()
                raised[i] += 1
                a = sig.index[tuple(raised)]
                # <psi| a_i^dag a_k |psi> contribution
                gamma[k, i] += np.conj(c[a]) * c[b] * math.sqrt(beta[k] * raised[i])
    return gamma / M
