"""Sampling and integration on CP^{N-1} through the affine chart z_1 != 0.

Points are drawn with the normalised Fubini-Study law
``dnu = c_N (1 + |z'|^2)^{-N} dA(z')`` by pushing forward the uniform law
on the unit sphere of C^N.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .functionals import ConvexFunctional
from .quadrature import integrate_adaptive
from .symrep import SpaceSignature

CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class ChartPoint:
    """A point of the chart with its unit lift (1, z') / |(1, z')|."""

    zprime: np.ndarray
    lift: np.ndarray

    @classmethod
    def from_zprime(cls, zprime):
        zp = np.asarray(zprime, dtype=np.complex128).reshape(-1)
        z = np.concatenate([[1.0 + 0j], zp])
        return cls(zp, z / math.sqrt(1.0 + float(np.vdot(zp, zp).real)))

    @classmethod
    def from_vector(cls, v):
        """Chart point of the line through ``v`` (needs v[0] != 0)."""
        v = np.asarray(v, dtype=np.complex128).reshape(-1)
        if v[0] == 0:
            raise ValueError("vector lies on the hyperplane at infinity of the chart")
        return cls.from_zprime(v[1:] / v[0])


@dataclass(frozen=True, eq=False)
class ChartSample:
    """Batch of chart points: ``zprime`` is (n, N-1), ``lift`` is (n, N)."""

    zprime: np.ndarray
    lift: np.ndarray
    seed: int

    def __len__(self):
        return self.lift.shape[0]

    def points(self):
        return [ChartPoint(self.zprime[i], self.lift[i]) for i in range(len(self))]


@dataclass(frozen=True)
class ChartMeasure:
    sig: SpaceSignature

    @property
    def c_N(self):
        N = self.sig.N
        return math.factorial(N - 1) / math.pi ** (N - 1)

    def density(self, zprime):
        zp = np.atleast_2d(zprime)
        return self.c_N * (1.0 + np.sum(np.abs(zp) ** 2, axis=1)) ** (-self.sig.N)


def _chunk_rng(seed, k):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(k,)))


def _draw_chunk(N, n, seed, k):
    rng = _chunk_rng(seed, k)
    z = rng.standard_normal((n, N)) + 1j * rng.standard_normal((n, N))
    bad = z[:, 0] == 0
    while bad.any():
        z[bad] = rng.standard_normal((bad.sum(), N)) + 1j * rng.standard_normal((bad.sum(), N))
        bad = z[:, 0] == 0
    zp = z[:, 1:] / z[:, :1]
    lift = np.empty((n, N), dtype=np.complex128)
    lift[:, 0] = 1.0
    lift[:, 1:] = zp
    lift /= np.sqrt(1.0 + np.sum(zp.real**2 + zp.imag**2, axis=1))[:, None]
    return zp, lift


def sample_chart_array(N: int, n: int, seed: int, threads: int = 1) -> ChartSample:
    """``n`` i.i.d. nu-distributed chart points.

    The stream is cut into chunks of fixed size with one counter-based
    generator per chunk, so the output does not depend on ``threads``.
    """
    if n < 1:
        raise ValueError("need n >= 1 samples")
    sizes = [min(CHUNK, n - s) for s in range(0, n, CHUNK)]
    tasks = [(N, m, seed, k) for k, m in enumerate(sizes)]
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda a: _draw_chunk(*a), tasks))
    else:
        parts = [_draw_chunk(*a) for a in tasks]
    zp = np.concatenate([p[0] for p in parts])
    lift = np.concatenate([p[1] for p in parts])
    return ChartSample(zp, lift, int(seed))


def sample_chart(measure: ChartMeasure, n: int, seed: int) -> list[ChartPoint]:
    return sample_chart_array(measure.sig.N, n, seed).points()


# --------------------------------------------------------------------------
# closed forms for the coherent state


def _check_unit_interval(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(arr > 1) or np.any(np.isnan(arr)):
        raise ValueError(f"{name} must lie in [0, 1]")
    return arr


def mu0(t, sig: SpaceSignature):
    """Distribution function (1 - t^{1/M})^{N-1} of the coherent Husimi function."""
    t = _check_unit_interval(t, "t")
    out = (1.0 - t ** (1.0 / sig.M)) ** (sig.N - 1)
    return out if out.ndim else float(out)


def u0_star(s, sig: SpaceSignature):
    """Decreasing rearrangement (1 - s^{1/(N-1)})^M of the coherent Husimi function."""
    s = _check_unit_interval(s, "s")
    out = (1.0 - s ** (1.0 / (sig.N - 1))) ** sig.M
    return out if out.ndim else float(out)


def _u0_star_points(phi: ConvexFunctional, sig):
    # kinks of phi pulled back to the s-axis
    return tuple(float(mu0(k, sig)) for k in phi.kinks if 0 < k < 1)


def rhs_closed_form(phi: ConvexFunctional, sig: SpaceSignature, tol=1e-10, full_output=False):
    """Coherent-state value of the entropy functional, int_0^1 Phi(u0*(s)) ds."""

    def f(s):
        return float(phi.value((1.0 - s ** (1.0 / (sig.N - 1))) ** sig.M))

    res = integrate_adaptive(f, 0.0, 1.0, tol, points=_u0_star_points(phi, sig))
    return res if full_output else res.value


def rhs_derivative_form(phi: ConvexFunctional, sig: SpaceSignature, tol=1e-10):
    """Phi(0+) + int_0^1 Phi'(t) mu0(t) dt; only meaningful for Phi' integrable at 0."""
    phi0 = float(phi.value(0.0))

    def f(t):
        return float(phi.right_derivative(t)) * float(mu0(t, sig))

    return phi0 + integrate_adaptive(f, 0.0, 1.0, tol, points=phi.kinks).value


def u0_star_integral(s, sig: SpaceSignature, tol=1e-10, full_output=False):
    """int_0^s u0*(tau) dtau."""
    s = float(_check_unit_interval(s, "s"))
    res = integrate_adaptive(lambda x: float(u0_star(x, sig)), 0.0, s, tol)
    return res if full_output else res.value


# --------------------------------------------------------------------------
# empirical distributions


class EmpiricalDistribution:
    """Sorted Monte-Carlo sample of a function on CP^{N-1}.

    ``values`` is sorted in descending order, so ``values[k - 1]`` is the
    rank-k order statistic and the decreasing rearrangement is the step
    function ``u*(s) = values[ceil(s n) - 1]``.
    """

    def __init__(self, values, seed=None):
        v = np.sort(np.asarray(values, dtype=float).reshape(-1))[::-1]
        if v.size == 0:
            raise ValueError("empty sample")
        self.values = np.ascontiguousarray(v)
        self.values.flags.writeable = False
        self.n_samples = v.size
        self.seed = seed
        self._ascending = v[::-1]
        pts = (np.arange(v.size) + 0.5) / v.size
        self._nodes = np.concatenate([[0.0], pts, [1.0]])
        node_vals = np.concatenate([[v[0]], v, [v[-1]]])
        self._node_vals = node_vals
        seg = 0.5 * (node_vals[1:] + node_vals[:-1]) * np.diff(self._nodes)
        self._cum = np.concatenate([[0.0], np.cumsum(seg)])
        self._cum_sq = np.concatenate([[0.0], np.cumsum(v**2)])
        self._cum_lin = np.concatenate([[0.0], np.cumsum(v)])

    def mu(self, t):
        """Fraction of the sample strictly above ``t`` (right-continuous in t)."""
        t = np.asarray(t, dtype=float)
        above = self.n_samples - np.searchsorted(self._ascending, t, side="right")
        out = above / self.n_samples
        return out if out.ndim else float(out)

    def u_star(self, s):
        s = np.asarray(s, dtype=float)
        rank = np.clip(np.ceil(s * self.n_samples).astype(np.int64), 1, self.n_samples)
        out = self.values[rank - 1]
        return out if out.ndim else float(out)

    def majorization(self, s):
        """Trapezoidal int_0^s u*(tau) dtau through the nodes (k - 1/2)/n."""
        s = float(s)
        if not 0.0 <= s <= 1.0:
            raise ValueError("s must lie in [0, 1]")
        j = int(np.searchsorted(self._nodes, s, side="right")) - 1
        j = min(j, self._nodes.size - 2)
        x0, x1 = self._nodes[j], self._nodes[j + 1]
        y0, y1 = self._node_vals[j], self._node_vals[j + 1]
        ys = y0 + (y1 - y0) * (s - x0) / (x1 - x0)
        return float(self._cum[j] + 0.5 * (y0 + ys) * (s - x0))

    def majorization_error(self, s):
        """Standard error of the top-s partial mean, used as the MC error."""
        n = self.n_samples
        m = int(min(n, max(0, math.ceil(s * n))))
        if m == 0:
            return 0.0
        mean = self._cum_lin[m] / n
        second = self._cum_sq[m] / n
        var = max(second - mean**2, 0.0)
        return math.sqrt(var / max(n - 1, 1))

    def to_csv(self, path_or_file, max_rows=None):
        """Write (rank, s, u_star) rows, optionally thinned to ``max_rows``."""
        n = self.n_samples
        ranks = np.arange(1, n + 1)
        if max_rows is not None and max_rows < n:
            ranks = np.unique(np.linspace(1, n, max_rows).round().astype(np.int64))
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(["rank", "s", "u_star"])
            for r in ranks:
                w.writerow([int(r), repr(float(r / n)), repr(float(self.values[r - 1]))])
        finally:
            if own:
                fh.close()


def empirical_distribution(u, n: int, seed: int) -> EmpiricalDistribution:
    """Sample ``u`` (anything with ``on_lifts`` and ``sig``) at ``n`` nu-points."""
    if n < 1000:
        raise ValueError("empirical distributions need n >= 1000 samples")
    sample = sample_chart_array(u.sig.N, n, seed)
    return EmpiricalDistribution(u.on_lifts(sample.lift), seed=seed)


def majorization_integral(dist: EmpiricalDistribution, s: float) -> float:
    return dist.majorization(s)


