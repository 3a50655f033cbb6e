"""Holomorphic polynomials on C^{N-1} and their concentration bounds.

A unit vector psi of H_M corresponds to the polynomial
``F(z') = conj(<(x)^M (1, z') | psi>)``, so that its Husimi function in the
chart is ``|F(z')|^2 / (1 + |z'|^2)^M``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .projmeasure import ChartPoint, mu0, sample_chart_array, u0_star
from .quadrature import integrate_adaptive
from .symrep import DensityOperator, SpaceSignature, StateVector
from .wehrl import MC_SIGMAS, HusimiEvaluator, MCEstimate, sup_husimi


@dataclass(frozen=True, eq=False)
class ChartPolynomial:
    """Sparse polynomial ``sum_beta a_beta z'^beta`` of degree <= M."""

    sig: SpaceSignature
    terms: dict

    def __post_init__(self):
        clean = {}
        for beta, a in self.terms.items():
            beta = tuple(int(b) for b in beta)
            if len(beta) != self.sig.N - 1 or min(beta) < 0:
                raise ValueError(f"bad multi-index {beta} for N={self.sig.N}")
            if sum(beta) > self.sig.M:
                raise ValueError(f"term {beta} exceeds degree M={self.sig.M}")
            if a != 0:
                clean[beta] = complex(a)
        object.__setattr__(self, "terms", clean)

    @property
    def degree(self):
        return max((sum(b) for b in self.terms), default=0)

    def __call__(self, zprime):
        return self.eval(zprime)

    def eval(self, zprime):
        zp = np.atleast_2d(np.asarray(zprime, dtype=np.complex128))
        out = np.zeros(zp.shape[0], dtype=np.complex128)
        for beta, a in self.terms.items():
            out += a * np.prod(zp ** np.array(beta), axis=1)
        return out

    def partial(self, k):
        """d F / d z'_k."""
        terms = {}
        for beta, a in self.terms.items():
            if beta[k] > 0:
                b = list(beta)
                b[k] -= 1
                terms[tuple(b)] = terms.get(tuple(b), 0) + a * beta[k]
        return ChartPolynomial(self.sig, terms)

    def scale(self, lam):
        return ChartPolynomial(self.sig, {b: lam * a for b, a in self.terms.items()})

    def u(self, zprime):
        """|F(z')|^2 / (1 + |z'|^2)^M."""
        zp = np.atleast_2d(np.asarray(zprime, dtype=np.complex128))
        w = (1.0 + np.sum(np.abs(zp) ** 2, axis=1)) ** self.sig.M
        return np.abs(self.eval(zp)) ** 2 / w

    def to_dict(self):
        return {
            "N": self.sig.N,
            "M": self.sig.M,
            "terms": [
                {"beta": list(b), "re": a.real, "im": a.imag}
                for b, a in sorted(self.terms.items(), key=lambda kv: kv[0][::-1])
            ],
        }

    @classmethod
    def from_dict(cls, d):
        sig = SpaceSignature(int(d["N"]), int(d["M"]))
        return cls(sig, {tuple(t["beta"]): complex(t["re"], t["im"]) for t in d["terms"]})

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def state_to_polynomial(psi: StateVector) -> ChartPolynomial:
    sig = psi.sig
    terms = {}
    for k, alpha in enumerate(sig.basis):
        terms[alpha[1:]] = sig.sqrt_mult[k] * np.conj(psi.coeffs[k])
    return ChartPolynomial(sig, terms)


def polynomial_coordinates(F: ChartPolynomial) -> np.ndarray:
    """Inverse of :func:`state_to_polynomial`, without normalisation."""
    sig = F.sig
    c = np.zeros(sig.dim, dtype=np.complex128)
    for beta, a in F.terms.items():
        alpha = (sig.M - sum(beta),) + beta
        k = sig.index[alpha]
        c[k] = np.conj(a) / sig.sqrt_mult[k]
    return c


def polynomial_to_state(F: ChartPolynomial) -> StateVector:
    return StateVector(F.sig, polynomial_coordinates(F))


def pm_norm_exact(F: ChartPolynomial) -> float:
    """Squared P_M norm from the orthogonality of monomials."""
    return float(np.sum(np.abs(polynomial_coordinates(F)) ** 2))


def pm_norm(F: ChartPolynomial, n: int, seed: int) -> MCEstimate:
    """MC estimate of the squared norm dim(H_M) * int |F|^2 (1+|z'|^2)^{-M} dnu."""
    if n < 10_000:
        raise ValueError("pm_norm needs n >= 10^4 samples")
    s = sample_chart_array(F.sig.N, n, seed)
    vals = F.sig.dim * F.u(s.zprime)
    return MCEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n)))


@dataclass
class PointwiseReport:
    max_value: float
    argmax: ChartPoint
    passed: bool
    n_points: int
    polished: bool = False


def pointwise_bound_check(F: ChartPolynomial, points, polish=True, n_starts=16, seed=0) -> PointwiseReport:
    """Max of |F|^2 (1+|z'|^2)^{-M} over ``points``, checked against 1.

    ``points`` is a list of :class:`ChartPoint` or an (n, N-1) array of chart
    coordinates. With ``polish`` the best sample point also seeds a gradient
    ascent so the true supremum is reported when it beats the sample.
    """
    if isinstance(points, np.ndarray):
        zp = np.atleast_2d(points)
    else:
        zp = np.array([p.zprime for p in points]).reshape(len(points), F.sig.N - 1)
    vals = F.u(zp)
    k = int(np.argmax(vals))
    best, arg = float(vals[k]), ChartPoint.from_zprime(zp[k])
    polished = False
    if polish:
        nrm = pm_norm_exact(F)
        psi = StateVector(F.sig, polynomial_coordinates(F) / math.sqrt(nrm))
        sup = sup_husimi(DensityOperator.pure(psi), n_starts, seed)
        T = sup.T * nrm
        if T > best and sup.argmax_v[0] != 0:
            best, arg, polished = T, ChartPoint.from_vector(sup.argmax_v), True
    return PointwiseReport(best, arg, best <= 1.0 + 1e-8, int(zp.shape[0]), polished)


def faber_krahn_rhs(s: float, sig: SpaceSignature, tol=1e-10) -> float:
    """int_0^s (1 - tau^{1/(N-1)})^M dtau, the mass of the centred ball of measure s."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    return integrate_adaptive(lambda x: float(u0_star(x, sig)), 0.0, float(s), tol).value


@dataclass(frozen=True)
class RegionSpec:
    """A Borel set in the chart.

    kinds: ``euclidean_ball`` (center, radius), ``ball_exterior`` (center,
    radius), ``superlevel`` (threshold, evaluator) and ``halfspace``
    (normal, offset) meaning ``Re<normal, z'> > offset``.
    """

    kind: str
    center: np.ndarray | None = None
    radius: float | None = None
    threshold: float | None = None
    evaluator: HusimiEvaluator | None = field(default=None, repr=False)
    normal: np.ndarray | None = None
    offset: float | None = None

    @classmethod
    def ball(cls, center, radius):
        return cls("euclidean_ball", center=np.asarray(center, dtype=np.complex128), radius=float(radius))

    @classmethod
    def exterior(cls, center, radius):
        return cls("ball_exterior", center=np.asarray(center, dtype=np.complex128), radius=float(radius))

    @classmethod
    def superlevel(cls, evaluator, threshold):
        return cls("superlevel", threshold=float(threshold), evaluator=evaluator)

    @classmethod
    def halfspace(cls, normal, offset):
        return cls("halfspace", normal=np.asarray(normal, dtype=np.complex128), offset=float(offset))

    def contains(self, zprime, lift=None):
        zp = np.atleast_2d(zprime)
        if self.kind in ("euclidean_ball", "ball_exterior"):
            r = np.linalg.norm(zp - self.center[None, :], axis=1)
            return r < self.radius if self.kind == "euclidean_ball" else r > self.radius
        if self.kind == "superlevel":
            vals = self.evaluator.on_lifts(lift) if lift is not None else self.evaluator.on_chart(zp)
            return vals > self.threshold
        if self.kind == "halfspace":
            return (zp @ self.normal.conj()).real > self.offset
        raise ValueError(f"unknown region kind {self.kind!r}")

    def to_dict(self):
        d = {"kind": self.kind}
        if self.center is not None:
            d["center"] = [[float(c.real), float(c.imag)] for c in self.center]
            d["radius"] = self.radius
        if self.threshold is not None:
            d["threshold"] = self.threshold
        if self.normal is not None:
            d["normal"] = [[float(c.real), float(c.imag)] for c in self.normal]
            d["offset"] = self.offset
        return d


@dataclass
class ConcentrationReport:
    mass: float
    bound: float
    nu_measure: float
    mc_error: float
    passed: bool
    region: dict

    def to_dict(self):
        return {
            "region": self.region,
            "mass": self.mass,
            "bound": self.bound,
            "nu_measure": self.nu_measure,
            "mc_error": self.mc_error,
            "pass": self.passed,
        }


def concentration(F: ChartPolynomial, region: RegionSpec, n: int, seed: int, tol=1e-10) -> ConcentrationReport:
    """Compare the Husimi mass of F on ``region`` with the Faber-Krahn bound.

    The region measure is estimated from the same sample as the mass; the MC
    error is the standard error of the (linearised) difference
    ``mass - bound(nu)``, whose derivative in nu is u0*(nu).
    """
    s = sample_chart_array(F.sig.N, n, seed)
    inside = region.contains(s.zprime, s.lift)
    nu = float(inside.mean())
    if nu == 0.0:
        raise ValueError("region has zero measure in the sample")
    u = F.u(s.zprime)
    mass = float(np.mean(u * inside))
    bound = faber_krahn_rhs(nu, F.sig, tol)
    slope = float(u0_star(nu, F.sig))
    diff = inside * (u - slope)
    err = float(diff.std(ddof=1) / math.sqrt(n))
    return ConcentrationReport(mass, bound, nu, err, mass <= bound + MC_SIGMAS * err, region.to_dict())


def superlevel_measure(threshold, sig):
    """Exact nu-measure of the coherent superlevel set {u0 > threshold}."""
    return mu0(threshold, sig)


def laplacian_check(F: ChartPolynomial, zprime, h=1e-3):
    """Return (numerical Laplacian of |F|^2, 4 sum_k |dF/dz_k|^2) at ``zprime``.

    The Laplacian uses the fourth-order 5-point stencil along each of the
    2(N-1) real coordinates.
    """
    z0 = np.asarray(zprime, dtype=np.complex128).reshape(-1)
    n = z0.size

    def g(z):
        return float(np.abs(F.eval(z[None, :])[0]) ** 2)

    lap = 0.0
    f0 = g(z0)
    for k in range(n):
        for unit in (1.0, 1j):
            e = np.zeros(n, dtype=np.complex128)
            e[k] = unit * h
            lap += (-g(z0 + 2 * e) + 16 * g(z0 + e) - 30 * f0 + 16 * g(z0 - e) - g(z0 - 2 * e)) / (12 * h * h)
    grad = sum(abs(F.partial(k).eval(z0[None, :])[0]) ** 2 for k in range(n))
    return lap, 4.0 * grad
