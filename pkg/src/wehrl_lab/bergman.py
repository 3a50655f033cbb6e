"""Weighted Bergman spaces A^p_alpha on the unit disk (n = 1).

Norm: ``||f||^p = c * int_D |f|^p (1-|z|^2)^alpha dA / (1-|z|^2)^2`` with
``c`` fixed by ``||1|| = 1``. Integrals run in polar coordinates in the
variable ``x = 1 - r^2`` (equivalently ``x = exp(-s)``), so that
``dA = pi dx (dtheta / 2 pi)`` and the boundary weight becomes a power of x
at the endpoint x = 0. The radial integral is then taken in ``y = sqrt(x)``,
which smooths that endpoint and the log terms of entropy-type Phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .functionals import ConvexFunctional, Power
from .quadrature import integrate_adaptive

MAX_ANGULAR = 1 << 14


@dataclass(frozen=True)
class BergmanConfig:
    p: float
    alpha: float

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError(f"p must be > 0, got {self.p}")
        if not self.alpha > 1:
            raise ValueError(f"alpha must be > 1 on the disk, got {self.alpha}")

    @property
    def normalizer(self):
        """1 / int_D (1-|z|^2)^{alpha-2} dA = (alpha - 1) / pi."""
        return (self.alpha - 1.0) / math.pi

    def weight_mass(self, tol=1e-12):
        """Quadrature value of int_D (1-|z|^2)^{alpha-2} dA."""
        a = self.alpha
        return integrate_adaptive(lambda x: math.pi * x ** (a - 2.0), 0.0, 1.0, tol).value


class DiskFunction:
    """Holomorphic function on the disk; subclasses implement ``__call__``."""

    degree_hint = 0

    def __call__(self, z):
        raise NotImplementedError


class DiskPolynomial(DiskFunction):
    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        if c.size == 0:
            raise ValueError("empty coefficient list")
        self.coeffs = c
        self.degree_hint = c.size - 1

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(np.asarray(z, dtype=np.complex128), self.coeffs)

    def scaled(self, lam):
        return DiskPolynomial(lam * self.coeffs)


class MobiusMap:
    """phi_w(z) = (w - z) / (1 - conj(w) z), an involution with phi_w(w) = 0."""

    def __init__(self, w):
        w = complex(w)
        if not abs(w) < 1:
            raise ValueError("w must lie in the open unit disk")
        self.w = w

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        return (self.w - z) / (1.0 - np.conj(self.w) * z)

    apply = __call__


def _factor(w, z, cfg):
    # (1 - |w|^2)^{alpha/p} / (1 - conj(w) z)^{2 alpha/p}, principal branch
    e = cfg.alpha / cfg.p
    return (1.0 - abs(w) ** 2) ** e / np.power(1.0 - np.conj(w) * z, 2.0 * e)


class Extremal(DiskFunction):
    """e^{i theta} (1-|w|^2)^{alpha/p} / (1 - conj(w) z)^{2 alpha/p}."""

    def __init__(self, w, theta, cfg: BergmanConfig):
        self.w = complex(w)
        if not abs(self.w) < 1:
            raise ValueError("w must lie in the open unit disk")
        self.theta = float(theta)
        self.cfg = cfg
        self.degree_hint = 16

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        return np.exp(1j * self.theta) * _factor(self.w, z, self.cfg)


class Transported(DiskFunction):
    """f_w(z) = f(phi_w(z)) (1-|w|^2)^{alpha/p} / (1 - conj(w) z)^{2 alpha/p}."""

    def __init__(self, f: DiskFunction, w, cfg: BergmanConfig):
        self.f = f
        self.phi = MobiusMap(w)
        self.cfg = cfg
        self.degree_hint = max(16, f.degree_hint)

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        return self.f(self.phi(z)) * _factor(self.phi.w, z, self.cfg)


def _angular_mean(g, r, k0, tol=1e-15):
    # trapezoid on the circle, doubled until two levels agree
    k = max(8, int(k0))
    prev = None
    while True:
        theta = 2 * np.pi * np.arange(k) / k
        cur = float(np.mean(g(r * np.exp(1j * theta))))
        if prev is not None and abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        if k >= MAX_ANGULAR:
            return cur
        prev = cur
        k *= 2


def _radius(x):
    return math.sqrt(1.0 - x)


def _integrate_x(g, tol, points=()):
    # x = y^2 tames the x^{alpha-2} and log x endpoint behaviour at x = 0
    pts = [math.sqrt(t) for t in points]
    return integrate_adaptive(lambda y: 2.0 * y * g(y * y), 0.0, 1.0, tol, points=pts, rtol=tol).value


def _angular_nodes(f):
    return 2 * f.degree_hint + 16


def norm(f: DiskFunction, cfg: BergmanConfig, tol=1e-12) -> float:
    """||f||_{A^p_alpha}."""
    a, p = cfg.alpha, cfg.p
    k0 = _angular_nodes(f)

    def integrand(x):
        m = _angular_mean(lambda z: np.abs(f(z)) ** p, _radius(x), k0)
        return (a - 1.0) * x ** (a - 2.0) * m

    return _integrate_x(integrand, tol) ** (1.0 / p)


def mobius_identity_check(w, z) -> float:
    """|1 - |phi_w(z)|^2 - (1-|w|^2)(1-|z|^2)/|1 - conj(w) z|^2|."""
    w = np.asarray(w, dtype=np.complex128)
    z = np.asarray(z, dtype=np.complex128)
    phi = (w - z) / (1.0 - np.conj(w) * z)
    lhs = 1.0 - np.abs(phi) ** 2
    rhs = (1.0 - np.abs(w) ** 2) * (1.0 - np.abs(z) ** 2) / np.abs(1.0 - np.conj(w) * z) ** 2
    out = np.abs(lhs - rhs)
    return out if out.ndim else float(out)


def check_admissible(phi: ConvexFunctional, cfg: BergmanConfig):
    """Raise unless int Phi((1-|z|^2)^alpha) dv_g is finite.

    dv_g has infinite mass, so Phi(0) = 0 is required; power functions also
    need q * alpha > 1.
    """
    if float(phi.value(0.0)) != 0.0:
        raise ValueError(f"{phi.spec}: Phi(0) != 0 makes the right side diverge")
    if isinstance(phi, Power) and not phi.q * cfg.alpha > 1:
        raise ValueError(f"{phi.spec}: need q * alpha > 1 for a finite right side")


@dataclass
class ContractiveReport:
    lhs: float
    rhs: float
    passed: bool
    sup_pointwise: float | None = None

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "pass": self.passed, "sup_pointwise": self.sup_pointwise}


def contractive_rhs(phi: ConvexFunctional, cfg: BergmanConfig, tol=1e-12) -> float:
    """int_D Phi((1-|z|^2)^alpha) dv_g = pi int_0^1 Phi(x^alpha) x^{-2} dx."""
    check_admissible(phi, cfg)
    a = cfg.alpha
    kinks = [k ** (1.0 / a) for k in phi.kinks if 0 < k < 1]
    return _integrate_x(lambda x: math.pi * float(phi.value(x**a)) / (x * x), tol, kinks)


def contractive_lhs(f: DiskFunction, phi: ConvexFunctional, cfg: BergmanConfig, tol=1e-12) -> float:
    check_admissible(phi, cfg)
    a, p = cfg.alpha, cfg.p
    k0 = _angular_nodes(f)

    def integrand(x):
        m = _angular_mean(lambda z: phi.value(np.abs(f(z)) ** p * x**a), _radius(x), k0)
        return math.pi * m / (x * x)

    return _integrate_x(integrand, tol)


def contractive_check(f: DiskFunction, cfg: BergmanConfig, phi: ConvexFunctional, tol=1e-8, with_sup=False):
    """Both sides of the contractive inequality and whether lhs <= rhs + tol."""
    lhs = contractive_lhs(f, phi, cfg)
    rhs = contractive_rhs(phi, cfg)
    rep = ContractiveReport(lhs, rhs, lhs <= rhs + tol)
    if with_sup:
        rep.sup_pointwise = pointwise_disk_bound(f, cfg).sup
    return rep


@dataclass
class DiskSupReport:
    sup: float
    z_max: complex
    passed: bool


def pointwise_disk_bound(f: DiskFunction, cfg: BergmanConfig, n_radii=200, n_angles=256) -> DiskSupReport:
    """sup of |f|^p (1-|z|^2)^alpha on a boundary-refined polar grid, then polished."""
    a, p = cfg.alpha, cfg.p
    lin = np.linspace(0.0, 1.0, n_radii, endpoint=False)
    geo = 1.0 - np.geomspace(1.0, 1e-6, n_radii)
    radii = np.unique(np.concatenate([lin, geo]))
    theta = 2 * np.pi * np.arange(n_angles) / n_angles
    Z = radii[:, None] * np.exp(1j * theta)[None, :]
    G = np.abs(f(Z)) ** p * (1.0 - np.abs(Z) ** 2) ** a
    k = np.unravel_index(np.argmax(G), G.shape)
    z0 = Z[k]

    def neg(x):
        z = complex(x[0], x[1])
        r2 = x[0] ** 2 + x[1] ** 2
        if r2 >= 1.0:
            return 0.0
        return -float(np.abs(f(np.array([z])))[0] ** p * (1.0 - r2) ** a)

    res = optimize.minimize(neg, [z0.real, z0.imag], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15})
    best, zb = float(G[k]), complex(z0)
    if -res.fun > best:
        best, zb = float(-res.fun), complex(res.x[0], res.x[1])
    return DiskSupReport(best, zb, best <= 1.0 + 1e-8)


def polynomial_norm_exact(f: DiskPolynomial, cfg: BergmanConfig) -> float:
    """Closed form of the p = 2 norm: ||z^k||^2 = Gamma(alpha) k! / Gamma(alpha + k)."""
    if cfg.p != 2:
        raise ValueError("closed form only for p = 2")
    k = np.arange(f.coeffs.size)
    w = np.exp(math.lgamma(cfg.alpha) + np.array([math.lgamma(j + 1) - math.lgamma(cfg.alpha + j) for j in k]))
    return float(math.sqrt(np.sum(np.abs(f.coeffs) ** 2 * w)))


def random_polynomial(degree: int, cfg: BergmanConfig, seed: int) -> DiskPolynomial:
    """Complex-Gaussian coefficients, normalised to ||f|| = 1."""
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
    f = DiskPolynomial(c)
    return f.scaled(1.0 / norm(f, cfg))
