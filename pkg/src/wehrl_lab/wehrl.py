"""Husimi functions, entropy deficits and the stability checks built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .functionals import ConvexFunctional
from .projmeasure import (
    ChartPoint,
    empirical_distribution,
    mu0,
    rhs_closed_form,
    sample_chart_array,
)
from .quadrature import integrate_adaptive
from .sphere import ascend, hermitian_form
from .symrep import DensityOperator, SpaceSignature, haar_unit_vectors, one_body_matrix

MC_SIGMAS = 3.0
ROUNDOFF = 64 * np.finfo(float).eps


class ConvergenceError(RuntimeError):
    """No start of a multi-start optimisation reached the gradient tolerance."""


class MCEstimate(NamedTuple):
    value: float
    mc_error: float


class HusimiEvaluator:
    """u(z) = <c(z)|rho|c(z)> on CP^{N-1}, seen from the sphere or the chart."""

    def __init__(self, rho: DensityOperator):
        self.rho = rho
        self.sig = rho.sig

    def on_lifts(self, lifts):
        """Values at unit vectors of C^N, one per row."""
        return kernels.husimi_values(
            lifts, self.sig.exps, self.sig.sqrt_mult, self.rho.vecs, self.rho.weights
        )

    def on_chart(self, zprime):
        zp = np.atleast_2d(np.asarray(zprime, dtype=np.complex128))
        z = np.concatenate([np.ones((zp.shape[0], 1)), zp], axis=1)
        return self.on_lifts(z / np.linalg.norm(z, axis=1, keepdims=True))

    def eval(self, p: ChartPoint) -> float:
        return float(self.on_lifts(p.lift[None, :])[0])

    def at_vector(self, v) -> float:
        v = np.asarray(v, dtype=np.complex128)
        return float(self.on_lifts((v / np.linalg.norm(v))[None, :])[0])

    def __call__(self, p):
        if isinstance(p, ChartPoint):
            return self.eval(p)
        return self.at_vector(p)


def husimi(rho: DensityOperator, p: ChartPoint) -> float:
    return HusimiEvaluator(rho).eval(p)


def husimi_gradient(rho: DensityOperator, v):
    """Value and Euclidean gradient of v -> <c(v)|rho|c(v)> on C^N.

    The gradient is the complex vector of real partials ``d/dRe v + i d/dIm v``.
    ``v`` need not be normalised; the function is homogeneous of degree 2M.
    """
    f, G = hermitian_form(rho.matrix, np.asarray(v)[None, :], rho.sig)
    return float(f[0]), G[0]


# --------------------------------------------------------------------------
# Monte-Carlo sides of the inequality


def husimi_sample(rho: DensityOperator, n: int, seed: int, threads: int = 1, return_lifts=False):
    """Husimi values at ``n`` seeded uniform points, optionally with the points."""
    sample = sample_chart_array(rho.sig.N, n, seed, threads=threads)
    u = HusimiEvaluator(rho).on_lifts(sample.lift)
    return (u, sample.lift) if return_lifts else u


def coherent_husimi(w, lifts, M: int) -> np.ndarray:
    """|<w|z>|^{2M}: the Husimi function of the coherent state of ``w``."""
    w = np.asarray(w, dtype=np.complex128)
    return np.abs(lifts @ np.conj(w / np.linalg.norm(w))) ** (2 * M)


def _mc(values):
    n = values.size
    return MCEstimate(float(values.mean()), float(values.std(ddof=1) / math.sqrt(n)))


def entropy_lhs(rho: DensityOperator, phi: ConvexFunctional, n: int, seed: int) -> MCEstimate:
    """MC estimate of the mean of Phi(u) over CP^{N-1}."""
    if n < 10_000:
        raise ValueError("entropy_lhs needs n >= 10^4 samples")
    return _mc(np.asarray(phi.value(husimi_sample(rho, n, seed)), dtype=float))


@dataclass
class StabilityReport:
    N: int
    M: int
    phi: str
    seed: int
    n_samples: int
    deficit: float
    mc_error: float
    lhs: float
    rhs: float
    lower_bound: float | None = None
    T: float | None = None
    D: float | None = None
    ratio: float | None = None
    passed: bool | None = None
    violations: list[str] = field(default_factory=list)

    def to_dict(self):
        ratio = self.ratio
        if ratio is not None and math.isinf(ratio):
            ratio = "inf"
        return {
            "N": self.N,
            "M": self.M,
            "phi": self.phi,
            "seed": self.seed,
            "n_samples": self.n_samples,
            "T": self.T,
            "D": self.D,
            "deficit": self.deficit,
            "mc_error": self.mc_error,
            "lower_bound": self.lower_bound,
            "ratio": ratio,
            "pass": self.passed,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "violations": list(self.violations),
        }


def deficit_from_values(u, phi, sig, seed=None, tol=1e-10, u_control=None) -> StabilityReport:
    """Deficit for a precomputed Husimi sample ``u``.

    Parameters
    ----------
    u : ndarray
        Husimi values of the state at uniform points.
    u_control : ndarray, optional
        Husimi values of a coherent state at the same points. Their Phi-mean
        is exactly the closed-form rhs, which makes them a control variate:
        the deficit is estimated as ``rhs - mean(Phi(u) - beta (Phi(u_control)
        - rhs))`` with the variance-minimising ``beta``. Near that coherent
        state ``beta -> 1`` and the error vanishes with the deficit itself.
        ``lhs`` is always the plain mean.
    """
    pu = np.asarray(phi.value(u), dtype=float)
    lhs = _mc(pu)
    rhs = rhs_closed_form(phi, sig, tol)
    if u_control is None:
        d, err = rhs - lhs.value, lhs.mc_error
    else:
        pc = np.asarray(phi.value(u_control), dtype=float)
        dc = pc - pc.mean()
        var = float(dc @ dc)
        beta = float(dc @ (pu - pu.mean())) / var if var > 0 else 0.0
        est = _mc(pu - beta * pc)
        d, err = rhs - est.value - beta * rhs, est.mc_error
        # the two Husimi evaluations agree only to round-off
        err = max(err, ROUNDOFF * max(1.0, abs(rhs)))
    rep = StabilityReport(sig.N, sig.M, phi.spec, seed, int(u.size), d, err, lhs.value, rhs)
    rep.passed = d >= -MC_SIGMAS * err
    if not rep.passed:
        rep.violations.append(f"deficit {d:.3e} < -3 sigma ({err:.3e})")
    return rep


def deficit(
    rho: DensityOperator, phi: ConvexFunctional, n: int, seed: int, tol=1e-10, control=None
) -> StabilityReport:
    """rhs_closed_form - entropy_lhs, with only the deficit fields filled in.

    ``control`` is an optional unit vector of C^N whose coherent state serves
    as a control variate (see `deficit_from_values`).
    """
    if n < 10_000:
        raise ValueError("deficit needs n >= 10^4 samples")
    u, lifts = husimi_sample(rho, n, seed, return_lifts=True)
    uc = None if control is None else coherent_husimi(control, lifts, rho.sig.M)
    return deficit_from_values(u, phi, rho.sig, seed, tol, u_control=uc)


# --------------------------------------------------------------------------
# supremum and trace distance


@dataclass(frozen=True)
class SupResult:
    T: float
    argmax_v: np.ndarray
    n_starts: int
    converged: bool
    grad_norm: float
    local_maxima: np.ndarray = field(repr=False, default=None)


def _coherent_guesses(rho: DensityOperator, k: int = 3):
    guesses = []
    for j in range(min(k, rho.rank)):
        gamma = one_body_matrix(rho.psi(j))
        lam, W = np.linalg.eigh(gamma)
        guesses.append(W[:, -1])
        if rho.sig.N > 2:
            guesses.append(W[:, -2])
    return guesses


def _starts(rho, n_starts, seed, extra=()):
    guesses = list(extra) + _coherent_guesses(rho)
    guesses = guesses[: max(1, n_starts // 2)]
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(7,)))
    rand = haar_unit_vectors(rng, rho.sig.N, n_starts - len(guesses))
    return np.vstack([np.array(guesses, dtype=np.complex128).reshape(-1, rho.sig.N), rand])


def sup_husimi(rho: DensityOperator, n_starts: int = 16, seed: int = 0, gtol=1e-9) -> SupResult:
    """T = max of u over CP^{N-1} by multi-start gradient ascent on the sphere.

    Half of the starts come from the one-body matrices of the leading
    eigenvectors of rho (exact maximisers for coherent states), the rest are
    Haar-random.
    """
    if n_starts < 8:
        raise ValueError("sup_husimi needs n_starts >= 8")
    H = rho.matrix

    def fun(V):
        return hermitian_form(H, V, rho.sig)

    res = ascend(fun, _starts(rho, n_starts, seed), gtol=gtol)
    if not res.converged.any():
        raise ConvergenceError(
            f"no start converged (best gradient norm {res.grad_norm.min():.2e})"
        )
    best = int(np.argmax(np.where(res.converged, res.f, -np.inf)))
    if res.f.max() > res.f[best] + 1e-12:
        best = int(np.argmax(res.f))
    v = res.V[best]
    order = np.argsort(-res.f)
    return SupResult(
        T=float(res.f[best]),
        argmax_v=v,
        n_starts=n_starts,
        converged=bool(res.converged.all()),
        grad_norm=float(res.grad_norm[best]),
        local_maxima=res.V[order],
    )


def trace_norm_to_coherent(rho: DensityOperator, v) -> float:
    """||rho - |c(v)><c(v)| ||_1 as the sum of absolute eigenvalues."""
    from .symrep import coherent_coefficients

    c = coherent_coefficients(np.asarray(v) / np.linalg.norm(v), rho.sig).coeffs
    lam = np.linalg.eigvalsh(rho.matrix - np.outer(c, c.conj()))
    return float(np.abs(lam).sum())


def _trace_objective(rho):
    sig = rho.sig
    R = rho.matrix

    def fun(V):
        C = kernels.coherent_matrix(V, sig.exps, sig.sqrt_mult)
        A = R[None, :, :] - C[:, :, None] * C.conj()[:, None, :]
        lam, W = np.linalg.eigh(A)
        # rho - P has at most one negative eigenvalue, so ||.||_1 = -2 lambda_min
        x = W[:, :, 0]
        P = x[:, :, None] * x.conj()[:, None, :]
        f = np.empty(V.shape[0])
        G = np.empty_like(V)
        for s in range(V.shape[0]):
            fs, gs = hermitian_form(P[s], V[s : s + 1], sig)
            f[s] = lam[s, 0]
            G[s] = -gs[0]
        # maximise 2 lambda_min == minimise the trace norm
        return 2.0 * f, 2.0 * G

    return fun


@dataclass(frozen=True)
class TraceDistanceResult:
    D: float
    argmin_v: np.ndarray
    converged: bool


def trace_distance_full(
    rho: DensityOperator, n_starts: int = 16, seed: int = 0, sup: SupResult | None = None, gtol=1e-9
) -> TraceDistanceResult:
    if n_starts < 8:
        raise ValueError("trace_distance needs n_starts >= 8")
    if sup is None:
        sup = sup_husimi(rho, n_starts, seed)
    extra = list(sup.local_maxima[: max(1, n_starts // 4)])
    res = ascend(_trace_objective(rho), _starts(rho, n_starts, seed + 1, extra=extra), gtol=gtol)
    vals = np.array([trace_norm_to_coherent(rho, v) for v in res.V])
    # the Husimi maximiser is always admissible and certifies D^2 <= 4(1 - T)
    at_sup = trace_norm_to_coherent(rho, sup.argmax_v)
    best = int(np.argmin(vals))
    if at_sup <= vals[best]:
        return TraceDistanceResult(at_sup, sup.argmax_v, bool(res.converged.any()))
    if not res.converged.any() and at_sup > vals[best] + 1e-9:
        raise ConvergenceError("no trace-distance start converged")
    return TraceDistanceResult(float(vals[best]), res.V[best], bool(res.converged.any()))


def trace_distance(rho: DensityOperator, n_starts: int = 16, seed: int = 0) -> float:
    """D[rho] = min over unit v of ||rho - |c(v)><c(v)| ||_1."""
    return trace_distance_full(rho, n_starts, seed).D


# --------------------------------------------------------------------------
# stability bounds


def stability_lower_bound(T: float, phi: ConvexFunctional, sig: SpaceSignature, tol=1e-10) -> float:
    """int_T^1 (Phi'(t) - Phi'_-(T)) mu0(t) dt."""
    if not 0 < T <= 1 + 1e-9:
        raise ValueError(f"T must lie in (0, 1], got {T}")
    T = min(float(T), 1.0)
    if T == 1.0:
        return 0.0
    slope = float(phi.left_derivative(T))

    def f(t):
        return (float(phi.right_derivative(t)) - slope) * float(mu0(t, sig))

    kinks = [k for k in phi.kinks if T < k < 1]
    return integrate_adaptive(f, T, 1.0, tol, points=kinks).value


def verify_lemma23(
    rho: DensityOperator,
    phi: ConvexFunctional,
    n: int,
    seed: int,
    n_starts: int = 16,
    tol=1e-10,
    u=None,
    lifts=None,
    control=True,
    sup: SupResult | None = None,
    td: TraceDistanceResult | None = None,
) -> StabilityReport:
    """Full stability report; violations are recorded, never raised.

    ``u`` and ``lifts`` may carry a precomputed sample to share across
    functionals. With ``control`` the deficit uses the Husimi argmax as a
    coherent control variate, which keeps near-coherent states resolvable;
    that needs the sample points, so it is skipped when only ``u`` is given.
    ``sup`` and ``td`` skip the optimisations when sweeping several Phi.
    """
    if u is None:
        u, lifts = husimi_sample(rho, n, seed, return_lifts=True)
    if sup is None:
        sup = sup_husimi(rho, n_starts, seed)
    uc = None
    if control and lifts is not None:
        uc = coherent_husimi(sup.argmax_v, lifts, rho.sig.M)
    rep = deficit_from_values(u, phi, rho.sig, seed, tol, u_control=uc)
    if td is None:
        td = trace_distance_full(rho, n_starts, seed, sup=sup)
    rep.T, rep.D = sup.T, td.D
    rep.lower_bound = stability_lower_bound(sup.T, phi, rho.sig, tol)
    rep.ratio = rep.deficit / td.D**2 if td.D > 0 else math.inf
    margin = MC_SIGMAS * rep.mc_error
    if rep.deficit < rep.lower_bound - margin:
        rep.violations.append(
            f"deficit {rep.deficit:.6e} below lower bound {rep.lower_bound:.6e} - 3 sigma"
        )
    if td.D**2 > 4.0 * (1.0 - sup.T) + 1e-9:
        rep.violations.append(f"D^2 = {td.D**2:.6e} exceeds 4(1-T) = {4 * (1 - sup.T):.6e}")
    rep.passed = not rep.violations
    return rep


@dataclass(frozen=True)
class ConcentrationFit:
    """Smallest C0 with mu(t) <= (1 + C0 (1-T)) mu0(t/T) on the grid.

    ``T0`` records the supremum of u for the state the fit was made on.
    """

    t0: float
    T0: float
    C0_hat: float
    grid: list[tuple[float, float, float]]
    n_samples: int

    def holds(self, sigmas=MC_SIGMAS):
        """Check the fitted bound on the grid up to ``sigmas`` binomial errors."""
        f = 1.0 + self.C0_hat * (1.0 - self.T0)
        n = self.n_samples
        return all(
            m <= f * m0 + sigmas * math.sqrt(max(m0 * (1 - m0), 1.0 / n) / n) for _, m, m0 in self.grid
        )


def fit_concentration(
    rho: DensityOperator, t0: float, n: int, seed: int, n_grid: int = 50, n_starts: int = 16
) -> ConcentrationFit:
    sup = sup_husimi(rho, n_starts, seed)
    T = min(sup.T, 1.0)
    if T <= t0:
        raise ValueError(f"sup of u ({T:.4f}) does not exceed t0 = {t0}")
    dist = empirical_distribution(HusimiEvaluator(rho), n, seed)
    ts = np.linspace(t0, T, n_grid + 1)[:-1]
    emp = dist.mu(ts)
    ref = mu0(np.clip(ts / T, 0.0, 1.0), rho.sig)
    grid = [(float(t), float(m), float(r)) for t, m, r in zip(ts, emp, ref)]
    gap = 1.0 - T
    if gap <= 1e-12:
        c0 = 0.0
    else:
        mask = ref > 0
        need = (emp[mask] / ref[mask] - 1.0) / gap
        c0 = float(max(0.0, need.max(initial=0.0)))
        if np.any((~mask) & (emp > 0)):
            c0 = math.inf
    return ConcentrationFit(float(t0), float(T), c0, grid, int(n))
