"""Adaptive 1-D quadrature with a hard accuracy contract."""

from __future__ import annotations

import warnings
from typing import NamedTuple

import numpy as np
from scipy import integrate


class QuadratureError(RuntimeError):
    """The requested tolerance was not reached."""


class QuadResult(NamedTuple):
    value: float
    error_estimate: float
    n_evals: int

    def to_dict(self):
        return {"value": self.value, "error_estimate": self.error_estimate, "n_evals": self.n_evals}


def integrate_adaptive(f, a, b, tol=1e-10, points=(), limit=500, rtol=0.0) -> QuadResult:
    """Gauss-Kronrod adaptive integral of ``f`` over [a, b].

    The error estimate must end up below ``max(tol, rtol * |value|)``,
    otherwise :class:`QuadratureError` is raised. The interval is split at
    ``points`` (kinks, singular points) first. Each piece is integrated
    separately so endpoint singularities sit at piece boundaries where the
    21-point rule never samples.
    """
    if b < a:
        r = integrate_adaptive(f, b, a, tol, points, limit, rtol)
        return QuadResult(-r.value, r.error_estimate, r.n_evals)
    if b == a:
        return QuadResult(0.0, 0.0, 0)
    cuts = sorted({a, b, *(float(p) for p in points if a < p < b)})
    pieces = list(zip(cuts[:-1], cuts[1:]))
    total = err = 0.0
    nev = 0
    piece_tol = tol / len(pieces)
    for lo, hi in pieces:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, e, info = integrate.quad(
                f, lo, hi, epsabs=piece_tol, epsrel=rtol, limit=limit, full_output=1
            )[:3]
        total += val
        err += e
        nev += info["neval"]
    bound = max(tol, rtol * abs(total))
    if not np.isfinite(total) or err > bound:
        raise QuadratureError(
            f"quadrature on [{a}, {b}] reached error {err:.3e} > {bound:.1e}"
        )
    return QuadResult(float(total), float(err), int(nev))
