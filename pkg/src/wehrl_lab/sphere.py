"""Batched Riemannian gradient ascent on the unit sphere of C^N.

Used for both the Husimi supremum and the trace distance to the coherent
manifold. All starts advance together; each keeps its own Barzilai-Borwein
step, cut by a factor of four whenever a trial step would decrease the
objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .symrep import SpaceSignature


def hermitian_form(H, V, sig: SpaceSignature):
    """Values and gradients of v -> <c(v)|H|c(v)> for each row of ``V``.

    The gradient is returned as the complex vector ``dx + i dy`` of real
    partial derivatives, i.e. ``2 df/d(conj v)``.
    """
    V = np.atleast_2d(np.asarray(V, dtype=np.complex128))
    S, N = V.shape
    exps, sm = sig.exps, sig.sqrt_mult
    M = sig.M
    C = kernels.coherent_matrix(V, exps, sm)
    HC = C @ np.asarray(H).T
    f = np.einsum("sa,sa->s", C.conj(), HC).real

    pw = np.empty((M + 1, S, N), dtype=np.complex128)
    pw[0] = 1.0
    for e in range(1, M + 1):
        pw[e] = pw[e - 1] * V
    G = np.empty((S, N), dtype=np.complex128)
    for i in range(N):
        E = exps.copy()
        active = E[:, i] > 0
        E[active, i] -= 1
        dC = np.ones((S, exps.shape[0]), dtype=np.complex128)
        for k in range(N):
            dC *= pw[E[:, k], :, k].T
        dC *= np.where(active, sm * exps[:, i], 0.0)
        G[:, i] = 2.0 * np.einsum("sa,sa->s", dC.conj(), HC)
    return f, G


def tangent(V, G):
    """Project Euclidean gradients onto the tangent spaces of the sphere."""
    radial = np.einsum("sn,sn->s", V.conj(), G).real
    return G - radial[:, None] * V


def _normalize(V):
    return V / np.linalg.norm(V, axis=1, keepdims=True)


@dataclass
class AscentResult:
    V: np.ndarray
    f: np.ndarray
    grad_norm: np.ndarray
    converged: np.ndarray
    n_iter: int


def ascend(fun, V0, gtol=1e-9, max_iter=20000, step0=0.5):
    """Maximise ``fun`` over the sphere from every row of ``V0``.

    ``fun(V)`` must return ``(f, G)`` with ``G`` the Euclidean gradient in the
    convention of :func:`hermitian_form`.
    """
    V = _normalize(np.array(V0, dtype=np.complex128))
    S = V.shape[0]
    f, G = fun(V)
    R = tangent(V, G)
    gn = np.linalg.norm(R, axis=1)
    step = np.full(S, step0)
    done = gn < gtol
    it = 0
    while not done.all() and it < max_iter:
        it += 1
        act = ~done
        Vt = _normalize(V[act] + step[act, None] * R[act])
        ft, Gt = fun(Vt)
        tol_f = 1e-15 * np.maximum(1.0, np.abs(f[act]))
        ok = ft >= f[act] - tol_f
        idx = np.flatnonzero(act)
        bad = idx[~ok]
        step[bad] *= 0.25
        good = idx[ok]
        if good.size:
            Rt = tangent(Vt[ok], Gt[ok])
            s = Vt[ok] - V[good]
            y = Rt - R[good]
            ss = np.einsum("sn,sn->s", s.conj(), s).real
            sy = np.abs(np.einsum("sn,sn->s", s.conj(), y).real)
            with np.errstate(divide="ignore", invalid="ignore"):
                bb = np.where(sy > 0, ss / sy, 2.0 * step[good])
            V[good], f[good], R[good] = Vt[ok], ft[ok], Rt
            step[good] = np.clip(bb, 1e-8, 1e3)
            gn[good] = np.linalg.norm(Rt, axis=1)
        # a start whose step underflowed sits at a numerical maximum
        stalled = step < 1e-14
        done = (gn < gtol) | stalled
    return AscentResult(V, f, gn, gn < gtol, it)
