"""Hot loops: batched coherent embeddings and Husimi values.

Every public function dispatches to a numba kernel or to a vectorised numpy
implementation depending on :func:`wehrl_lab._accel.numba_enabled`. Both
paths take the same arguments:

``lifts``      (n, N) complex, unit vectors in C^N
``exps``       (dim, N) int64, the multi-indices of the symmetric basis
``sqrt_mult``  (dim,) float, sqrt(M!/alpha!) for each multi-index
"""

import numpy as np

from ._accel import njit, numba_enabled

CHUNK = 65536


# --------------------------------------------------------------------------
# numpy path


def _power_table(z, degree):
    # pw[e, i, k] = z[i, k] ** e, built by repeated multiplication so 0**0 == 1
    n, N = z.shape
    pw = np.empty((degree + 1, n, N), dtype=np.complex128)
    pw[0] = 1.0
    for e in range(1, degree + 1):
        pw[e] = pw[e - 1] * z
    return pw


def _coherent_matrix_np(lifts, exps, sqrt_mult):
    degree = int(exps[0].sum())
    pw = _power_table(lifts, degree)
    n, N = lifts.shape
    out = np.empty((n, exps.shape[0]), dtype=np.complex128)
    out[:] = sqrt_mult
    for k in range(N):
        out *= pw[exps[:, k], :, k].T
    return out


def _husimi_np(lifts, exps, sqrt_mult, vecs, weights):
    n = lifts.shape[0]
    out = np.empty(n)
    for start in range(0, n, CHUNK):
        stop = min(start + CHUNK, n)
        C = _coherent_matrix_np(lifts[start:stop], exps, sqrt_mult)
        A = C.conj() @ vecs
        out[start:stop] = (A.real**2 + A.imag**2) @ weights
    return out


# --------------------------------------------------------------------------
# numba path


@njit(cache=True)
def _coherent_row_nb(z, exps, sqrt_mult, pw, row):
    N = z.shape[0]
    degree = pw.shape[0] - 1
    for k in range(N):
        pw[0, k] = 1.0
        for e in range(1, degree + 1):
            pw[e, k] = pw[e - 1, k] * z[k]
    for a in range(exps.shape[0]):
        c = sqrt_mult[a] + 0j
        for k in range(N):
            c *= pw[exps[a, k], k]
        row[a] = c


@njit(cache=True)
def _coherent_matrix_nb(lifts, exps, sqrt_mult, degree):
    n, N = lifts.shape
    dim = exps.shape[0]
    out = np.empty((n, dim), dtype=np.complex128)
    pw = np.empty((degree + 1, N), dtype=np.complex128)
    for i in range(n):
        _coherent_row_nb(lifts[i], exps, sqrt_mult, pw, out[i])
    return out


@njit(cache=True)
def _husimi_nb(lifts, exps, sqrt_mult, vecs, weights, degree):
    n, N = lifts.shape
    dim, rank = vecs.shape
    out = np.empty(n)
    pw = np.empty((degree + 1, N), dtype=np.complex128)
    row = np.empty(dim, dtype=np.complex128)
    for i in range(n):
        _coherent_row_nb(lifts[i], exps, sqrt_mult, pw, row)
        acc = 0.0
        for j in range(rank):
            s = 0j
            for a in range(dim):
                s += np.conj(row[a]) * vecs[a, j]
            acc += weights[j] * (s.real * s.real + s.imag * s.imag)
        out[i] = acc
    return out


# --------------------------------------------------------------------------
# dispatch


def _prep(lifts, exps, sqrt_mult):
    lifts = np.ascontiguousarray(np.atleast_2d(lifts), dtype=np.complex128)
    exps = np.ascontiguousarray(exps, dtype=np.int64)
    sqrt_mult = np.ascontiguousarray(sqrt_mult, dtype=np.float64)
    return lifts, exps, sqrt_mult


def coherent_matrix(lifts, exps, sqrt_mult):
    """Rows are the symmetric-basis coordinates of the tensor powers of ``lifts``."""
    lifts, exps, sqrt_mult = _prep(lifts, exps, sqrt_mult)
    if numba_enabled():
        return _coherent_matrix_nb(lifts, exps, sqrt_mult, int(exps[0].sum()))
    return _coherent_matrix_np(lifts, exps, sqrt_mult)


def husimi_values(lifts, exps, sqrt_mult, vecs, weights):
    """Evaluate ``sum_j w_j |<c(z)|psi_j>|^2`` at every row ``z`` of ``lifts``.

    ``vecs`` holds the vectors psi_j as columns, shape (dim, rank).
    """
    lifts, exps, sqrt_mult = _prep(lifts, exps, sqrt_mult)
    vecs = np.ascontiguousarray(vecs, dtype=np.complex128)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if numba_enabled():
        return _husimi_nb(lifts, exps, sqrt_mult, vecs, weights, int(exps[0].sum()))
    return _husimi_np(lifts, exps, sqrt_mult, vecs, weights)
