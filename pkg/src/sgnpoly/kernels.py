"""Hot inner loops, each in a numba and a pure-numpy flavour.

* :func:`centered_square_rows` - per-row reductions of ``(A - c c')^2``
  feeding the SgnT / SgnQ matrix identities.
* :func:`keyed_bernoulli_edges` - order-independent Bernoulli sampling of the
  upper triangle, one counter-based uniform per unordered pair.
* :func:`chi2_log_products` - ``sum_{i<j} log(1 + D_ij D~_ij / (p_ij (1-p_ij)))``
  for a batch of membership draws.

Dispatch happens at call time through :mod:`sgnpoly._accel`.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import _accel
from ._accel import njit, prange

# ---------------------------------------------------------------------------
# counter-based uniforms
# ---------------------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


def _mix_np(z):
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def pair_key(seed: int) -> np.uint64:
    """64-bit stream key derived from an integer seed."""
    with np.errstate(over="ignore"):
        s = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
        return _mix_np(s + _GOLDEN)


def pair_uniforms(key, i, j):
    """Uniform in [0, 1) for the unordered pair {i, j}; numpy reference."""
    i = np.asarray(i, dtype=np.uint64)
    j = np.asarray(j, dtype=np.uint64)
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    with np.errstate(over="ignore"):
        ctr = (hi << _S32) | lo
        h = _mix_np(np.uint64(key) ^ _mix_np(ctr + _GOLDEN))
    return (h >> _S11).astype(np.float64) * _INV53


@njit(cache=True, inline="always")
def _mix_nb(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _pair_uniform_nb(key, i, j):
    ctr = (np.uint64(j) << np.uint64(32)) | np.uint64(i)
    h = _mix_nb(key ^ _mix_nb(ctr + np.uint64(0x9E3779B97F4A7C15)))
    return np.float64(h >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, parallel=True, nogil=True)
def _bernoulli_edges_nb(omega, key):
    n = omega.shape[0]
    counts = np.zeros(n, dtype=np.int64)
    for i in prange(n):
        c = 0
        for j in range(i + 1, n):
            if _pair_uniform_nb(key, i, j) < omega[i, j]:
                c += 1
        counts[i] = c
    offsets = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        offsets[i + 1] = offsets[i] + counts[i]
    rows = np.empty(offsets[n], dtype=np.int64)
    cols = np.empty(offsets[n], dtype=np.int64)
    for i in prange(n):
        pos = offsets[i]
        for j in range(i + 1, n):
            if _pair_uniform_nb(key, i, j) < omega[i, j]:
                rows[pos] = i
                cols[pos] = j
                pos += 1
    return rows, cols


def _bernoulli_edges_np(omega, key):
    n = omega.shape[0]
    rows, cols = [], []
    for i in range(n - 1):
        j = np.arange(i + 1, n, dtype=np.uint64)
        u = pair_uniforms(key, np.full(j.shape, i, dtype=np.uint64), j)
        hit = np.nonzero(u < omega[i, i + 1:])[0]
        rows.append(np.full(hit.shape, i, dtype=np.int64))
        cols.append(hit.astype(np.int64) + i + 1)
    if not rows:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(rows), np.concatenate(cols)


def keyed_bernoulli_edges(omega: np.ndarray, seed: int):
    """Edges ``(rows, cols)`` with ``rows < cols``, sorted lexicographically.

    Pair {i, j} is present iff ``u(seed, i, j) < omega[i, j]`` where ``u`` is a
    pure function of the seed and the pair.
    """
    omega = np.ascontiguousarray(omega, dtype=np.float64)
    key = pair_key(seed)
    if _accel.use_numba():
        return _bernoulli_edges_nb(omega, key)
    return _bernoulli_edges_np(omega, key)


# ---------------------------------------------------------------------------
# (A - c c')^2 row reductions
# ---------------------------------------------------------------------------
#
# With R = (A - cc')^2 = A^2 - u c' - c u' + s cc'   (u = A c, s = c'c)
# and Ac = A - cc' (so Ac_ii = -c_i^2), each row i yields
#   d2[i] = R_ii
#   d3[i] = sum_j R_ij Ac_ij          (diagonal of Ac^3)
#   t4[i] = sum_j R_ij^2              (row contribution to tr Ac^4)
# The Hadamard-only terms need no R and are done in numpy by the caller.


@njit(cache=True, parallel=True, nogil=True)
def _centered_square_rows_nb(indptr, indices, c, u, s):
    n = c.shape[0]
    d2 = np.empty(n)
    d3 = np.empty(n)
    t4 = np.empty(n)
    for i in prange(n):
        row = np.zeros(n)
        for p in range(indptr[i], indptr[i + 1]):
            l = indices[p]
            for q in range(indptr[l], indptr[l + 1]):
                row[indices[q]] += 1.0
        ci = c[i]
        ui = u[i]
        acc4 = 0.0
        accc = 0.0
        for j in range(n):
            r = row[j] - ui * c[j] - ci * u[j] + s * ci * c[j]
            row[j] = r
            acc4 += r * r
            accc += r * c[j]
        nb = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            nb += row[indices[p]]
        d2[i] = row[i]
        d3[i] = nb - ci * accc
        t4[i] = acc4
    return d2, d3, t4


def _centered_square_rows_np(a_csr, c, u, s, block_entries=4_000_000):
    n = c.shape[0]
    d2 = np.empty(n)
    d3 = np.empty(n)
    t4 = np.empty(n)
    step = max(1, block_entries // max(n, 1))
    for start in range(0, n, step):
        stop = min(n, start + step)
        rows = a_csr[start:stop]
        r = (rows @ a_csr).toarray()
        cb = c[start:stop, None]
        r -= u[start:stop, None] * c[None, :]
        r -= cb * u[None, :]
        r += s * cb * c[None, :]
        idx = np.arange(stop - start)
        d2[start:stop] = r[idx, idx + start]
        t4[start:stop] = np.einsum("ij,ij->i", r, r)
        nb = np.asarray(rows.multiply(r).sum(axis=1)).ravel()
        d3[start:stop] = nb - c[start:stop] * (r @ c)
    return d2, d3, t4


def centered_square_rows(a_csr: sp.csr_matrix, c: np.ndarray):
    """Per-row ``(diag R, diag R Ac, rowsum R^2)`` for ``R = (A - cc')^2``.

    ``a_csr`` must be symmetric with zero diagonal and unit entries.  Work is
    O(n^2 + sum_i d_i^2); memory is O(n) per worker (numba) or one row block
    (numpy).
    """
    c = np.ascontiguousarray(c, dtype=np.float64)
    u = np.asarray(a_csr @ c, dtype=np.float64).ravel()
    s = float(c @ c)
    if _accel.use_numba():
        indptr = np.ascontiguousarray(a_csr.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(a_csr.indices, dtype=np.int64)
        return _centered_square_rows_nb(indptr, indices, c, u, s)
    a = a_csr.astype(np.float64)
    return _centered_square_rows_np(a, c, u, s)


# ---------------------------------------------------------------------------
# chi-square log products
# ---------------------------------------------------------------------------


@njit(cache=True, parallel=True, nogil=True)
def _chi2_log_products_nb(xs, ys, xts, yts, t):
    # xs[r] = alt node vectors (theta~ * pi~), ys[r] = xs[r] @ P
    reps, n, k = xs.shape
    out = np.empty(reps)
    worst = np.empty(reps)
    for r in prange(reps):
        acc = 0.0
        big = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                qa = 0.0
                qb = 0.0
                for m in range(k):
                    qa += ys[r, i, m] * xs[r, j, m]
                    qb += yts[r, i, m] * xts[r, j, m]
                p = t[i] * t[j]
                ratio = (qa - p) * (qb - p) / (p * (1.0 - p))
                if abs(ratio) > big:
                    big = abs(ratio)
                acc += np.log1p(ratio)
        out[r] = acc
        worst[r] = big
    return out, worst


def _chi2_log_products_np(xs, ys, xts, yts, t):
    reps, n, _ = xs.shape
    iu = np.triu_indices(n, 1)
    p = np.outer(t, t)[iu]
    denom = p * (1.0 - p)
    out = np.empty(reps)
    worst = np.empty(reps)
    for r in range(reps):
        da = (ys[r] @ xs[r].T)[iu] - p
        db = (yts[r] @ xts[r].T)[iu] - p
        ratio = da * db / denom
        worst[r] = np.max(np.abs(ratio)) if ratio.size else 0.0
        # ratio <= -1 gives nan here; the caller rejects it through ``worst``
        with np.errstate(invalid="ignore", divide="ignore"):
            out[r] = np.sum(np.log1p(ratio))
    return out, worst


def chi2_log_products(xs, xts, p_mat, t):
    """Log of ``prod_{i<j} (1 + D_ij D~_ij / (p_ij (1 - p_ij)))`` per rep.

    ``xs``/``xts`` are ``(reps, n, K)`` stacks of alternative node vectors so
    that ``q_ij = xs[i]' P xs[j]``; the null is ``p_ij = t_i t_j``.  Returns
    ``(log_products, max_abs_ratio)``; the caller enforces the < 1 guard.
    """
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    xts = np.ascontiguousarray(xts, dtype=np.float64)
    p_mat = np.asarray(p_mat, dtype=np.float64)
    ys = np.ascontiguousarray(xs @ p_mat)
    yts = np.ascontiguousarray(xts @ p_mat)
    t = np.ascontiguousarray(t, dtype=np.float64)
    if _accel.use_numba():
        return _chi2_log_products_nb(xs, ys, xts, yts, t)
    return _chi2_log_products_np(xs, ys, xts, yts, t)
