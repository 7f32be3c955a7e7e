"""Hot inner loops, each in two flavours.

Every kernel has an explicit-loop form compiled with numba's ``@njit`` and a
vectorised pure-numpy form. The module-level names (``bound_terms``,
``bound_recursion``, ``rank_one_update``) point at one of the two, chosen once
at import time from the ``DGRKIT_BACKEND`` environment variable:

* ``DGRKIT_BACKEND=numba`` (default when numba imports cleanly)
* ``DGRKIT_BACKEND=numpy`` forces the fallback path

Both flavours are always importable as ``*_numba`` / ``*_numpy`` so tests and
``benchmarks/bench_kernels.py`` can compare them side by side.
"""
import logging
import math
import os

import numpy as np

log = logging.getLogger(__name__)

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional extra
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def _resolve_backend():
    requested = os.environ.get("DGRKIT_BACKEND", "").strip().lower()
    if requested not in ("", "numba", "numpy"):
        log.warning("unknown DGRKIT_BACKEND=%r, using default", requested)
        requested = ""
    if requested == "numpy":
        return "numpy"
    if not HAVE_NUMBA:
        if requested == "numba":
            log.warning("numba requested but not importable; using numpy")
        return "numpy"
    return "numba"


BACKEND = _resolve_backend()


# --------------------------------------------------------------------------
# Realized trajectory-bound terms
#
# a[t]    = |At^t Az0|                               t = 0..N-1
# b[t, r] = sqrt(|At^(t-r) Bt zbar_r|^2 + |At^(t-r) D wbar_r|^2)   1 <= r <= t
# --------------------------------------------------------------------------


@njit(cache=True)
def _matvec(M, v, out):
    n, k = M.shape
    for i in range(n):
        s = 0.0
        for j in range(k):
            s += M[i, j] * v[j]
        out[i] = s


@njit(cache=True)
def bound_terms_numba(At, Bt, D, Az0, zbar, wbar):
    N, n = zbar.shape
    a = np.empty(N)
    b = np.zeros((N, N))
    v = Az0.copy()
    tmp = np.empty(n)
    for t in range(N):
        s = 0.0
        for i in range(n):
            s += v[i] * v[i]
        a[t] = math.sqrt(s)
        _matvec(At, v, tmp)
        v[:] = tmp
    p = np.empty(n)
    q = np.empty(n)
    for r in range(1, N):
        _matvec(Bt, zbar[r], p)
        _matvec(D, wbar[r], q)
        for t in range(r, N):
            s = 0.0
            for i in range(n):
                s += p[i] * p[i] + q[i] * q[i]
            b[t, r] = math.sqrt(s)
            if t + 1 < N:
                _matvec(At, p, tmp)
                p[:] = tmp
                _matvec(At, q, tmp)
                q[:] = tmp
    return a, b


def bound_terms_numpy(At, Bt, D, Az0, zbar, wbar):
    N, n = zbar.shape
    a = np.empty(N)
    v = np.array(Az0, dtype=float)
    for t in range(N):
        a[t] = np.linalg.norm(v)
        v = At @ v
    b = np.zeros((N, N))
    if N < 2:
        return a, b
    # column j of P/Q tracks At^k applied to the r = j + 1 channel
    P = Bt @ zbar[1:].T
    Q = D @ wbar[1:].T
    r = np.arange(1, N)
    for k in range(N - 1):
        cols = N - 1 - k
        b[r[:cols] + k, r[:cols]] = np.sqrt(
            np.einsum("ij,ij->j", P[:, :cols], P[:, :cols])
            + np.einsum("ij,ij->j", Q[:, :cols], Q[:, :cols])
        )
        P = At @ P[:, : cols - 1] if cols > 1 else P[:, :0]
        Q = At @ Q[:, : cols - 1] if cols > 1 else Q[:, :0]
    return a, b


@njit(cache=True)
def bound_recursion_numba(a, b):
    N = a.shape[0]
    L = np.empty(N + 1)
    L[0] = 1.0
    if N == 0:
        return L
    L[1] = a[0]
    for t in range(1, N):
        s = a[t]
        for r in range(1, t + 1):
            s += b[t, r] * L[r]
        L[t + 1] = s
    return L


def bound_recursion_numpy(a, b):
    N = a.shape[0]
    L = np.empty(N + 1)
    L[0] = 1.0
    if N == 0:
        return L
    L[1] = a[0]
    for t in range(1, N):
        L[t + 1] = a[t] + b[t, 1 : t + 1] @ L[1 : t + 1]
    return L


# --------------------------------------------------------------------------
# Recursive projector / estimate update (one informative sample)
#
#   z = (I - P) x ;  if |z| > tau:  Q += (y - Q x) z^+ ,  P += z z^+
# Updates Q and P in place and returns |z|.
# --------------------------------------------------------------------------


@njit(cache=True)
def rank_one_update_numba(Q, P, x, y, tau):
    n = x.shape[0]
    z = np.empty(n)
    _matvec(P, x, z)
    nz2 = 0.0
    for i in range(n):
        z[i] = x[i] - z[i]
        nz2 += z[i] * z[i]
    nz = math.sqrt(nz2)
    if nz <= tau:
        return nz
    r = np.empty(n)
    _matvec(Q, x, r)
    for i in range(n):
        r[i] = y[i] - r[i]
    for j in range(n):
        zj = z[j] / nz2
        for i in range(n):
            Q[i, j] += r[i] * zj
            P[i, j] += z[i] * zj
    return nz


def rank_one_update_numpy(Q, P, x, y, tau):
    z = x - P @ x
    nz = float(np.linalg.norm(z))
    if nz <= tau:
        return nz
    zd = z / (nz * nz)
    Q += np.outer(y - Q @ x, zd)
    P += np.outer(z, zd)
    return nz


if BACKEND == "numba":
    bound_terms = bound_terms_numba
    bound_recursion = bound_recursion_numba
    rank_one_update = rank_one_update_numba
else:
    bound_terms = bound_terms_numpy
    bound_recursion = bound_recursion_numpy
    rank_one_update = rank_one_update_numpy
