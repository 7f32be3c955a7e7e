"""Instability numbers and trajectory bounds for data-guided regulation.

The instability number of order t is

    M_t(A) = sup over orthonormal {v_1..v_t} of |A v_1| |A v_2| ... |A v_t|.

It has no known closed form. ``instability_bounds`` gives the analytic
sandwich on M_t^2; ``estimate_instability`` climbs towards the supremum from
below. Anything that claims to be a guarantee (``m_based_bound``) uses the
analytic upper bound, never the estimate.
"""
from dataclasses import dataclass
from math import comb

import numpy as np

from . import kernels
from .errors import BoundNotApplicable, InvalidInput, InvalidOrder
from .numkernel import as_matrix, operator_norm, pinv, range_projector
from .regan import atilde, btilde, is_regularizable
from .regulator import g_alpha

MAX_SWEEPS = 500
SWEEP_RTOL = 1e-10


def _check_order(A, t):
    n = A.shape[0]
    if A.shape != (n, n):
        raise InvalidInput("A must be square")
    if not 1 <= t <= n:
        raise InvalidOrder(f"order t={t} must satisfy 1 <= t <= n={n}")


def instability_bounds(A, t):
    """Analytic ``(lower, upper)`` bounds on ``M_t(A)**2``.

    lower = (s1^2/t)^t
    upper = (s1^2/t)^t + sum_{j=1}^{t-1} (s1^2/(t-j))^(t-j) C(t,j) d^j + d^t
    with ``d = s_2^2 + ... + s_t^2``.
    """
    A = as_matrix(A, "A")
    _check_order(A, t)
    s = np.linalg.svd(A, compute_uv=False)
    s1sq = s[0] ** 2
    delta = float(np.sum(s[1:t] ** 2))
    lower = (s1sq / t) ** t
    upper = lower + delta**t
    for j in range(1, t):
        upper += (s1sq / (t - j)) ** (t - j) * comb(t, j) * delta**j
    return float(lower), float(upper)


@dataclass
class InstabilityEstimate:
    order: int
    value: float
    analytic_lower: float
    analytic_upper: float
    frame: np.ndarray


def frame_value(A, V):
    return float(np.prod(np.linalg.norm(A @ V, axis=0)))


def appendix_frame(A, t):
    """Orthonormal t-frame with ``|<u_1, v_i>| = 1/sqrt(t)`` for the top right-singular ``u_1``.

    The frame lives in the span of the top t right-singular vectors; a
    Householder reflection sends ``e_1`` to the uniform vector, so its first
    row is constant ``1/sqrt(t)``.
    """
    _, _, Vt = np.linalg.svd(A)
    U = Vt[:t].T
    if t == 1:
        return U
    w = np.zeros(t)
    w[0] = 1.0
    w -= np.full(t, 1.0 / np.sqrt(t))
    H = np.eye(t) - 2.0 * np.outer(w, w) / (w @ w)
    return U @ H


def _complement_basis(V, skip, n):
    others = np.delete(V, skip, axis=1)
    if others.shape[1] == 0:
        return np.eye(n)
    Q, _ = np.linalg.qr(others, mode="complete")
    return Q[:, others.shape[1]:]


def _pair_step(AtA, V, i, j):
    """Best (v_i, v_j) in the complement of the other frame vectors.

    Within a fixed 2-D subspace with Gram matrix M the product
    ``|A v_i|^2 |A v_j|^2`` peaks at ``(tr M / 2)^2`` when both lengths are
    equal, so the optimal plane is spanned by the top two eigenvectors of the
    compressed Gram matrix and the pair is rotated 45 degrees from them.
    """
    n = V.shape[0]
    N = _complement_basis(V, [i, j], n)
    lam, E = np.linalg.eigh(N.T @ AtA @ N)
    e1 = N @ E[:, -1]
    e2 = N @ E[:, -2]
    V[:, i] = (e1 + e2) / np.sqrt(2.0)
    V[:, j] = (e1 - e2) / np.sqrt(2.0)


def _single_step(AtA, V, i):
    n = V.shape[0]
    N = _complement_basis(V, [i], n)
    lam, E = np.linalg.eigh(N.T @ AtA @ N)
    V[:, i] = N @ E[:, -1]


def _ascend(A, V):
    AtA = A.T @ A
    t = V.shape[1]
    best = frame_value(A, V)
    for _ in range(MAX_SWEEPS):
        prev = best
        for i in range(t):
            trial = V.copy()
            _single_step(AtA, trial, i)
            val = frame_value(A, trial)
            if val > best:
                V, best = trial, val
        for i in range(t):
            for j in range(i + 1, t):
                trial = V.copy()
                _pair_step(AtA, trial, i, j)
                val = frame_value(A, trial)
                if val > best:
                    V, best = trial, val
        if best - prev <= SWEEP_RTOL * max(prev, 1e-300):
            break
    return V, best


def estimate_instability(A, t, restarts=8, seed=0):
    """Certified lower bound on ``M_t(A)`` by block-coordinate ascent over orthonormal frames.

    Restart 0 always starts from :func:`appendix_frame`, so the result is never
    below ``sqrt`` of the analytic lower bound. Further restarts start from
    random orthonormal frames drawn from per-restart child seeds; the result is
    the best frame over all restarts, so more restarts never decrease it.
    """
    A = as_matrix(A, "A")
    _check_order(A, t)
    if restarts < 1:
        raise InvalidInput("restarts must be >= 1")
    n = A.shape[0]
    lower, upper = instability_bounds(A, t)
    if t == 1:
        # M_1 is the operator norm; skip the search so value**2 == lower exactly
        s1 = np.linalg.svd(A, compute_uv=False)[0]
        Vt = np.linalg.svd(A)[2]
        return InstabilityEstimate(1, float(s1), lower, upper, Vt[:1].T.copy())
    children = np.random.SeedSequence(seed).spawn(restarts)
    best_V, best = None, -1.0
    for k in range(restarts):
        if k == 0:
            V0 = appendix_frame(A, t)
        else:
            G = np.random.default_rng(children[k]).standard_normal((n, t))
            V0, _ = np.linalg.qr(G)
        V, val = _ascend(A, V0)
        if val > best:
            best_V, best = V, val
    return InstabilityEstimate(
        order=t, value=best, analytic_lower=lower, analytic_upper=upper, frame=best_V
    )


@dataclass
class BoundSeries:
    """Realized bound terms.

    ``L[t]`` bounds ``|x_t| / |x_0|`` (``L[0] = 1``); ``a[t]`` and ``b[t, r]``
    are the terms of the recursion ``L[t+1] = a[t] + sum_{r=1..t} b[t, r] L[r]``.
    """

    a: np.ndarray
    b: np.ndarray
    L: np.ndarray
    alpha: float


def delta_alpha(sys, alpha):
    """``B (B^+ - G_alpha) A``: the part of the data channel left uncancelled by regularization."""
    return sys.B @ (pinv(sys.B) - g_alpha(sys.B, alpha)) @ sys.A


def _unit_or_zero(rows, n, name):
    Z = np.ascontiguousarray(np.asarray(rows, dtype=float).reshape(-1, n))
    norms = np.linalg.norm(Z, axis=1)
    ok = (norms == 0) | (np.abs(norms - 1.0) <= 1e-8)
    if not ok.all():
        raise InvalidInput(f"{name} entries must be unit vectors or exactly zero")
    return Z


def trajectory_bound_series(sys, alpha, zbar, wbar):
    """Evaluate the realized bound recursion along a regulated trajectory.

    ``zbar[r]`` / ``wbar[r]`` are the normalized new-direction and in-span
    components of ``x_r`` relative to ``x_0..x_{r-1}`` (zero when the
    component vanishes); ``zbar[0] = x_0/|x_0|``. With N entries the result
    holds ``L[0..N]``.
    """
    n = sys.n
    Z = _unit_or_zero(zbar, n, "zbar")
    W = _unit_or_zero(wbar, n, "wbar")
    if Z.shape != W.shape:
        raise InvalidInput("zbar and wbar must have the same length")
    if Z.shape[0] == 0:
        raise InvalidInput("need at least zbar_0")
    At = np.ascontiguousarray(atilde(sys))
    Bt = np.ascontiguousarray(btilde(sys))
    D = np.ascontiguousarray(delta_alpha(sys, alpha))
    Az0 = np.ascontiguousarray(sys.A @ Z[0])
    a, b = kernels.bound_terms(At, Bt, D, Az0, Z, W)
    L = kernels.bound_recursion(a, b)
    return BoundSeries(a=a, b=b, L=L, alpha=float(alpha))


def normalized_directions(X):
    """Unit (or zero) ``z_r, w_r`` for the columns of a state history ``X = [x_0 .. x_T]``."""
    X = as_matrix(X, "X")
    n, T1 = X.shape
    zbar = np.zeros((T1, n))
    wbar = np.zeros((T1, n))
    for r in range(T1):
        x = X[:, r]
        if r == 0:
            z, w = x, np.zeros(n)
        else:
            Pi = range_projector(X[:, :r])
            w = Pi @ x
            z = x - w
        zbar[r] = _unit(z)
        wbar[r] = _unit(w)
    return zbar, wbar


def _unit(v):
    # rescale by the largest entry first so subnormal vectors still come out unit length
    peak = np.max(np.abs(v)) if v.size else 0.0
    if not np.isfinite(peak) or peak == 0.0:
        return np.zeros_like(v)
    s = v / peak
    return s / np.linalg.norm(s)


def m_upper(A, t):
    """Certified upper bound on ``M_t(A)``."""
    return float(np.sqrt(instability_bounds(A, t)[1]))


def _ky_fan_upper(A, t):
    # sum |A v_i|^2 over an orthonormal t-frame is at most s_1^2 + .. + s_t^2,
    # and the product of t nonnegative numbers is at most their mean to the t
    s = np.linalg.svd(A, compute_uv=False)
    return float(np.sqrt((np.sum(s[:t] ** 2) / t) ** t))


def m_based_bound(sys, t, use_special=False):
    """Worst-case bound on ``|x_t| / |x_0|`` from instability numbers.

    ``use_special``: requires R(A) in R(B); returns a certified upper bound on
    M_t(A), the smaller of the analytic bound and ``sqrt(((s_1^2+..+s_t^2)/t)^t)``.
    Otherwise requires a regularizable pair with ``Atilde Btilde = 0`` and
    returns ``M_{t+1} + a_t + sum_{r=1}^{t-1} M_r a_{t-r}`` for ``|x_{t+1}|``,
    with each M replaced by its analytic upper bound and each
    ``a_k = |Atilde^k A z0|`` by its worst case over unit ``z0``,
    ``|Atilde^k A|``.
    """
    A = sys.A
    nA = max(1.0, operator_norm(A))
    if use_special:
        resid = operator_norm(A - range_projector(sys.B) @ A)
        if resid > 1e-10 * nA:
            raise BoundNotApplicable(f"R(A) not contained in R(B): residual {resid:.3g}")
        _check_order(A, t)
        return min(m_upper(A, t), _ky_fan_upper(A, t))
    At = atilde(sys)
    if operator_norm(At @ btilde(sys)) > 1e-10 * nA**2:
        raise BoundNotApplicable("Atilde @ Btilde is not zero")
    if not is_regularizable(sys)[0]:
        raise BoundNotApplicable("pair is not regularizable")
    _check_order(A, t + 1)
    a = []
    v = A.copy()
    for _ in range(t + 1):
        a.append(operator_norm(v))
        v = At @ v
    total = m_upper(A, t + 1) + a[t]
    for r in range(1, t):
        total += m_upper(A, r) * a[t - r]
    return float(total)
