"""Online regulators that learn from the single trajectory they are steering.

Both controllers emit ``u_t = -K_t x_t`` with ``K_{t+1} = G_alpha Y_{t+1} X_t^+``
where ``X_t = [x_0 .. x_t]`` and ``Y_{t+1}`` holds the observed responses
``x_{s+1} - B u_s``. :class:`DgrState` keeps the full data matrices and
recomputes the pseudoinverse every step; :class:`FdgrState` keeps only the
range projector ``P`` and the estimate ``Q = Y X^+`` and updates both with
rank-one corrections.

Usage::

    state = dgr_init(B, alpha, x0)          # state.u == 0
    x = plant(x0, state.u)
    for _ in range(T):
        state, u = dgr_step(state, x)
        x = plant(x, u)
"""
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import DegenerateStart, InsufficientData, InvalidInput
from .numkernel import as_matrix, as_vector, pinv, pinv_append_column, range_projector


def g_alpha(B, alpha):
    """``(alpha I + B^T B)^+ B^T``; equals ``B^+`` at alpha = 0."""
    if not np.isfinite(alpha) or alpha < 0:
        raise InvalidInput(f"alpha must be >= 0, got {alpha}")
    B = as_matrix(B, "B")
    if alpha == 0:
        # direct pinv avoids squaring the condition number through B^T B
        return pinv(B)
    m = B.shape[1]
    return pinv(alpha * np.eye(m) + B.T @ B) @ B.T


def z_threshold(x):
    return 1e-10 * max(1.0, float(np.linalg.norm(x)))


def decompose_zw(X_hist, x):
    """Split ``x`` into ``z`` orthogonal to R(X_hist) and ``w`` inside it.

    An empty history (zero columns) gives ``z = x, w = 0``.
    """
    x = as_vector(x, "x")
    X = np.asarray(X_hist, dtype=float)
    if X.size == 0:
        return x.copy(), np.zeros_like(x)
    X = X.reshape(x.shape[0], -1)
    w = range_projector(X) @ x
    return x - w, w


@dataclass(frozen=True)
class DgrState:
    alpha: float
    B: np.ndarray
    G_alpha: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    K: np.ndarray
    Q: np.ndarray
    u: np.ndarray
    t: int = 0


def _check_B(B):
    B = as_matrix(B, "B")
    return B


def dgr_init(B, alpha, x0):
    B = _check_B(B)
    x0 = as_vector(x0, "x0")
    n, m = B.shape
    if x0.shape[0] != n:
        raise InvalidInput("x0 does not match B")
    return DgrState(
        alpha=float(alpha),
        B=B,
        G_alpha=g_alpha(B, alpha),
        X=x0.reshape(n, 1),
        Y=np.zeros((n, 0)),
        K=np.zeros((m, n)),
        Q=np.zeros((n, n)),
        u=np.zeros(m),
        t=0,
    )


def dgr_step(state, x_next):
    """Absorb the plant's response to ``state.u``; return the new state and the next input."""
    x_next = as_vector(x_next, "x_next")
    n = state.X.shape[0]
    if x_next.shape[0] != n:
        raise InvalidInput("x_next has the wrong dimension")
    y = x_next - state.B @ state.u
    Y = np.hstack([state.Y, y.reshape(n, 1)])
    Q = Y @ pinv(state.X)
    K = state.G_alpha @ Q
    u = -K @ x_next
    new = replace(
        state,
        X=np.hstack([state.X, x_next.reshape(n, 1)]),
        Y=Y,
        K=K,
        Q=Q,
        u=u,
        t=state.t + 1,
    )
    return new, u


@dataclass(frozen=True)
class FdgrState:
    alpha: float
    B: np.ndarray
    G_alpha: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    X_pinv: np.ndarray
    K: np.ndarray
    x: np.ndarray
    u: np.ndarray
    t: int = 1
    last_z_norm: float = 0.0


def fdgr_init(B, alpha, x0, x1):
    """Start the recursive regulator from ``x0`` and the open-loop response ``x1 = A x0``.

    The returned state's ``u`` is the first feedback input ``-K_1 x_1``.
    """
    B = _check_B(B)
    x0 = as_vector(x0, "x0")
    x1 = as_vector(x1, "x1")
    n = B.shape[0]
    if x0.shape[0] != n or x1.shape[0] != n:
        raise InvalidInput("x0/x1 do not match B")
    s = float(x0 @ x0)
    if s == 0.0:
        raise DegenerateStart("x0 = 0 carries no information")
    G = g_alpha(B, alpha)
    Q = np.outer(x1, x0) / s
    K = G @ Q
    return FdgrState(
        alpha=float(alpha),
        B=B,
        G_alpha=G,
        P=np.outer(x0, x0) / s,
        Q=Q,
        X_pinv=(x0 / s).reshape(1, n),
        K=K,
        x=x1,
        u=-K @ x1,
        t=1,
        last_z_norm=float(np.sqrt(s)),
    )


def fdgr_step(state, x_next):
    x_next = as_vector(x_next, "x_next")
    n = state.x.shape[0]
    if x_next.shape[0] != n:
        raise InvalidInput("x_next has the wrong dimension")
    x = np.ascontiguousarray(state.x)
    y = np.ascontiguousarray(x_next - state.B @ state.u)
    X_pinv, _, _ = pinv_append_column(state.X_pinv, state.P, x)
    Q = np.array(state.Q, order="C")
    P = np.array(state.P, order="C")
    nz = kernels.rank_one_update(Q, P, x, y, z_threshold(x))
    K = state.G_alpha @ Q
    u = -K @ x_next
    new = replace(
        state, P=P, Q=Q, X_pinv=X_pinv, K=K, x=x_next, u=u, t=state.t + 1, last_z_norm=nz
    )
    return new, u


def identify(state):
    """Current estimate of ``A``: ``Y X^+`` over the samples seen so far."""
    if isinstance(state, DgrState):
        if state.Y.shape[1] == 0:
            raise InsufficientData("no transitions observed yet")
        return state.Q.copy()
    if isinstance(state, FdgrState):
        return state.Q.copy()
    raise InvalidInput(f"not a regulator state: {type(state).__name__}")
