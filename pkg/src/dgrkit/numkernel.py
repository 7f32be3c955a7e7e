"""Dense real matrix primitives used throughout dgrkit.

All functions are pure: inputs are never modified and nothing is cached.
Rank decisions use ``tau_rank = sigma_1 * max(rows, cols) * eps``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DareDiverged, InvalidInput, NotSchurStable

EPS = np.finfo(float).eps
STABILITY_MARGIN = 1e-9
DARE_MAX_ITER = 10_000
DARE_RTOL = 1e-10


def as_matrix(M, name="matrix"):
    """Return ``M`` as a finite 2-D float array (1-D input becomes a column)."""
    arr = np.array(M, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise InvalidInput(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} has non-finite entries")
    return arr


def as_vector(x, name="vector"):
    arr = np.array(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True)
class SvdFactors:
    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray
    numerical_rank: int


def rank_tolerance(s, shape):
    if s.size == 0:
        return 0.0
    return float(s[0]) * max(shape) * EPS


def svd(M):
    """Full SVD ``M = U diag(s) V^T`` with the numerical rank attached."""
    M = as_matrix(M)
    U, s, Vt = np.linalg.svd(M, full_matrices=True)
    r = int(np.count_nonzero(s > rank_tolerance(s, M.shape)))
    return SvdFactors(U=U, singular_values=s, V=Vt.T, numerical_rank=r)


def numerical_rank(M):
    M = as_matrix(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.count_nonzero(s > rank_tolerance(s, M.shape)))


def pinv(M):
    """Moore-Penrose pseudoinverse; singular values at or below tau_rank are dropped."""
    M = as_matrix(M)
    rows, cols = M.shape
    if M.size == 0:
        return np.zeros((cols, rows))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    keep = s > rank_tolerance(s, M.shape)
    if not keep.any():
        return np.zeros((cols, rows))
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def range_projector(M):
    """Orthogonal projector onto R(M), built from the thin SVD."""
    M = as_matrix(M)
    n = M.shape[0]
    if M.size == 0:
        return np.zeros((n, n))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    Ur = U[:, s > rank_tolerance(s, M.shape)]
    return Ur @ Ur.T


def complement_projector(M):
    M = as_matrix(M)
    return np.eye(M.shape[0]) - range_projector(M)


def spectral_radius(M):
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise InvalidInput(f"spectral radius needs a square matrix, got {M.shape}")
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def operator_norm(M):
    """Largest singular value."""
    M = as_matrix(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[0])


def pinv_append_column(X_prev_pinv, P_prev, x_new):
    """Pseudoinverse of ``[X_prev, x_new]`` from that of ``X_prev``.

    Parameters
    ----------
    X_prev_pinv : (t, n) array
        Pseudoinverse of the current data matrix.
    P_prev : (n, n) array
        Range projector ``X_prev @ X_prev_pinv``.
    x_new : (n,) array
        Column being appended.

    Returns
    -------
    X_pinv : (t + 1, n) array
    z : (n,) array
        Component of ``x_new`` orthogonal to the range of ``X_prev``.
    in_range : bool
        True when ``|z| <= 1e-10 * max(1, |x_new|)``, i.e. the column adds no
        new direction.
    """
    Xp = as_matrix(X_prev_pinv, "X_prev_pinv")
    P = as_matrix(P_prev, "P_prev")
    x = as_vector(x_new, "x_new")
    n = x.shape[0]
    if Xp.shape[1] != n or P.shape != (n, n):
        raise InvalidInput(
            f"inconsistent shapes: X_prev_pinv {Xp.shape}, P_prev {P.shape}, x {x.shape}"
        )
    z = x - P @ x
    # second pass removes the range component left over by rounding in P
    z = z - P @ z
    nz = float(np.linalg.norm(z))
    gamma = Xp @ x
    if nz > 1e-10 * max(1.0, float(np.linalg.norm(x))):
        zd = z / (nz * nz)
        top = Xp - np.outer(gamma, zd)
        return np.vstack([top, zd]), z, False
    eps_t = 1.0 / (gamma @ gamma + 1.0)
    zeta = Xp.T @ gamma
    top = Xp - eps_t * np.outer(gamma, zeta)
    return np.vstack([top, eps_t * zeta]), z, True


def solve_discrete_lyapunov(F):
    """Solve ``F^T P F - P = -I`` by squaring (doubling) the series sum.

    ``P = sum_k (F^T)^k F^k`` is accumulated as ``P <- P + G^T P G``,
    ``G <- G @ G``, which doubles the number of summed terms per pass.
    """
    F = as_matrix(F, "F")
    n = F.shape[0]
    if F.shape != (n, n):
        raise InvalidInput(f"F must be square, got {F.shape}")
    rho = spectral_radius(F)
    if rho >= 1.0 - STABILITY_MARGIN:
        raise NotSchurStable(f"spectral radius {rho:.6g} is not below 1")
    P = np.eye(n)
    G = F.copy()
    for _ in range(200):
        inc = G.T @ P @ G
        P = P + inc
        G = G @ G
        if np.linalg.norm(inc, 2) <= EPS * np.linalg.norm(P, 2) and np.linalg.norm(G, 2) < 1e-3:
            break
    return 0.5 * (P + P.T)


def solve_dare(A, B, Q, R, max_iter=DARE_MAX_ITER, rtol=DARE_RTOL):
    """Discrete algebraic Riccati equation by fixed-point iteration.

    Iterates ``P <- Q + A^T P A - A^T P B (R + B^T P B)^{-1} B^T P A`` from
    ``P = Q`` until the relative change drops below ``rtol``.

    Returns
    -------
    P : (n, n) array
    K : (m, n) array
        LQR gain ``(R + B^T P B)^{-1} B^T P A``; the closed loop is ``A - B K``.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    Q = as_matrix(Q, "Q")
    R = as_matrix(R, "R")
    n, m = B.shape
    if A.shape != (n, n) or Q.shape != (n, n) or R.shape != (m, m):
        raise InvalidInput("inconsistent DARE dimensions")
    P = Q.copy()
    for _ in range(max_iter):
        S = R + B.T @ P @ B
        BtPA = B.T @ P @ A
        P_next = Q + A.T @ P @ A - BtPA.T @ np.linalg.solve(S, BtPA)
        P_next = 0.5 * (P_next + P_next.T)
        if not np.all(np.isfinite(P_next)) or np.abs(P_next).max() > 1e150:
            raise DareDiverged("Riccati iterates blew up; is (A, B) stabilizable?")
        delta = np.linalg.norm(P_next - P)
        P = P_next
        if delta <= rtol * np.linalg.norm(P):
            break
    else:
        raise DareDiverged(f"no convergence after {max_iter} iterations")
    K = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
    if spectral_radius(A - B @ K) >= 1.0:
        raise DareDiverged("converged Riccati solution is not stabilizing")
    return P, K
