"""Regularizability analysis.

A pair (A, B) is regularizable when the part of A the input cannot touch,
``Atilde = (I - Pi_B) A``, is Schur stable. This module builds that split,
tests it spectrally and with Lyapunov certificates, runs PBH rank tests, and
verifies user-supplied LMI witnesses (verification only, no SDP synthesis).
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInput, InvalidWitness, NotSchurStable
from .numkernel import (
    as_matrix,
    operator_norm,
    range_projector,
    solve_discrete_lyapunov,
    spectral_radius,
)

TAU_STAB = 1e-9
DEFINITE_MARGIN = 1e-9


def projectors(sys):
    """``(Pi_B, Pi_perp)``: projectors onto R(B) and its orthogonal complement."""
    Pi = range_projector(sys.B)
    return Pi, np.eye(sys.n) - Pi


def atilde(sys):
    _, Pp = projectors(sys)
    return Pp @ sys.A


def btilde(sys):
    Pi, _ = projectors(sys)
    return Pi @ sys.A


def is_regularizable(sys):
    rho = spectral_radius(atilde(sys))
    return rho < 1.0 - TAU_STAB, rho


def is_contractible(sys):
    """``min_K |A - BK| = |Atilde|``, attained at ``K = B^+ A``."""
    nrm = operator_norm(atilde(sys))
    # same boundary margin as is_regularizable so contractible => regularizable
    return nrm < 1.0 - TAU_STAB, nrm


def _rank(M, tol_rel=1e-9):
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > tol_rel * max(1.0, s[0])))


def pbh_rank(A, B, lam):
    """Rank of ``[A - lam I, B]``."""
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    n = A.shape[0]
    return _rank(np.hstack([A - lam * np.eye(n), B.astype(complex)]))


def pbh_stabilizable(A, B):
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
        raise InvalidInput("A must be square and B must have n rows")
    n = A.shape[0]
    for lam in np.linalg.eigvals(A):
        if abs(lam) >= 1.0 - TAU_STAB and pbh_rank(A, B, lam) < n:
            return False
    return True


def pbh_detectable(A, C):
    """Detectability of (A, C) via ``rank [A - lam I; C] = n`` at unstable modes."""
    A = as_matrix(A, "A")
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if A.shape[0] != A.shape[1] or C.shape[1] != A.shape[0]:
        raise InvalidInput("A must be square and C must have n columns")
    return pbh_stabilizable(A.T, C.T)


@dataclass
class LmiWitness:
    kind: str
    P: Optional[np.ndarray] = None
    W: Optional[np.ndarray] = None
    G: Optional[np.ndarray] = None
    H: Optional[np.ndarray] = None


def lyapunov_certificate(sys):
    """Kind-(iv) witness ``P`` with ``Atilde^T P Atilde - P = -I``, or None if infeasible."""
    try:
        P = solve_discrete_lyapunov(atilde(sys))
    except NotSchurStable:
        return None
    return LmiWitness(kind="iv", P=P)


def derived_v_witness(cert):
    """Kind-(v) witness ``W = P^{-1}`` from a kind-(iv) certificate."""
    W = np.linalg.inv(cert.P)
    return LmiWitness(kind="v", W=0.5 * (W + W.T))


def derived_vi_witness(cert):
    # G = P turns the (vi) block's Schur complement into P - At^T P At.
    return LmiWitness(kind="vi", P=cert.P, G=cert.P.copy())


def derived_vii_witness(sys, cert, taus=None):
    """Kind-(vii) witness from a kind-(iv) certificate, or None.

    The (vii) block is ``Phi + sym([G; H] [A, -I])`` with
    ``Phi = diag(-P, Pi_perp P Pi_perp)``. Taking ``G = -tau/2 A^T`` and
    ``H = tau/2 I`` gives ``Phi - tau N^T N`` with ``N = [A, -I]``, which is
    negative definite for large enough ``tau`` whenever (iv) holds.
    """
    if taus is None:
        taus = np.geomspace(1e-2, 1e8, 61)
    scale = max(1.0, np.linalg.norm(cert.P, 2))
    for tau in taus:
        tau = float(tau) * scale
        w = LmiWitness(
            kind="vii", P=cert.P, G=-0.5 * tau * sys.A.T, H=0.5 * tau * np.eye(sys.n)
        )
        if verify_lmi_witness(sys, w):
            return w
    return None


def _sym(M):
    return 0.5 * (M + M.T)


def is_pd(M, margin=DEFINITE_MARGIN):
    M = _sym(M)
    return float(np.linalg.eigvalsh(M)[0]) > margin * max(np.linalg.norm(M, 2), 1e-300)


def is_nd(M, margin=DEFINITE_MARGIN):
    return is_pd(-M, margin)


def is_psd(M, margin=DEFINITE_MARGIN):
    M = _sym(M)
    return float(np.linalg.eigvalsh(M)[0]) >= -margin * max(np.linalg.norm(M, 2), 1e-300)


def _need(w, *names):
    n = None
    for name in names:
        M = getattr(w, name)
        if M is None:
            raise InvalidWitness(f"kind {w.kind} witness needs {name}")
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise InvalidWitness(f"{name} must be square")
        if n is not None and M.shape[0] != n:
            raise InvalidWitness("witness matrices have inconsistent sizes")
        n = M.shape[0]
    return [np.asarray(getattr(w, name), dtype=float) for name in names]


def _vii_block(A, P, G, H, lower_right):
    return np.block(
        [
            [G @ A + A.T @ G.T - P, A.T @ H.T - G],
            [H @ A - G.T, lower_right - H - H.T],
        ]
    )


def verify_lmi_witness(sys, w):
    """Check the LMI for ``w.kind`` in {"iv", "v", "vi", "vii"} with margin 1e-9."""
    A = sys.A
    _, Pp = projectors(sys)
    At = Pp @ A
    if w.kind == "iv":
        (P,) = _need(w, "P")
        if P.shape[0] != sys.n:
            raise InvalidWitness("witness size does not match the system")
        return is_pd(P) and is_nd(At.T @ P @ At - P)
    if w.kind == "v":
        (W,) = _need(w, "W")
        if W.shape[0] != sys.n:
            raise InvalidWitness("witness size does not match the system")
        block = np.block([[W, At @ W], [W @ At.T, W]])
        return is_pd(W) and is_pd(block)
    if w.kind == "vi":
        P, G = _need(w, "P", "G")
        if P.shape[0] != sys.n:
            raise InvalidWitness("witness size does not match the system")
        block = np.block([[P, At.T @ G.T], [G @ At, G + G.T - P]])
        return is_pd(P) and is_pd(block)
    if w.kind == "vii":
        P, G, H = _need(w, "P", "G", "H")
        if P.shape[0] != sys.n:
            raise InvalidWitness("witness size does not match the system")
        return is_pd(P) and is_nd(_vii_block(A, P, G, H, Pp @ P @ Pp))
    raise InvalidWitness(f"unknown witness kind {w.kind!r}")


def verify_polytopic(vertices, B, S_basis, P_list, G, H):
    """Certify every ``A`` in the convex hull of ``vertices`` as regularizable with ``B``.

    For each vertex ``A_i`` checks the (vii)-type block with ``Pi_S P_i Pi_S``
    in the lower-right corner (negative definite) and the coupling block
    ``[[P_i, P_i Pi_perp], [Pi_perp P_i, Pi_S P_i Pi_S]]`` (positive semidefinite).
    ``S_basis`` is orthonormalized internally.
    """
    B = as_matrix(B, "B")
    n = B.shape[0]
    G = as_matrix(G, "G")
    H = as_matrix(H, "H")
    if len(vertices) != len(P_list) or not vertices:
        raise InvalidInput("need one P_i per vertex")
    S = np.asarray(S_basis, dtype=float).reshape(n, -1) if np.size(S_basis) else np.zeros((n, 0))
    if G.shape != (n, n) or H.shape != (n, n):
        raise InvalidInput("G and H must be n x n")
    Ps = range_projector(S) if S.shape[1] else np.zeros((n, n))
    Pp = np.eye(n) - range_projector(B)
    for A_i, P_i in zip(vertices, P_list):
        A_i = as_matrix(A_i, "A_i")
        P_i = as_matrix(P_i, "P_i")
        if A_i.shape != (n, n) or P_i.shape != (n, n):
            raise InvalidInput("vertex and witness matrices must be n x n")
        if not is_pd(P_i):
            return False
        if not is_nd(_vii_block(A_i, P_i, G, H, Ps @ P_i @ Ps)):
            return False
        coupling = np.block([[P_i, P_i @ Pp], [Pp @ P_i, Ps @ P_i @ Ps]])
        if not is_psd(coupling):
            return False
    return True


@dataclass
class RegularizabilityReport:
    rho_A: float
    rho_Atilde: float
    regularizable: bool
    contractible: bool
    atilde_norm: float
    stabilizable: bool
    detectable_transpose: bool
    lyapunov_P: Optional[np.ndarray] = None

    def to_dict(self):
        return {
            "rho_A": self.rho_A,
            "rho_Atilde": self.rho_Atilde,
            "regularizable": self.regularizable,
            "contractible": self.contractible,
            "atilde_norm": self.atilde_norm,
            "stabilizable": self.stabilizable,
            "detectable_transpose": self.detectable_transpose,
            "certificate_present": self.lyapunov_P is not None,
        }


def analyze(sys):
    reg, rho_t = is_regularizable(sys)
    con, nrm = is_contractible(sys)
    cert = lyapunov_certificate(sys) if reg else None
    return RegularizabilityReport(
        rho_A=spectral_radius(sys.A),
        rho_Atilde=rho_t,
        regularizable=reg,
        contractible=con,
        atilde_norm=nrm,
        stabilizable=pbh_stabilizable(sys.A, sys.B),
        detectable_transpose=pbh_detectable(sys.A, sys.B.T),
        lyapunov_P=None if cert is None else cert.P,
    )
