"""Discrete-time LTI plants ``x+ = A x + B u + w`` and eigenstructure tools."""
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DefectiveMatrix, InvalidInput
from .numkernel import as_matrix, as_vector, range_projector, spectral_radius

EIGVEC_COND_CAP = 1e8


@dataclass(frozen=True)
class LtiSystem:
    A: np.ndarray
    B: np.ndarray
    noise_std: float = 0.0
    labels: tuple = field(default=(), compare=False)

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        if A.shape[0] != A.shape[1]:
            raise InvalidInput(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise InvalidInput(f"B has {B.shape[0]} rows, A is {A.shape[0]}x{A.shape[0]}")
        if not np.isfinite(self.noise_std) or self.noise_std < 0:
            raise InvalidInput(f"noise_std must be finite and >= 0, got {self.noise_std}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "noise_std", float(self.noise_std))
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def step(sys, x, u, rng=None):
    """One plant update. ``rng`` may be a Generator, an int seed or None.

    Noise is only drawn when ``sys.noise_std > 0``.
    """
    x = as_vector(x, "x")
    u = as_vector(u, "u")
    if x.shape[0] != sys.n or u.shape[0] != sys.m:
        raise InvalidInput(
            f"expected x of length {sys.n} and u of length {sys.m}, got {x.shape[0]}, {u.shape[0]}"
        )
    x_next = sys.A @ x + sys.B @ u
    if sys.noise_std > 0:
        x_next = x_next + _rng(rng).normal(0.0, sys.noise_std, size=sys.n)
    return x_next


def perturb(sys, std, seed=None):
    """Copy of ``sys`` with ``A + dA``, ``dA`` entries i.i.d. N(0, std^2)."""
    if not np.isfinite(std) or std < 0:
        raise InvalidInput(f"perturbation std must be >= 0, got {std}")
    if std == 0:
        return replace(sys)
    dA = _rng(seed).normal(0.0, std, size=sys.A.shape)
    return replace(sys, A=sys.A + dA)


def chain_matrix(diagonal, offdiag=1.0):
    """Upper bidiagonal matrix with ``diagonal`` on the diagonal and a constant superdiagonal."""
    d = np.asarray(diagonal, dtype=float)
    n = d.size
    return np.diag(d) + offdiag * np.eye(n, k=1)


def unit(n, i):
    """Standard basis column ``e_i`` (zero-based ``i``) as an (n, 1) array."""
    e = np.zeros((n, 1))
    e[i, 0] = 1.0
    return e


@dataclass(frozen=True)
class ExcitationReport:
    excited_count: int
    distinct_eigenvalue_count: int
    k1: int
    k2: int
    coefficients: np.ndarray
    eigenvalues: np.ndarray
    excited: np.ndarray


def mode_excitation(sys, x0, tol=1e-8):
    """Expand ``x0`` in the eigenbasis of ``A`` and classify the excited modes.

    A mode counts as excited when its coefficient (unit-norm eigenvectors)
    exceeds ``tol * |x0|``. Excited eigenvectors lying in R(B) within ``tol``
    go to ``k1``; those in the orthogonal complement go to ``k2``; anything
    straddling both is left out of either count.
    """
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    x0 = as_vector(x0, "x0")
    if x0.shape[0] != sys.n:
        raise InvalidInput("x0 has the wrong dimension")
    lam, V = np.linalg.eig(sys.A)
    V = V / np.linalg.norm(V, axis=0)
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > EIGVEC_COND_CAP:
        raise DefectiveMatrix(f"eigenvector matrix condition number {cond:.3g} exceeds cap")
    coeffs = np.linalg.solve(V, x0.astype(complex))
    mags = np.abs(coeffs)
    excited = mags > tol * np.linalg.norm(x0)

    scale = tol * max(1.0, spectral_radius(sys.A))
    reps = []
    for lam_i in lam[excited]:
        if all(abs(lam_i - r) > scale for r in reps):
            reps.append(lam_i)

    Pi = range_projector(sys.B)
    k1 = k2 = 0
    for v in V[:, excited].T:
        inside = np.linalg.norm(Pi @ v)
        outside = np.linalg.norm(v - Pi @ v)
        if outside <= tol:
            k1 += 1
        elif inside <= tol:
            k2 += 1
    return ExcitationReport(
        excited_count=int(excited.sum()),
        distinct_eigenvalue_count=len(reps),
        k1=k1,
        k2=k2,
        coefficients=mags,
        eigenvalues=lam,
        excited=excited,
    )


def vandermonde(eigenvalues, t):
    """Rows ``(1, lam, ..., lam^(t-1))`` for each eigenvalue."""
    if t < 1:
        raise InvalidInput("t must be >= 1")
    lam = np.asarray(eigenvalues)
    dtype = complex if np.iscomplexobj(lam) else float
    return np.vander(lam.astype(dtype), N=t, increasing=True)
