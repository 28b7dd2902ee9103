"""Exact-structure symplectic linear algebra.

Everything downstream (flow integration, crossing forms, component
bookkeeping) leans on a handful of small, exact constructions: the standard
symplectic matrix J, the closed-form rotation exp(eps*J), membership tests
for Sp(2n), the det(M-I) sign classification of the Sp(2n)^+/- components,
and SVD-certified kernel dimensions for graph intersections.

All functions are pure; inputs are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


# Zero band for det(M-I): |det| at or below this counts as Sp(2n)^0.
DET_TOL = 1e-9
# Relative singular-value threshold for kernel-dimension decisions.
RANK_TOL = 1e-8


class SymplError(ValueError):
    """Raised when an input violates a structural precondition."""


class SpComponent(Enum):
    """Connected-component tag of Sp(2n) \\ Sp(2n)^0, decided by det(M-I)."""

    PLUS = "Plus"
    ZERO = "Zero"
    MINUS = "Minus"


def standard_J(n: int) -> np.ndarray:
    """The 2n x 2n standard symplectic matrix [[0, -I], [I, 0]]."""
    if n < 1:
        raise SymplError(f"n must be >= 1, got {n}")
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


def exp_J(eps: float, n: int) -> np.ndarray:
    """exp(eps*J) in closed form: cos(eps) I + sin(eps) J (blockwise exact)."""
    return np.cos(eps) * np.eye(2 * n) + np.sin(eps) * standard_J(n)


def omega(z1: np.ndarray, z2: np.ndarray) -> float:
    """Standard symplectic form omega(z1, z2) = <J z1, z2>."""
    z1 = np.asarray(z1, dtype=float)
    n = z1.shape[0] // 2
    return float(standard_J(n) @ z1 @ z2)


def double_matrix(A: np.ndarray) -> np.ndarray:
    """A_d = diag(A, A): the frame holonomy acting on (y, u) phase pairs."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    Ad = np.zeros((2 * n, 2 * n))
    Ad[:n, :n] = A
    Ad[n:, n:] = A
    return Ad


def is_orthogonal(A: np.ndarray, tol: float = DET_TOL) -> bool:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return False
    return bool(np.linalg.norm(A.T @ A - np.eye(A.shape[0])) <= max(tol, 1e-9) * A.shape[0])


def is_symplectic(M: np.ndarray, tol: float = 1e-9) -> bool:
    """True iff ||M^T J M - J||_F <= tol.  Raises on odd dimension."""
    M = np.asarray(M, dtype=float)
    if M.shape[0] != M.shape[1] or M.shape[0] % 2 != 0:
        raise SymplError(f"symplectic test needs an even-dimensional square matrix, got {M.shape}")
    n = M.shape[0] // 2
    J = standard_J(n)
    return bool(np.linalg.norm(M.T @ J @ M - J) <= tol)


def det_m_minus_i_sign(M: np.ndarray, tol: float = DET_TOL) -> int:
    """Sign of det(M - I) via full-pivot LU; 0 inside the |det| <= tol band.

    The sign is accumulated from pivot signs and row/column swaps while the
    magnitude is tracked as a log-sum, so large 2n cannot underflow the sign.
    """
    M = np.asarray(M, dtype=float)
    E = M - np.eye(M.shape[0])
    return _slogdet_fullpivot(E, tol)


def _slogdet_fullpivot(E: np.ndarray, tol: float) -> int:
    A = np.array(E, dtype=float, copy=True)
    k = A.shape[0]
    sign = 1
    logabs = 0.0
    for i in range(k):
        sub = np.abs(A[i:, i:])
        p, q = np.unravel_index(np.argmax(sub), sub.shape)
        p += i
        q += i
        if A[p, q] == 0.0:
            return 0
        if p != i:
            A[[i, p], :] = A[[p, i], :]
            sign = -sign
        if q != i:
            A[:, [i, q]] = A[:, [q, i]]
            sign = -sign
        piv = A[i, i]
        if piv < 0:
            sign = -sign
        logabs += np.log(abs(piv))
        if i + 1 < k:
            A[i + 1 :, i + 1 :] -= np.outer(A[i + 1 :, i], A[i, i + 1 :]) / piv
    if logabs <= np.log(tol):
        return 0
    return sign


def sp_component(M: np.ndarray, tol: float = DET_TOL) -> SpComponent:
    """Classify M into Sp(2n)^+ / Sp(2n)^0 / Sp(2n)^- by the sign of det(M-I)."""
    M = np.asarray(M, dtype=float)
    if not is_symplectic(M, tol=max(1e-6, tol)):
        raise SymplError("sp_component needs a symplectic matrix")
    s = det_m_minus_i_sign(M, tol)
    if s > 0:
        return SpComponent.PLUS
    if s < 0:
        return SpComponent.MINUS
    return SpComponent.ZERO


def twisted_holonomy_positive(A: np.ndarray, eps: float, tol: float = 1e-9) -> bool:
    """det(exp(-eps*J) A_d - I) > 0 test for an orthogonal holonomy A.

    For orthogonal A this determinant equals
    (-1)^{n(n+1)} (sin eps)^{2n} det(I + (A - cos(eps) I)^2 / sin(eps)^2),
    which is strictly positive; the test is retained as a numerical check.
    """
    A = np.asarray(A, dtype=float)
    if not is_orthogonal(A, tol=max(tol, 1e-8)):
        raise SymplError("twisted_holonomy_positive needs an orthogonal A")
    if not (0.0 < eps < np.pi / 4):
        raise SymplError(f"eps must lie in (0, pi/4), got {eps}")
    n = A.shape[0]
    E = exp_J(-eps, n) @ double_matrix(A)
    # det(e^{-eps J} A_d - I) scales like (sin eps)^{2n}: legitimately tiny,
    # so the decision is sign-only (the log-sum LU keeps the sign exact).
    return det_m_minus_i_sign(E, tol=1e-300) > 0


@dataclass(frozen=True)
class KernelEstimate:
    """Kernel dimension of a matrix with its certifying singular-value gap."""

    dim: int
    smallest_kept: float   # largest singular value counted as zero (0 if none)
    smallest_dropped: float  # smallest singular value counted as nonzero (inf if all zero)
    basis: np.ndarray      # orthonormal kernel basis, shape (k, dim)


def kernel_of(E: np.ndarray, tol: float = RANK_TOL, absolute: bool = False) -> KernelEstimate:
    """SVD-thresholded kernel of E with the spectral gap recorded.

    The threshold is tol * ||E||_2, falling back to the absolute tol when
    E vanishes (so kernel_of(0) correctly reports full dimension).
    """
    E = np.asarray(E, dtype=float)
    U, s, Vt = np.linalg.svd(E)
    scale = s[0] if s.size and s[0] > 0 else 0.0
    # Absolute fallback once the whole matrix sits inside the tolerance band
    # (e.g. M numerically equal to I), where a relative threshold is vacuous.
    thr = tol if (absolute or scale <= tol) else tol * scale
    mask = s <= thr
    dim = int(np.sum(mask))
    kept = float(s[mask].max()) if dim else 0.0
    dropped = float(s[~mask].min()) if dim < s.size else np.inf
    basis = Vt[len(s) - dim :].T if dim else np.zeros((E.shape[1], 0))
    return KernelEstimate(dim=dim, smallest_kept=kept, smallest_dropped=dropped, basis=basis)


def graph_intersection_dim(M: np.ndarray, tol: float = RANK_TOL) -> int:
    """dim ker(M - I) = dim(Gr(M) ∩ Δ), by singular-value thresholding."""
    M = np.asarray(M, dtype=float)
    return kernel_of(M - np.eye(M.shape[0]), tol=tol).dim


def form_signature(G: np.ndarray, tol: float) -> tuple[int, int, bool]:
    """(m_plus, m_minus, regular) of a small symmetric form matrix.

    regular means no eigenvalue sits inside the [-tol, tol] dead band.
    """
    G = np.asarray(G, dtype=float)
    if G.size == 0:
        return 0, 0, True
    w = np.linalg.eigvalsh(0.5 * (G + G.T))
    m_plus = int(np.sum(w > tol))
    m_minus = int(np.sum(w < -tol))
    regular = m_plus + m_minus == len(w)
    return m_plus, m_minus, regular
