"""Linear Hamiltonian flow z' = J B(t) z and its stability data.

The integrator is fixed-step implicit midpoint.  For a linear field each
step is the Cayley-type update

    psi_{k+1} = (I - h/2 J B_mid)^{-1} (I + h/2 J B_mid) psi_k,

which maps the Hamiltonian matrix J B_mid into Sp(2n) exactly, so the
symplectic residual of the computed path is at round-off level and serves
as the certificate downstream index computations rely on.  Coefficients
are read from the interpolant at half-steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coeffs import CoefficientData, HamiltonianCoefficient, assemble_B
from .sympl import double_matrix, is_orthogonal, kernel_of, standard_J


class FlowError(RuntimeError):
    """Raised when propagation fails (singular midpoint solve, bad shapes)."""


@dataclass(frozen=True)
class SymplecticPath:
    """Sampled fundamental solution with its symplectic-residual certificate."""

    grid: np.ndarray                    # (N_t+1,)
    frames: np.ndarray = field(repr=False)  # (N_t+1, 2n, 2n)
    residual: float                     # max_k ||psi_k^T J psi_k - J||_F
    det_residual: float                 # max_k |det psi_k - 1|

    @property
    def T(self) -> float:
        return float(self.grid[-1])

    @property
    def n(self) -> int:
        return self.frames.shape[-1] // 2

    def end(self) -> np.ndarray:
        return self.frames[-1]


def _cayley_steps(Bmid: np.ndarray, h: float) -> np.ndarray:
    d = Bmid.shape[-1]
    J = standard_J(d // 2)
    L = np.einsum("ij,kjl->kil", J, Bmid)
    I = np.eye(d)
    try:
        return np.linalg.solve(I - (h / 2.0) * L, I + (h / 2.0) * L)
    except np.linalg.LinAlgError as exc:
        raise FlowError(f"implicit midpoint solve failed (step h={h} too large)") from exc


def fundamental_solution(B: HamiltonianCoefficient, N_t: int) -> SymplecticPath:
    """Integrate psi' = J B_{c,s}(t) psi, psi(0) = I, on N_t uniform steps."""
    if N_t < 64:
        raise FlowError(f"N_t must be >= 64, got {N_t}")
    T = B.T
    h = T / N_t
    grid = np.linspace(0.0, T, N_t + 1)
    mids = grid[:-1] + h / 2.0
    steps = _cayley_steps(B.at(mids), h)

    d = 2 * B.n
    frames = np.empty((N_t + 1, d, d))
    frames[0] = np.eye(d)
    psi = frames[0]
    for k in range(N_t):
        psi = steps[k] @ psi
        frames[k + 1] = psi

    J = standard_J(B.n)
    sym = np.einsum("kji,jl,klm->kim", frames, J, frames) - J
    residual = float(np.max(np.sqrt(np.sum(sym * sym, axis=(1, 2)))))
    det_residual = float(np.max(np.abs(np.linalg.det(frames) - 1.0)))
    return SymplecticPath(grid=grid, frames=frames, residual=residual, det_residual=det_residual)


def propagate(B: HamiltonianCoefficient, t0: float, t1: float, psi0: np.ndarray, n_sub: int = 8) -> np.ndarray:
    """Advance a frame from t0 to t1 with n_sub midpoint substeps.

    Used by crossing refinement to evaluate psi between stored grid nodes.
    """
    if t1 == t0:
        return psi0
    h = (t1 - t0) / n_sub
    mids = t0 + h * (np.arange(n_sub) + 0.5)
    steps = _cayley_steps(B.at(mids), h)
    psi = psi0
    for k in range(n_sub):
        psi = steps[k] @ psi
    return psi


def fundamental_solution_with_s_derivative(B: HamiltonianCoefficient, N_t: int) -> tuple[np.ndarray, np.ndarray]:
    """(psi(T), d/ds psi(T)) by integrating the variational system.

    Phi = d/ds psi solves Phi' = J B Phi + J (dB/ds) psi, Phi(0) = 0, with
    dB/ds = diag(0, -P).  Both equations share the midpoint Cayley solve.
    """
    T = B.T
    h = T / N_t
    mids = np.linspace(0.0, T, N_t + 1)[:-1] + h / 2.0
    d = 2 * B.n
    J = standard_J(B.n)
    L = np.einsum("ij,kjl->kil", J, B.at(mids))
    dB = np.zeros((len(mids), d, d))
    dB[:, B.n :, B.n :] = -B.data.P_at(mids)
    JdB = np.einsum("ij,kjl->kil", J, dB)
    I = np.eye(d)
    Aminus = I - (h / 2.0) * L
    Aplus = I + (h / 2.0) * L

    psi = np.eye(d)
    phi = np.zeros((d, d))
    for k in range(len(mids)):
        psi_next = np.linalg.solve(Aminus[k], Aplus[k] @ psi)
        rhs = Aplus[k] @ phi + (h / 2.0) * (JdB[k] @ (psi + psi_next))
        phi = np.linalg.solve(Aminus[k], rhs)
        psi = psi_next
    return psi, phi


def monodromy(path: SymplecticPath, A: np.ndarray) -> np.ndarray:
    """A_d psi(T): the linearized return map twisted by the frame holonomy."""
    A = np.asarray(A, dtype=float)
    if not is_orthogonal(A, tol=1e-8):
        raise FlowError("monodromy needs an orthogonal holonomy A")
    if 2 * A.shape[0] != path.frames.shape[-1]:
        raise FlowError(f"dimension mismatch: path dim {path.frames.shape[-1]}, A is {A.shape[0]}x{A.shape[0]}")
    return double_matrix(A) @ path.end()


@dataclass(frozen=True)
class StabilityVerdict:
    """Floquet multipliers and the spectral/linear stability classification."""

    multipliers: list[tuple[complex, int]]  # (value, algebraic multiplicity)
    spectrally_stable: bool
    linearly_stable: bool
    semisimple_defect: int
    unit_circle_margin: float  # min over multipliers of | |lambda| - 1 |

    @property
    def max_modulus(self) -> float:
        return max(abs(lam) for lam, _ in self.multipliers)


def floquet(M: np.ndarray, tol: float = 1e-6) -> StabilityVerdict:
    """Classify a symplectic matrix by its eigenvalues.

    Spectrally stable iff every multiplier has |lambda| <= 1 + tol
    (symplectic pairing then pins them all to the unit circle band);
    linearly stable iff additionally every unit-circle eigenvalue cluster
    has geometric multiplicity equal to its algebraic multiplicity.
    Eigenvalues are clustered at radius tol before multiplicity decisions.
    """
    M = np.asarray(M, dtype=float)
    lam = np.linalg.eigvals(M)
    clusters = _cluster(lam, radius=max(tol, 1e-12))

    scale = max(1.0, float(np.linalg.norm(M, 2)))
    defect = 0
    mults: list[tuple[complex, int]] = []
    for center, count in clusters:
        mults.append((complex(center), count))
        if abs(abs(center) - 1.0) <= tol:
            # geometric multiplicity via singular values of (M - lambda I)
            s = np.linalg.svd(M - center * np.eye(M.shape[0], dtype=complex), compute_uv=False)
            geo = int(np.sum(s <= 10 * tol * scale))
            defect = max(defect, count - geo)

    max_mod = max(abs(l) for l in lam)
    spectrally = bool(max_mod <= 1.0 + tol)
    linearly = spectrally and defect == 0
    margin = float(min(abs(abs(l) - 1.0) for l in lam))
    return StabilityVerdict(
        multipliers=sorted(mults, key=lambda p: (-abs(p[0]), p[0].real, p[0].imag)),
        spectrally_stable=spectrally,
        linearly_stable=linearly,
        semisimple_defect=int(defect),
        unit_circle_margin=margin,
    )


def _cluster(vals: np.ndarray, radius: float) -> list[tuple[complex, int]]:
    remaining = list(vals)
    out = []
    while remaining:
        v = remaining.pop(0)
        group = [v]
        rest = []
        for w in remaining:
            if abs(w - v) <= radius:
                group.append(w)
            else:
                rest.append(w)
        remaining = rest
        out.append((complex(np.mean(group)), len(group)))
    return out


def multiplier_product_residual(verdict: StabilityVerdict) -> float:
    prod = 1.0 + 0.0j
    for lam, m in verdict.multipliers:
        prod *= lam**m
    return abs(prod - 1.0)


def poincare_map(data: CoefficientData, N_t: int) -> np.ndarray:
    """Matrix of the linearized return map in (y, u) coordinates.

    The vector field is assembled directly from the Legendre reduction
    y = P u' + Q u (so y' = Q^T u' + R u, u' = P^-1 (y - Q u)) without going
    through assemble_B, and integrated with the same midpoint scheme as
    fundamental_solution.  The result is the same object as
    monodromy(fundamental_solution(assemble_B(data, 1, 0)), A) and the two
    routes must agree to round-off; a block or sign error in either
    assembly breaks the agreement.
    """
    n = data.n
    T = data.T
    h = T / N_t
    mids = np.linspace(0.0, T, N_t + 1)[:-1] + h / 2.0

    P = data.P_at(mids)
    Q = data.Q_at(mids)
    R = data.R_at(mids)
    Pinv = np.linalg.inv(P)
    Qt = np.swapaxes(Q, 1, 2)
    PinvQ = Pinv @ Q
    # z' = F(t) z, z = (y, u)
    F = np.empty((N_t, 2 * n, 2 * n))
    F[:, :n, :n] = Qt @ Pinv
    F[:, :n, n:] = R - Qt @ PinvQ
    F[:, n:, :n] = Pinv
    F[:, n:, n:] = -PinvQ

    I = np.eye(2 * n)
    try:
        steps = np.linalg.solve(I - (h / 2.0) * F, I + (h / 2.0) * F)
    except np.linalg.LinAlgError as exc:
        raise FlowError("poincare_map propagation failed") from exc
    Z = I
    for k in range(N_t):
        Z = steps[k] @ Z
    return double_matrix(data.A) @ Z
