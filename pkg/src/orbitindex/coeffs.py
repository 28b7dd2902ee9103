"""Trivialized second-variation coefficients and the Hamiltonian blocks.

A problem instance is the sampled triple (P, Q, R) on a uniform grid over
[0, T] together with the orthogonal frame holonomy A.  This module owns
ingestion and validation of that data, off-grid evaluation (trigonometric
interpolation when the data is periodic, cubic splines otherwise), the
named presets, and the assembly of the two-parameter Hamiltonian
coefficient

    B_{c,s}(t) = [[ P^-1,        -c P^-1 Q                 ],
                  [ -c Q^T P^-1,  c^2 Q^T P^-1 Q - c R - s P ]].

Twisted compatibility at the seam is the congruence form
P(0)=A P(T) A^T, Q(0)=A Q(T) A^T, R(0)=A R(T) A^T, which is what makes the
twisted boundary conditions self-adjoint and B_{c,s}(0) = A_d B_{c,s}(T) A_d^T.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from .sympl import double_matrix, is_orthogonal

# Presets validate at this tolerance by construction.
PRESET_TOL = 1e-10
DEFAULT_SYM_TOL = 1e-8


class CoefficientError(ValueError):
    """Raised for structurally invalid coefficient data."""


@dataclass(frozen=True)
class ValidationIssue:
    name: str
    residual: float
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    issues: list[ValidationIssue]
    p_min: float  # smallest singular value of P over the grid

    def __str__(self):
        if self.passed:
            return f"valid (min sv of P = {self.p_min:.3e})"
        lines = [f"invalid ({len(self.issues)} issue(s)):"]
        lines += [f"  {i.name}: residual {i.residual:.3e} {i.detail}" for i in self.issues]
        return "\n".join(lines)


class _TrigInterpolant:
    """Trigonometric interpolation of T-periodic matrix samples.

    Samples are given at t_k = k T/N, k = 0..N (endpoint duplicated); the
    interpolant is the unique band-limited reconstruction from the first N.
    """

    def __init__(self, samples: np.ndarray, T: float):
        vals = samples[:-1]  # drop duplicated endpoint
        self.T = T
        self.N = vals.shape[0]
        self.shape = vals.shape[1:]
        coef = np.fft.rfft(vals, axis=0) / self.N
        # Weight interior modes by 2 (conjugate pair), endpoints by 1.
        w = np.full(coef.shape[0], 2.0)
        w[0] = 1.0
        if self.N % 2 == 0:
            w[-1] = 1.0
        self.coef = coef * w.reshape(-1, *([1] * len(self.shape)))
        self.freqs = 2.0 * np.pi * np.arange(coef.shape[0]) / T

    def __call__(self, t: np.ndarray, deriv: int = 0) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        phase = np.exp(1j * np.outer(t, self.freqs))
        c = self.coef
        if deriv:
            c = c * (1j * self.freqs.reshape(-1, *([1] * len(self.shape)))) ** deriv
        out = np.tensordot(phase, c, axes=(1, 0)).real
        return out


class _SplineInterpolant:
    """Cubic-spline interpolation for non-periodic (twisted) samples."""

    def __init__(self, samples: np.ndarray, T: float):
        self.T = T
        t = np.linspace(0.0, T, samples.shape[0])
        self.spl = CubicSpline(t, samples, axis=0, bc_type="not-a-knot")

    def __call__(self, t: np.ndarray, deriv: int = 0) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        f = self.spl.derivative(deriv) if deriv else self.spl
        return f(t)


@dataclass(frozen=True)
class CoefficientData:
    """Sampled (P, Q, R) on t_k = k T/N_t, k=0..N_t, plus the holonomy A.

    P and R are symmetric n x n at every sample; P is invertible everywhere
    (assumption (N1) at the trivialized level); A is orthogonal.
    """

    n: int
    T: float
    P: np.ndarray  # (N_t+1, n, n)
    Q: np.ndarray
    R: np.ndarray
    A: np.ndarray  # (n, n)
    source: str = "custom_sampled"

    def __post_init__(self):
        for name in ("P", "Q", "R"):
            arr = getattr(self, name)
            if arr.shape != (self.P.shape[0], self.n, self.n):
                raise CoefficientError(f"{name} has shape {arr.shape}, expected (N_t+1, {self.n}, {self.n})")
        if self.A.shape != (self.n, self.n):
            raise CoefficientError(f"A has shape {self.A.shape}, expected ({self.n}, {self.n})")
        if not np.all(np.isfinite(self.P)) or not np.all(np.isfinite(self.Q)) or not np.all(np.isfinite(self.R)):
            raise CoefficientError("coefficient samples must be finite")

    @property
    def grid_size(self) -> int:
        return self.P.shape[0] - 1

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.grid_size + 1)

    @property
    def periodic(self) -> bool:
        return bool(np.linalg.norm(self.A - np.eye(self.n)) <= 1e-12)

    @cached_property
    def _interp(self):
        # Twisted data is not T-periodic, so global trigonometric
        # reconstruction would be wrong there; fall back to cubics.
        cls = _TrigInterpolant if self.periodic else _SplineInterpolant
        return {name: cls(getattr(self, name), self.T) for name in ("P", "Q", "R")}

    def P_at(self, t, deriv: int = 0) -> np.ndarray:
        return self._interp["P"](t, deriv)

    def Q_at(self, t) -> np.ndarray:
        return self._interp["Q"](t)

    def R_at(self, t) -> np.ndarray:
        return self._interp["R"](t)

    def p_lower_bound(self) -> float:
        """min over samples of the smallest singular value of P(t_k)."""
        return float(min(np.linalg.svd(Pk, compute_uv=False)[-1] for Pk in self.P))

    def convexity_bound(self) -> float:
        """min over samples of the smallest eigenvalue of P(t_k) (L1 check)."""
        return float(min(np.linalg.eigvalsh(0.5 * (Pk + Pk.T))[0] for Pk in self.P))


def validate(data: CoefficientData, tol: float = DEFAULT_SYM_TOL) -> ValidationReport:
    """Check every CoefficientData invariant; never raises on bad data.

    Reported identities: symmetry of P and R, invertibility of P,
    orthogonality of A, and the twisted seam compatibility for P, Q, R.
    """
    issues: list[ValidationIssue] = []

    def check(name, residual, detail=""):
        if residual > tol:
            issues.append(ValidationIssue(name, float(residual), detail))

    scale_P = max(1.0, float(np.max(np.abs(data.P))))
    scale_Q = max(1.0, float(np.max(np.abs(data.Q))))
    scale_R = max(1.0, float(np.max(np.abs(data.R))))

    check("P symmetry", max(np.linalg.norm(Pk - Pk.T) for Pk in data.P) / scale_P)
    check("R symmetry", max(np.linalg.norm(Rk - Rk.T) for Rk in data.R) / scale_R)
    check("A orthogonality", np.linalg.norm(data.A.T @ data.A - np.eye(data.n)))

    p_min = data.p_lower_bound()
    if p_min <= tol * scale_P:
        k_bad = int(np.argmin([np.linalg.svd(Pk, compute_uv=False)[-1] for Pk in data.P]))
        issues.append(
            ValidationIssue("P invertibility", p_min, f"smallest singular value at sample {k_bad}")
        )

    A = data.A
    check("P compatibility", np.linalg.norm(data.P[0] - A @ data.P[-1] @ A.T) / scale_P)
    check("Q compatibility", np.linalg.norm(data.Q[0] - A @ data.Q[-1] @ A.T) / scale_Q)
    check("R compatibility", np.linalg.norm(data.R[0] - A @ data.R[-1] @ A.T) / scale_R)

    return ValidationReport(passed=not issues, issues=issues, p_min=p_min)


@dataclass(frozen=True)
class HamiltonianCoefficient:
    """Sampled B_{c,s} on the data grid, plus off-grid evaluation."""

    c: float
    s: float
    data: CoefficientData
    B: np.ndarray = field(repr=False)  # (N_t+1, 2n, 2n)
    asym_residual: float = 0.0

    def at(self, t) -> np.ndarray:
        """B_{c,s} at arbitrary query times (m, 2n, 2n)."""
        B, _ = _build_B(self.data.P_at(t), self.data.Q_at(t), self.data.R_at(t), self.c, self.s)
        return B

    @property
    def n(self) -> int:
        return self.data.n

    @property
    def T(self) -> float:
        return self.data.T


def _build_B(P, Q, R, c, s):
    Pinv = np.linalg.inv(P)
    PinvQ = Pinv @ Q
    top = np.concatenate([Pinv, -c * PinvQ], axis=-1)
    lower_right = c * c * np.swapaxes(Q, -1, -2) @ PinvQ - c * R - s * P
    bottom = np.concatenate([-c * np.swapaxes(PinvQ, -1, -2), lower_right], axis=-1)
    B = np.concatenate([top, bottom], axis=-2)
    Bt = np.swapaxes(B, -1, -2)
    asym = float(np.max(np.abs(B - Bt))) if B.size else 0.0
    return 0.5 * (B + Bt), asym


def assemble_B(data: CoefficientData, c: float, s: float) -> HamiltonianCoefficient:
    """Per-sample block assembly of B_{c,s}; symmetrized, residual recorded."""
    if not (0.0 <= c <= 1.0):
        raise CoefficientError(f"c must lie in [0, 1], got {c}")
    if s < 0.0:
        raise CoefficientError(f"s must be >= 0, got {s}")
    if data.p_lower_bound() <= 0.0:
        raise CoefficientError("P is singular on the grid")
    B, asym = _build_B(data.P, data.Q, data.R, c, s)
    return HamiltonianCoefficient(c=c, s=s, data=data, B=B, asym_residual=asym)


def legendre_reduce(data: CoefficientData, u: np.ndarray, du: np.ndarray, c: float = 1.0) -> np.ndarray:
    """Phase path z = (y, u) with y(t_k) = P u'(t_k) + c Q u(t_k) on the grid.

    Momentum sits in the first component, position in the second;
    z(0) = A_d z(T) exactly when u(0)=A u(T) and u'(0)=A u'(T).
    """
    u = np.asarray(u, dtype=float)
    du = np.asarray(du, dtype=float)
    m = data.grid_size + 1
    if u.shape != (m, data.n) or du.shape != (m, data.n):
        raise CoefficientError(f"u and u' must be sampled on the data grid, shape ({m}, {data.n})")
    y = np.einsum("kij,kj->ki", data.P, du) + c * np.einsum("kij,kj->ki", data.Q, u)
    return np.concatenate([y, u], axis=1)


def twist_gap(data: CoefficientData, z: np.ndarray) -> float:
    """|z(0) - A_d z(T)| for a phase path sampled on the grid."""
    Ad = double_matrix(data.A)
    return float(np.linalg.norm(z[0] - Ad @ z[-1]))


# ---------------------------------------------------------------------------
# Presets.  The paper never instantiates examples, so sign conventions are
# fixed here and documented: R = -omega^2 for the harmonic preset gives the
# Jacobi operator -u'' - omega^2 u; the Mathieu preset uses
# R(t) = -(a - 2 q cos 2t) on T = pi so kernel elements solve the classical
# Mathieu equation u'' + (a - 2 q cos 2t) u = 0.
# ---------------------------------------------------------------------------

PRESET_NAMES = ("harmonic", "mathieu", "twisted_harmonic", "constant_indefinite", "custom_sampled")

_DEFAULT_GRID = 256


def _sample_const(M, m):
    return np.broadcast_to(M, (m,) + M.shape).copy()


def _p_profile(T, m, p_mod):
    # Optional t-dependent principal symbol 1 + p_mod cos(2 pi t / T),
    # periodic and commuting with every holonomy used by the presets.
    t = np.linspace(0.0, T, m)
    return 1.0 + p_mod * np.cos(2.0 * np.pi * t / T)


def preset(name: str, params: dict | None = None) -> CoefficientData:
    """Build a named preset; the result always passes validate()."""
    params = dict(params or {})
    if name == "harmonic":
        omega = float(params.pop("omega", 1.0))
        T = float(params.pop("T", 2.0 * np.pi))
        p_mod = float(params.pop("p_mod", 0.0))
        _reject_extra(name, params)
        m = _DEFAULT_GRID + 1
        prof = _p_profile(T, m, p_mod)
        P = prof.reshape(-1, 1, 1) * np.ones((m, 1, 1))
        data = CoefficientData(
            n=1, T=T, P=P, Q=np.zeros((m, 1, 1)),
            R=_sample_const(np.array([[-(omega**2)]]), m),
            A=np.eye(1), source=f"harmonic(omega={omega}, T={T})",
        )
    elif name == "mathieu":
        a = float(params.pop("a", 1.0))
        q = float(params.pop("q", 0.0))
        T = float(params.pop("T", np.pi))
        _reject_extra(name, params)
        m = _DEFAULT_GRID + 1
        t = np.linspace(0.0, T, m)
        R = (-(a - 2.0 * q * np.cos(2.0 * t))).reshape(-1, 1, 1)
        data = CoefficientData(
            n=1, T=T, P=np.ones((m, 1, 1)), Q=np.zeros((m, 1, 1)), R=R,
            A=np.eye(1), source=f"mathieu(a={a}, q={q}, T={T})",
        )
    elif name == "twisted_harmonic":
        omega = float(params.pop("omega", 1.0))
        T = float(params.pop("T", 2.0 * np.pi))
        holonomy = params.pop("holonomy", "minus")
        p_mod = float(params.pop("p_mod", 0.0))
        _reject_extra(name, params)
        A = _holonomy_matrix(holonomy)
        n = A.shape[0]
        m = _DEFAULT_GRID + 1
        prof = _p_profile(T, m, p_mod)
        P = prof.reshape(-1, 1, 1) * np.broadcast_to(np.eye(n), (m, n, n))
        data = CoefficientData(
            n=n, T=T, P=P.copy(), Q=np.zeros((m, n, n)),
            R=_sample_const(-(omega**2) * np.eye(n), m),
            A=A, source=f"twisted_harmonic(omega={omega}, T={T}, holonomy={holonomy})",
        )
    elif name == "constant_indefinite":
        T = float(params.pop("T", 1.0))
        _reject_extra(name, params)
        m = _DEFAULT_GRID + 1
        data = CoefficientData(
            n=2, T=T, P=_sample_const(np.diag([1.0, -1.0]), m),
            Q=np.zeros((m, 2, 2)), R=np.zeros((m, 2, 2)),
            A=np.eye(2), source=f"constant_indefinite(T={T})",
        )
    elif name == "custom_sampled":
        data = from_sampled_arrays(**params)
    else:
        raise CoefficientError(f"unknown preset {name!r}; known: {', '.join(PRESET_NAMES)}")

    report = validate(data, tol=PRESET_TOL)
    if not report.passed:
        raise CoefficientError(f"preset {name} failed validation:\n{report}")
    return data


def _holonomy_matrix(spec) -> np.ndarray:
    """Holonomy shorthand: 'minus' (-1, n=1), 'reflect' (diag(1,-1)),
    'rotation:<angle>' (2x2 rotation), or an explicit matrix."""
    if isinstance(spec, str):
        if spec == "minus":
            return -np.eye(1)
        if spec == "reflect":
            return np.diag([1.0, -1.0])
        if spec.startswith("rotation:"):
            th = float(spec.split(":", 1)[1])
            c, s = np.cos(th), np.sin(th)
            return np.array([[c, -s], [s, c]])
        raise CoefficientError(f"unknown holonomy shorthand {spec!r}")
    A = np.asarray(spec, dtype=float)
    if not is_orthogonal(A, tol=1e-10):
        raise CoefficientError("holonomy matrix must be orthogonal")
    return A


def from_sampled_arrays(n, T, P, Q, R, A=None, source="custom_sampled") -> CoefficientData:
    n = int(n)
    P = np.asarray(P, dtype=float).reshape(-1, n, n)
    Q = np.asarray(Q, dtype=float).reshape(-1, n, n)
    R = np.asarray(R, dtype=float).reshape(-1, n, n)
    A = np.eye(n) if A is None else np.asarray(A, dtype=float).reshape(n, n)
    return CoefficientData(n=n, T=float(T), P=P, Q=Q, R=R, A=A, source=source)


def _reject_extra(name, params):
    if params:
        raise CoefficientError(f"unknown parameter(s) for preset {name}: {sorted(params)}")
