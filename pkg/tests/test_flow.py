import numpy as np
import pytest

from orbitindex.coeffs import assemble_B, from_sampled_arrays, preset
from orbitindex.flow import (
    FlowError,
    floquet,
    fundamental_solution,
    fundamental_solution_with_s_derivative,
    monodromy,
    multiplier_product_residual,
    poincare_map,
    propagate,
)
from orbitindex.sympl import standard_J


def flat_data(n=1, T=1.0, P=None, Q=None, R=None, A=None, m=65):
    P = np.eye(n) if P is None else np.asarray(P, dtype=float)
    Q = np.zeros((n, n)) if Q is None else np.asarray(Q, dtype=float)
    R = np.zeros((n, n)) if R is None else np.asarray(R, dtype=float)
    return from_sampled_arrays(
        n, T,
        np.broadcast_to(P, (m, n, n)).copy(),
        np.broadcast_to(Q, (m, n, n)).copy(),
        np.broadcast_to(R, (m, n, n)).copy(),
        A=A,
    )


def test_zero_field_gives_identity():
    # B == 0 needs R = Q = 0 and the upper-left block P^-1 = 0 is impossible,
    # so emulate with the constant system z' = J B z, B = diag(1, 0) at c=0:
    # that is the free particle; instead check the s-shift produces B=diag(1,-s).
    data = flat_data()
    B = assemble_B(data, 0.0, 0.0)
    assert np.allclose(B.B[0], np.diag([1.0, 0.0]))
    path = fundamental_solution(B, 128)
    shear = np.array([[1.0, 0.0], [1.0, 1.0]])
    assert np.allclose(path.end(), shear, atol=1e-12)


def test_constant_B_identity_rotation():
    # n=1, B = I: psi(t) = exp(tJ)
    data = flat_data(R=[[-1.0]])  # B = diag(P^-1, -R) = I at c=1, s=0
    B = assemble_B(data, 1.0, 0.0)
    assert np.allclose(B.B[0], np.eye(2))
    path = fundamental_solution(B, 512)
    t = 0.5
    k = np.argmin(np.abs(path.grid - t))
    th = path.grid[k]
    exact = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    assert np.abs(path.frames[k] - exact).max() < 1e-6
    assert path.residual < 1e-12


def test_mathieu_a1_q0_trace():
    data = preset("mathieu", {"a": 1.0, "q": 0.0})
    path = fundamental_solution(assemble_B(data, 1.0, 0.0), 2048)
    assert np.trace(path.end()) == pytest.approx(2 * np.cos(np.pi), abs=1e-6)


def test_mathieu_trace_against_ivp_oracle():
    from scipy.integrate import solve_ivp

    for (a, q) in [(0.2, 0.1), (1.0, 0.5), (1.8, 0.7)]:
        data = preset("mathieu", {"a": a, "q": q})
        path = fundamental_solution(assemble_B(data, 1.0, 0.0), 4096)

        def rhs(t, z):
            y, u = z
            return [-(a - 2 * q * np.cos(2 * t)) * u, y]

        cols = []
        for z0 in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
            sol = solve_ivp(rhs, (0.0, np.pi), z0, method="DOP853", rtol=1e-12, atol=1e-13)
            cols.append(sol.y[:, -1])
        oracle = np.stack(cols, axis=1)
        assert abs(np.trace(path.end()) - np.trace(oracle)) < 1e-6


def test_convergence_order_two():
    data = preset("harmonic", {"omega": 1.0, "T": 2 * np.pi})
    B = assemble_B(data, 1.0, 0.0)
    errs = []
    for N in (256, 512, 1024):
        path = fundamental_solution(B, N)
        errs.append(np.abs(path.end() - np.eye(2)).max())
    rates = [np.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    assert all(1.8 <= r <= 2.2 for r in rates)


def test_symplectic_residual_certificate():
    for name, params in [("mathieu", {"a": 2.0, "q": 1.0}), ("constant_indefinite", {})]:
        data = preset(name, params)
        path = fundamental_solution(assemble_B(data, 1.0, 0.0), 4096)
        assert path.residual <= 1e-9
        assert path.det_residual <= 1e-9


def test_monodromy_examples():
    data = flat_data()  # psi(T) = shear
    path = fundamental_solution(assemble_B(data, 0.0, 0.0), 128)
    assert np.allclose(monodromy(path, np.eye(1)), path.end())
    assert np.allclose(monodromy(path, -np.eye(1)), -path.end())
    with pytest.raises(FlowError):
        monodromy(path, np.eye(2))
    with pytest.raises(FlowError):
        monodromy(path, np.array([[2.0]]))


def test_floquet_rotation_stable():
    th = 0.3
    M = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    v = floquet(M)
    assert v.spectrally_stable and v.linearly_stable
    assert v.semisimple_defect == 0
    assert np.allclose(sorted([l for l, _ in v.multipliers], key=lambda z: z.imag),
                       [np.exp(-1j * th), np.exp(1j * th)])


def test_floquet_jordan_block():
    v = floquet(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert v.spectrally_stable and not v.linearly_stable
    assert v.semisimple_defect == 1
    assert v.multipliers == [(1 + 0j, 2)]


def test_floquet_hyperbolic():
    v = floquet(np.diag([2.0, 0.5]))
    assert not v.spectrally_stable
    assert v.max_modulus == pytest.approx(2.0)


def test_floquet_reciprocal_pairing_and_product():
    rng = np.random.default_rng(11)
    from scipy.linalg import expm

    for _ in range(10):
        S = rng.standard_normal((4, 4))
        S = 0.5 * (S + S.T)
        M = expm(standard_J(2) @ S)
        v = floquet(M)
        assert multiplier_product_residual(v) < 1e-8
        lams = [l for l, mult in v.multipliers for _ in range(mult)]
        for lam in lams:
            assert min(abs(1.0 / np.conj(lam) - mu) for mu in lams) < 1e-6 * max(1.0, abs(lam) ** 2)


def test_poincare_map_matches_monodromy():
    cases = [
        ("harmonic", {"omega": 1.0, "T": 2 * np.pi}, np.eye(2), 8192),
        ("harmonic", {"omega": 1.0, "T": np.pi}, -np.eye(2), 4096),
    ]
    for name, params, expect, N in cases:
        data = preset(name, params)
        PM = poincare_map(data, N)
        assert np.abs(PM - expect).max() < 1e-6
        path = fundamental_solution(assemble_B(data, 1.0, 0.0), N)
        # same scheme, independent assembly: agreement at round-off level
        assert np.abs(PM - monodromy(path, data.A)).max() < 1e-8


def test_poincare_free_particle_shear():
    data = flat_data(T=1.0)
    PM = poincare_map(data, 256)
    assert np.allclose(PM, np.array([[1.0, 0.0], [1.0, 1.0]]), atol=1e-10)


def test_poincare_map_with_coupling_and_twist():
    # nonzero Q exercises the Q^T P^-1 coupling blocks in both routes
    data = flat_data(n=1, T=1.0, Q=[[0.7]], R=[[0.4]], m=65)
    PM = poincare_map(data, 1024)
    path = fundamental_solution(assemble_B(data, 1.0, 0.0), 1024)
    assert np.abs(PM - monodromy(path, data.A)).max() < 1e-7

    twisted = preset("twisted_harmonic", {"omega": 1.1, "holonomy": "reflect"})
    PM = poincare_map(twisted, 1024)
    path = fundamental_solution(assemble_B(twisted, 1.0, 0.0), 1024)
    assert np.abs(PM - monodromy(path, twisted.A)).max() < 1e-7


def test_propagate_matches_full_integration():
    data = preset("mathieu", {"a": 1.3, "q": 0.4})
    B = assemble_B(data, 1.0, 0.0)
    path = fundamental_solution(B, 1024)
    k = 313
    # 3/8 of a coarse cell = exactly 3 cells of the 8x finer grid
    t_target = path.grid[k] + 0.375 * (path.grid[k + 1] - path.grid[k])
    psi = propagate(B, path.grid[k], t_target, path.frames[k], n_sub=8)
    fine = fundamental_solution(B, 8192)
    assert np.abs(psi - fine.frames[8 * k + 3]).max() < 5e-6


def test_s_derivative_of_flow_free_particle():
    # closed form: psi_s(T) for B = diag(1, -s) at s=0 gives
    # d/ds psi(T) = [[T^2/2, T], [T^3/6, T^2/2]]
    data = flat_data(T=1.0)
    B = assemble_B(data, 0.0, 0.0)
    psiT, dpsiT = fundamental_solution_with_s_derivative(B, 512)
    assert np.allclose(psiT, [[1.0, 0.0], [1.0, 1.0]], atol=1e-12)
    expect = np.array([[0.5, 1.0], [1.0 / 6.0, 0.5]])
    assert np.abs(dpsiT - expect).max() < 1e-6
