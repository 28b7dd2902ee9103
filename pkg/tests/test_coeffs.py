import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orbitindex.coeffs import (
    CoefficientError,
    assemble_B,
    from_sampled_arrays,
    legendre_reduce,
    preset,
    twist_gap,
    validate,
)
from orbitindex.sympl import double_matrix


def test_harmonic_preset_validates():
    data = preset("harmonic", {"omega": 1.0, "T": 2 * np.pi})
    assert validate(data, tol=1e-10).passed
    assert data.n == 1
    assert np.allclose(data.R, -1.0)


def test_commuting_twisted_constant_data_validates():
    # P constant, A = diag(1,-1), Q = 0, R constant commuting with A.
    m = 65
    P = np.broadcast_to(np.diag([2.0, 3.0]), (m, 2, 2)).copy()
    R = np.broadcast_to(np.diag([-1.0, 0.5]), (m, 2, 2)).copy()
    data = from_sampled_arrays(2, 1.0, P, np.zeros((m, 2, 2)), R, A=np.diag([1.0, -1.0]))
    assert validate(data, tol=1e-10).passed


def test_validate_flags_q_compatibility():
    data = preset("mathieu", {"a": 1.0, "q": 0.3})
    Q = data.Q.copy()
    Q[0] += 1e-3
    bad = from_sampled_arrays(1, data.T, data.P, Q, data.R, A=data.A)
    report = validate(bad, tol=1e-6)
    assert not report.passed
    assert any(i.name == "Q compatibility" for i in report.issues)


def test_validate_flags_degenerate_P_with_sample_index():
    m = 65
    P = np.ones((m, 1, 1))
    P[7] = 0.0
    data = from_sampled_arrays(1, 1.0, P, np.zeros((m, 1, 1)), np.zeros((m, 1, 1)))
    report = validate(data)
    assert not report.passed
    issue = next(i for i in report.issues if i.name == "P invertibility")
    assert "sample 7" in issue.detail


def test_assemble_B_examples():
    m = 65
    zeros = np.zeros((m, 1, 1))
    ones = np.ones((m, 1, 1))

    data = from_sampled_arrays(1, 1.0, ones, zeros, zeros)
    B = assemble_B(data, 0.0, 0.0).B
    assert np.allclose(B, np.array([[1.0, 0.0], [0.0, 0.0]]))

    data = from_sampled_arrays(1, 1.0, ones, 2 * ones, 3 * ones)
    B = assemble_B(data, 1.0, 0.0).B
    assert np.allclose(B[0], np.array([[1.0, -2.0], [-2.0, 1.0]]))

    s0 = 3.7
    data = from_sampled_arrays(1, 1.0, ones, zeros, zeros)
    B = assemble_B(data, 0.0, s0).B
    assert np.allclose(B[0], np.diag([1.0, -s0]))


def test_assemble_B_lower_right_block_at_c1_s0():
    rng = np.random.default_rng(3)
    m = 65
    Ppart = rng.standard_normal((m, 2, 2))
    P = 0.5 * (Ppart + np.swapaxes(Ppart, 1, 2)) + 3.0 * np.eye(2)
    Q = rng.standard_normal((m, 2, 2))
    Rpart = rng.standard_normal((m, 2, 2))
    R = 0.5 * (Rpart + np.swapaxes(Rpart, 1, 2))
    # make the seam compatible (A = I: periodic)
    P[-1], Q[-1], R[-1] = P[0], Q[0], R[0]
    data = from_sampled_arrays(2, 1.0, P, Q, R)
    hc = assemble_B(data, 1.0, 0.0)
    expect = np.swapaxes(Q, 1, 2) @ np.linalg.inv(P) @ Q - R
    assert np.allclose(hc.B[:, 2:, 2:], expect, atol=1e-12)
    assert hc.asym_residual < 1e-12


@settings(deadline=None, max_examples=25)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_assemble_B_affine_in_s_with_exact_derivative_block(seed, c, s1, s2):
    rng = np.random.default_rng(seed)
    m = 65
    Ppart = rng.standard_normal((m, 2, 2))
    P = 0.5 * (Ppart + np.swapaxes(Ppart, 1, 2)) + 3.0 * np.eye(2)
    P[-1] = P[0]
    z = np.zeros((m, 2, 2))
    data = from_sampled_arrays(2, 1.0, P, z, z)
    B1 = assemble_B(data, c, s1).B
    B2 = assemble_B(data, c, s2).B
    diff = B2 - B1
    assert np.allclose(diff[:, :2, :2], 0.0)
    assert np.allclose(diff[:, :2, 2:], 0.0)
    assert np.allclose(diff[:, 2:, 2:], -(s2 - s1) * P, atol=1e-12)


@pytest.mark.parametrize(
    "name,params",
    [
        ("harmonic", {"omega": 0.7}),
        ("harmonic", {"omega": 1.3, "p_mod": 0.3}),
        ("mathieu", {"a": 1.0, "q": 0.5}),
        ("twisted_harmonic", {"omega": 0.9, "holonomy": "minus"}),
        ("twisted_harmonic", {"omega": 0.9, "holonomy": "reflect", "p_mod": 0.2}),
        ("twisted_harmonic", {"omega": 1.1, "holonomy": "rotation:0.7"}),
        ("constant_indefinite", {}),
    ],
)
def test_presets_validate_tight(name, params):
    assert validate(preset(name, params), tol=1e-10).passed


def test_unknown_preset_and_params_rejected():
    with pytest.raises(CoefficientError):
        preset("nope")
    with pytest.raises(CoefficientError):
        preset("harmonic", {"bogus": 1})


def test_twisted_B_satisfies_seam_congruence():
    for params in ({"holonomy": "minus"}, {"holonomy": "reflect"}, {"holonomy": "rotation:0.7"}):
        data = preset("twisted_harmonic", {"omega": 1.2, **params})
        Ad = double_matrix(data.A)
        for (c, s) in [(0.0, 0.0), (0.5, 1.3), (1.0, 2.0)]:
            B = assemble_B(data, c, s).B
            assert np.allclose(B[0], Ad @ B[-1] @ Ad.T, atol=1e-9)


def test_legendre_reduce_examples():
    data = preset("harmonic", {"omega": 1.0, "T": 2 * np.pi})
    t = data.grid

    # P=1, Q=0, u = cos t -> y = -sin t
    z = legendre_reduce(data, np.cos(t)[:, None], -np.sin(t)[:, None])
    assert np.allclose(z[:, 0], -np.sin(t))

    # harmonic: u = sin t -> z = (cos t, sin t), |z| constant
    z = legendre_reduce(data, np.sin(t)[:, None], np.cos(t)[:, None])
    assert np.allclose(z, np.stack([np.cos(t), np.sin(t)], axis=1))
    assert np.allclose(np.linalg.norm(z, axis=1), 1.0)
    assert twist_gap(data, z) < 1e-12

    # P=2, Q=1, u == 1 -> y == 1
    m = 65
    data2 = from_sampled_arrays(1, 1.0, 2 * np.ones((m, 1, 1)), np.ones((m, 1, 1)), np.zeros((m, 1, 1)))
    z = legendre_reduce(data2, np.ones((m, 1)), np.zeros((m, 1)))
    assert np.allclose(z[:, 0], 1.0)

    with pytest.raises(CoefficientError):
        legendre_reduce(data, np.zeros((7, 1)), np.zeros((7, 1)))


def test_twist_gap_iff_twisted_u_conditions():
    data = preset("twisted_harmonic", {"omega": 1.0, "holonomy": "minus", "T": np.pi})
    t = data.grid
    # u = cos(t/2) satisfies u(0) = -u(pi)? cos(0)=1, cos(pi/2)=0 -> no.
    # use u = cos(t) on [0, pi]: u(0)=1, u(pi)=-1, u(0) = -u(pi)  OK
    # and u' = -sin t: u'(0)=0 = -u'(pi)=0  OK
    z = legendre_reduce(data, np.cos(t)[:, None], -np.sin(t)[:, None])
    assert twist_gap(data, z) < 1e-12
    # u = cos(t/2) breaks u(0) = -u(T): 1 != -0
    z_bad = legendre_reduce(data, np.cos(t / 2)[:, None], (-0.5 * np.sin(t / 2))[:, None])
    assert twist_gap(data, z_bad) > 1.0


def test_trig_interpolation_is_exact_for_bandlimited_data():
    data = preset("mathieu", {"a": 1.5, "q": 0.4})
    tq = np.array([0.1234, 0.9, 2.2, np.pi - 1e-3])
    exact = -(1.5 - 0.8 * np.cos(2 * tq))
    assert np.allclose(data.R_at(tq)[:, 0, 0], exact, atol=1e-12)
    # derivative of P(t) = 1 + 0.3 cos(2 pi t / T)
    data2 = preset("harmonic", {"omega": 1.0, "p_mod": 0.3, "T": 2 * np.pi})
    dP = data2.P_at(tq, deriv=1)[:, 0, 0]
    assert np.allclose(dP, -0.3 * np.sin(tq), atol=1e-10)


def test_spline_interpolation_for_twisted_data():
    data = preset("twisted_harmonic", {"omega": 1.0, "holonomy": "minus", "p_mod": 0.25, "T": 2.0})
    tq = np.linspace(0.05, 1.95, 11)
    expect = 1.0 + 0.25 * np.cos(2 * np.pi * tq / 2.0)
    assert np.allclose(data.P_at(tq)[:, 0, 0], expect, atol=1e-8)
    dexp = -0.25 * (2 * np.pi / 2.0) * np.sin(2 * np.pi * tq / 2.0)
    assert np.allclose(data.P_at(tq, deriv=1)[:, 0, 0], dexp, atol=1e-5)
