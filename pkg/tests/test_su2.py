"""Gate parametrization, gauge handling, and sampling properties."""

import numpy as np
import pytest

from su2tomo import su2
from su2tomo.errors import InvalidMatrixError, InvalidParameterError


def haar_params(rng, count):
    return [su2.quat_to_params(q) for q in su2.sample_haar_quats(rng, count)]


def test_gate_matrix_identity_and_half_turns():
    ident = su2.gate_matrix(su2.GateParams(0.0, np.array([0.0, 0.0, 1.0])))
    assert np.allclose(ident, np.eye(2), atol=1e-15)
    # theta = pi/2 about z gives diag(-i, i); its gauge partner diag(i, -i)
    # reads back as the same canonical gate.
    half_z = su2.gate_matrix(su2.GateParams(np.pi / 2, np.array([0, 0, 1.0])))
    assert np.allclose(half_z, np.diag([-1j, 1j]), atol=1e-15)
    p = su2.params_from_matrix(np.diag([1j, -1j]))
    assert p.theta == pytest.approx(np.pi / 2, abs=1e-12)
    assert np.allclose(p.n, [0, 0, 1], atol=1e-12)


def test_gate_matrix_is_special_unitary():
    rng = np.random.default_rng(1)
    for p in haar_params(rng, 200):
        U = su2.gate_matrix(p)
        assert np.allclose(U @ U.conj().T, np.eye(2), atol=1e-12)
        assert np.linalg.det(U) == pytest.approx(1.0, abs=1e-12)


def test_check_unitary_rejects_bad_matrices():
    with pytest.raises(InvalidMatrixError):
        su2.check_unitary(1.1 * np.eye(2))
    with pytest.raises(InvalidMatrixError):
        su2.check_unitary(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(InvalidMatrixError):
        su2.check_unitary(np.eye(3))


def test_validate_params_rejects_bad_values():
    good_axis = np.array([0.0, 0.0, 1.0])
    with pytest.raises(InvalidParameterError):
        su2.validate_params(su2.GateParams(-0.1, good_axis))
    with pytest.raises(InvalidParameterError):
        su2.validate_params(su2.GateParams(np.pi + 0.1, good_axis))
    with pytest.raises(InvalidParameterError):
        su2.validate_params(su2.GateParams(1.0, np.array([0.0, 0.0, 2.0])))
    with pytest.raises(InvalidParameterError):
        su2.validate_params(su2.GateParams(1.0, np.zeros(3)))


def test_canonicalize_examples():
    # Lower-hemisphere axis flips.
    p = su2.canonicalize(su2.GateParams(1.0, np.array([0.0, 0.0, -1.0])))
    assert p.theta == pytest.approx(np.pi - 1.0)
    assert np.allclose(p.n, [0, 0, 1])
    # Equator tie-break: n_x must be positive.
    p = su2.canonicalize(su2.GateParams(np.pi / 2, np.array([-1.0, 0, 0])))
    assert np.allclose(p.n, [1, 0, 0])
    # theta at the degenerate endpoints collapses to the fixed axis.
    for theta in (0.0, np.pi):
        p = su2.canonicalize(su2.GateParams(theta, np.array([1.0, 0, 0])))
        assert p.theta == 0.0
        assert np.allclose(p.n, [0, 0, 1])


def test_canonicalize_gauge_completeness():
    rng = np.random.default_rng(2)
    params = haar_params(rng, 300)
    # Add boundary constructions that stress the tie-break rules.
    for theta in (np.pi / 2, 0.7):
        for n in ([1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0],
                  [0, 0, -1], [0.6, -0.8, 0]):
            params.append(su2.GateParams(theta, np.array(n, dtype=float)))
    for p in params:
        a = su2.canonicalize(p)
        b = su2.canonicalize(su2.gauge_flip(p))
        # Axis flips are exact negations, so the axes agree bitwise; theta
        # passes through pi - theta arithmetic once, hence the 1-ulp bound.
        assert a.theta == pytest.approx(b.theta, abs=1e-15)
        assert np.array_equal(a.n, b.n)


def test_params_matrix_round_trip():
    rng = np.random.default_rng(3)
    for p in haar_params(rng, 200):
        q = su2.params_from_matrix(su2.gate_matrix(p))
        assert su2.fidelity(su2.gate_matrix(p), su2.gate_matrix(q)) == (
            pytest.approx(1.0, abs=1e-12)
        )
        assert q.theta == pytest.approx(p.theta, abs=1e-9)


def test_fidelity_properties():
    rng = np.random.default_rng(4)
    ps = haar_params(rng, 50)
    for p, q in zip(ps[:25], ps[25:]):
        U, V = su2.gate_matrix(p), su2.gate_matrix(q)
        assert su2.fidelity(U, U) == pytest.approx(1.0, abs=1e-12)
        assert su2.fidelity(U, -U) == pytest.approx(1.0, abs=1e-12)
        assert su2.fidelity(U, V) == pytest.approx(
            su2.fidelity(V, U), abs=1e-12
        )
        assert su2.fidelity(U, V) == pytest.approx(
            abs(np.trace(U.conj().T @ V)) / 2.0, abs=1e-12
        )


def test_compose_matches_matrix_product():
    rng = np.random.default_rng(5)
    for _ in range(20):
        U = su2.gate_matrix(su2.sample_haar(rng))
        V = su2.gate_matrix(su2.sample_haar(rng))
        assert np.allclose(su2.compose(U, V), U @ V, atol=1e-12)


def test_quat_round_trip_and_matrices():
    rng = np.random.default_rng(6)
    quats = su2.sample_haar_quats(rng, 200)
    mats = su2.quat_matrices(quats)
    for q, U in zip(quats, mats):
        p = su2.quat_to_params(q)
        assert su2.fidelity(U, su2.gate_matrix(p)) == pytest.approx(
            1.0, abs=1e-12
        )
        back = su2.params_to_quat(p)
        assert abs(float(np.dot(back, q))) == pytest.approx(1.0, abs=1e-12)


def test_canonicalize_quats_rules_and_exactness():
    cases = np.array(
        [
            [0.3, 0.1, 0.2, -0.5],   # qz < 0: flip
            [0.3, 0.1, 0.2, 0.5],    # qz > 0: keep
            [0.3, -0.5, 0.2, 0.0],   # qz = 0, qx < 0: flip
            [0.3, 0.0, -0.5, 0.0],   # qz = qx = 0, qy < 0: flip
            [-0.5, 0.0, 0.0, 0.0],   # pure scalar: q0 > 0
        ]
    )
    out = su2.canonicalize_quats(cases)
    assert np.array_equal(out[0], -cases[0])
    assert np.array_equal(out[1], cases[1])
    assert np.array_equal(out[2], -cases[2])
    assert np.array_equal(out[3], -cases[3])
    assert np.array_equal(out[4], -cases[4])
    # Flips are exact negations: no arithmetic beyond the sign.
    assert np.array_equal(np.abs(out), np.abs(cases))


def test_quat_fidelity_matches_matrix_fidelity():
    rng = np.random.default_rng(7)
    qa = su2.sample_haar_quats(rng, 50)
    qb = su2.sample_haar_quats(rng, 50)
    fq = su2.quat_fidelity(qa, qb)
    for i in range(50):
        fm = su2.fidelity(
            su2.quat_matrices(qa[i : i + 1])[0],
            su2.quat_matrices(qb[i : i + 1])[0],
        )
        assert fq[i] == pytest.approx(fm, abs=1e-12)


def test_sample_haar_statistics():
    rng = np.random.default_rng(8)
    quats = su2.sample_haar_quats(rng, 20000)
    assert np.allclose(np.linalg.norm(quats, axis=1), 1.0, atol=1e-12)
    theta, axis = su2.quats_to_theta_axis(quats)
    # Rotation-angle density is sin^2(theta) on [0, pi]: mean pi/2.
    assert abs(theta.mean() - np.pi / 2) < 0.02
    # Canonical axes live on the upper hemisphere; uniform area measure
    # gives E[n_z] = 1/2 and symmetric n_x, n_y.
    assert abs(axis[:, 0].mean()) < 0.02
    assert abs(axis[:, 1].mean()) < 0.02
    assert abs(axis[:, 2].mean() - 0.5) < 0.02
    assert axis[:, 2].min() >= 0.0


def test_sample_haar_deterministic_under_seed():
    a = su2.sample_haar_quats(np.random.default_rng(99), 64)
    b = su2.sample_haar_quats(np.random.default_rng(99), 64)
    assert np.array_equal(a, b)
    p = su2.sample_haar(np.random.default_rng(5))
    q = su2.sample_haar(np.random.default_rng(5))
    assert p.theta == q.theta and np.array_equal(p.n, q.n)
