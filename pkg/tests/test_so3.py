import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from auvnav.errors import GimbalLockError
from auvnav.so3 import (
    exp_so3,
    from_euler,
    log_so3,
    orthonormality_residual,
    orthonormalize,
    skew,
    to_euler,
    vee,
)


def test_skew_entries():
    s = skew(np.array([1.0, 2.0, 3.0]))
    expected = np.array([[0.0, -3.0, 2.0],
                         [3.0, 0.0, -1.0],
                         [-2.0, 1.0, 0.0]])
    np.testing.assert_array_equal(s, expected)
    assert np.all(s.T == -s)


def test_skew_vee_roundtrip():
    rng = np.random.default_rng(3)
    for _ in range(100):
        v = rng.normal(size=3)
        np.testing.assert_array_equal(vee(skew(v)), v)


def test_skew_is_cross_product():
    rng = np.random.default_rng(4)
    for _ in range(100):
        a, b = rng.normal(size=3), rng.normal(size=3)
        np.testing.assert_allclose(skew(a) @ b, np.cross(a, b), atol=1e-15)


def test_exp_quarter_turn():
    c = exp_so3(np.array([0.0, 0.0, math.pi / 2]))
    np.testing.assert_allclose(c @ np.array([1.0, 0.0, 0.0]),
                               [0.0, 1.0, 0.0], atol=1e-12)


def test_exp_zero():
    np.testing.assert_array_equal(exp_so3(np.zeros(3)), np.eye(3))


def test_exp_matches_scipy():
    rng = np.random.default_rng(5)
    for _ in range(500):
        phi = rng.normal(size=3) * rng.uniform(0.01, 3.0)
        c = exp_so3(phi)
        c_ref = Rotation.from_rotvec(phi).as_matrix()
        np.testing.assert_allclose(c, c_ref, atol=1e-12)


def test_log_pi_rotation():
    # rotation by pi about z: trace = -1, the branch the small-angle
    # series cannot reach
    c = np.diag([-1.0, -1.0, 1.0])
    phi = log_so3(c)
    assert np.linalg.norm(phi) == pytest.approx(math.pi, abs=1e-9)
    np.testing.assert_allclose(np.abs(phi), [0.0, 0.0, math.pi], atol=1e-9)


def test_exp_log_roundtrip():
    rng = np.random.default_rng(6)
    for _ in range(1000):
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        phi = direction * rng.uniform(1e-8, math.pi - 0.01)
        back = log_so3(exp_so3(phi))
        assert np.linalg.norm(back - phi) < 1e-9


def test_log_exp_roundtrip_matrices():
    rng = np.random.default_rng(7)
    for _ in range(200):
        c = Rotation.random(rng=rng).as_matrix()
        np.testing.assert_allclose(exp_so3(log_so3(c)), c, atol=1e-9)


def test_exp_orthonormal():
    rng = np.random.default_rng(8)
    for _ in range(200):
        c = exp_so3(rng.normal(size=3) * 2.0)
        assert orthonormality_residual(c) < 1e-12
        assert np.linalg.det(c) == pytest.approx(1.0, abs=1e-12)


def test_exp_first_order_bound():
    # || exp(phi) - (I + skew(phi)) || <= ||phi||^2 for small phi
    rng = np.random.default_rng(9)
    for _ in range(100):
        phi = rng.normal(size=3) * 1e-3
        lin = np.eye(3) + skew(phi)
        err = np.linalg.norm(exp_so3(phi) - lin, ord="fro")
        assert err <= np.dot(phi, phi)


def test_euler_quarter_yaw():
    c = from_euler(0.0, 0.0, math.pi / 2)
    r, p, y = to_euler(c)
    assert r == pytest.approx(0.0, abs=1e-12)
    assert p == pytest.approx(0.0, abs=1e-12)
    assert y == pytest.approx(math.pi / 2, rel=1e-12)


def test_euler_roundtrip():
    rng = np.random.default_rng(10)
    for _ in range(500):
        roll = float(rng.uniform(-math.pi, math.pi))
        pitch = float(rng.uniform(-1.4, 1.4))
        yaw = float(rng.uniform(-math.pi, math.pi))
        r, p, y = to_euler(from_euler(roll, pitch, yaw))
        assert r == pytest.approx(roll, abs=1e-9)
        assert p == pytest.approx(pitch, abs=1e-9)
        assert y == pytest.approx(yaw, abs=1e-9)


def test_euler_matches_scipy():
    rng = np.random.default_rng(11)
    for _ in range(200):
        roll, pitch, yaw = rng.uniform(-1.0, 1.0, size=3)
        c = from_euler(float(roll), float(pitch), float(yaw))
        c_ref = Rotation.from_euler("ZYX", [yaw, pitch, roll]).as_matrix()
        np.testing.assert_allclose(c, c_ref, atol=1e-12)


def test_euler_gimbal_lock():
    c = from_euler(0.2, math.pi / 2, 0.1)
    with pytest.raises(GimbalLockError):
        to_euler(c)


def test_orthonormalize_projects_back():
    rng = np.random.default_rng(12)
    for _ in range(100):
        c = exp_so3(rng.normal(size=3))
        drifted = c + rng.normal(size=(3, 3)) * 1e-6
        fixed = orthonormalize(drifted)
        assert orthonormality_residual(fixed) < 1e-14
        np.testing.assert_allclose(fixed, c, atol=1e-5)


def test_orthonormalize_identity_on_clean_input():
    c = exp_so3(np.array([0.3, -0.2, 0.9]))
    np.testing.assert_allclose(orthonormalize(c), c, atol=1e-15)
