import math

import numpy as np
import pytest

from auvnav.geodesy import (
    CurvilinearPosition,
    cart_to_curv_matrix,
    curv_to_cart_matrix,
    earth_rate_n,
    principal_radii,
)
from auvnav.sensors import (
    LeverArm,
    LeverArmSet,
    NoiseConfig,
    depth_noise_var,
    dvl_noise_cov,
    gps_noise_cov,
    omega_eb_b,
    predict_depth,
    predict_dvl,
    predict_gps,
    predict_range,
    range_noise_var,
    sensor_position,
)
from auvnav.so3 import exp_so3, from_euler
from auvnav.strapdown import ImuSample, NavState

OMEGA = 7.292115e-5
ARMS = LeverArmSet()


def make_state(attitude=None, velocity=None, lat=0.0, alt=0.0):
    return NavState(np.eye(3) if attitude is None else attitude,
                    np.zeros(3) if velocity is None else np.asarray(velocity, float),
                    CurvilinearPosition(lat, 0.0, alt))


def test_sensor_position_zero_arm():
    st = make_state(lat=0.3, alt=-5.0)
    p = sensor_position(st, LeverArm(np.zeros(3)))
    assert p == st.position


def test_sensor_position_gps_arm():
    st = make_state()
    p = sensor_position(st, ARMS.gps)
    rn, _ = principal_radii(0.0)
    assert p.latitude == pytest.approx(-1.2934 / rn, rel=1e-9)
    assert p.longitude == 0.0
    assert p.altitude == pytest.approx(0.1926, abs=1e-12)


def test_sensor_position_heading_flip():
    st = make_state()
    flipped = make_state(attitude=from_euler(0.0, 0.0, math.pi))
    d0 = sensor_position(st, ARMS.gps).as_array() - st.position.as_array()
    d1 = sensor_position(flipped, ARMS.gps).as_array() - st.position.as_array()
    np.testing.assert_allclose(d1[:2], -d0[:2], atol=1e-18)
    assert d1[2] == pytest.approx(d0[2], abs=1e-15)


def test_lever_displacement_magnitude():
    # the metric displacement of any arm equals its body-frame length
    rng = np.random.default_rng(30)
    st0 = make_state(lat=0.7, alt=-20.0)
    for _ in range(50):
        att = exp_so3(rng.normal(size=3))
        arm = LeverArm(rng.uniform(-2.0, 2.0, size=3))
        st = NavState(att, np.zeros(3), st0.position)
        p = sensor_position(st, arm)
        shift = curv_to_cart_matrix(st.position) @ (
            p.as_array() - st.position.as_array())
        assert np.linalg.norm(shift) == pytest.approx(
            np.linalg.norm(arm.offset), abs=1e-9)


def test_omega_eb_cancellation():
    st = make_state(lat=0.5)
    sample = ImuSample(0.0, earth_rate_n(0.5), np.zeros(3))
    np.testing.assert_allclose(omega_eb_b(st, sample), np.zeros(3), atol=1e-18)


def test_omega_eb_equator():
    st = make_state()
    sample = ImuSample(0.0, [0.1, 0.0, 0.0], np.zeros(3))
    np.testing.assert_allclose(omega_eb_b(st, sample),
                               [0.1 - OMEGA, 0.0, 0.0], atol=1e-18)


def test_omega_eb_bias_shift():
    st = make_state(lat=0.2)
    shift = np.array([0.01, -0.02, 0.03])
    base = omega_eb_b(st, ImuSample(0.0, [0.1, 0.2, 0.3], np.zeros(3)))
    st.gyro_bias = shift
    shifted = omega_eb_b(
        st, ImuSample(0.0, np.array([0.1, 0.2, 0.3]) + shift, np.zeros(3)))
    np.testing.assert_allclose(base, shifted, atol=1e-15)


def test_predict_dvl_forward_flight():
    st = make_state(velocity=[1.6, 0.0, 0.0])
    sample = ImuSample(0.0, earth_rate_n(0.0), np.zeros(3))
    np.testing.assert_allclose(predict_dvl(st, sample, ARMS.dvl),
                               [1.6, 0.0, 0.0], atol=1e-15)


def test_predict_dvl_rotation_arm():
    st = make_state()
    sample = ImuSample(0.0, earth_rate_n(0.0) + np.array([0.0, 0.0, 1.0]),
                       np.zeros(3))
    np.testing.assert_allclose(predict_dvl(st, sample, ARMS.dvl),
                               [0.0, 0.0984, 0.0], atol=1e-12)


def test_predict_dvl_linear_in_velocity():
    rng = np.random.default_rng(31)
    att = exp_so3(np.array([0.1, -0.2, 0.4]))
    sample = ImuSample(0.0, [0.02, -0.01, 0.05], np.zeros(3))
    for _ in range(20):
        v1, v2 = rng.normal(size=3), rng.normal(size=3)
        a = NavState(att, v1, CurvilinearPosition(0.1, 0.0, -3.0))
        b = NavState(att, v2, CurvilinearPosition(0.1, 0.0, -3.0))
        c = NavState(att, v1 + v2, CurvilinearPosition(0.1, 0.0, -3.0))
        rest = NavState(att, np.zeros(3), CurvilinearPosition(0.1, 0.0, -3.0))
        lhs = predict_dvl(c, sample, ARMS.dvl)
        rhs = (predict_dvl(a, sample, ARMS.dvl)
               + predict_dvl(b, sample, ARMS.dvl)
               - predict_dvl(rest, sample, ARMS.dvl))
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_predict_depth_sign():
    st = make_state(alt=-3.0)
    assert predict_depth(st, LeverArm(np.zeros(3)), NoiseConfig()) == \
        pytest.approx(3.0, abs=1e-12)


def test_predict_depth_arm_offset():
    st = make_state(alt=-3.0)
    zero = predict_depth(st, LeverArm(np.zeros(3)), NoiseConfig())
    with_arm = predict_depth(st, ARMS.depth, NoiseConfig())
    # arm z = -0.0156 raises the sensor, shrinking measured depth
    assert zero - with_arm == pytest.approx(0.0156, abs=1e-9)


def test_predict_depth_pitched():
    st = make_state(attitude=from_euler(0.0, math.pi / 2 - 1e-9, 0.0),
                    alt=-10.0)
    zero = predict_depth(st, LeverArm(np.zeros(3)), NoiseConfig())
    nose_up = predict_depth(st, LeverArm([-1.4192, 0.0, 0.0]), NoiseConfig())
    # nose-up: the -x arm points straight down
    assert nose_up - zero == pytest.approx(1.4192, abs=1e-6)


def test_predict_gps_matches_sensor_position():
    st = make_state(attitude=from_euler(0.1, 0.05, 2.0), lat=0.4, alt=-1.0)
    assert predict_gps(st, ARMS.gps) == sensor_position(st, ARMS.gps)


def test_predict_range_coincident():
    st = make_state(lat=0.2, alt=-30.0)
    p_s = sensor_position(st, ARMS.range)
    assert predict_range(st, ARMS.range, p_s) == pytest.approx(0.0, abs=1e-9)


def test_predict_range_north_100m():
    st = make_state(lat=0.2, alt=-30.0)
    p_s = sensor_position(st, ARMS.range)
    rn, _ = principal_radii(p_s.latitude)
    tx = CurvilinearPosition(p_s.latitude + 100.0 / (rn + p_s.altitude),
                             p_s.longitude, p_s.altitude)
    assert predict_range(st, ARMS.range, tx) == pytest.approx(100.0, abs=1e-6)


def test_predict_range_swap_symmetry():
    st = make_state(lat=0.01, alt=-30.0)
    p_s = sensor_position(st, ARMS.range)
    t = cart_to_curv_matrix(p_s)
    tx = CurvilinearPosition.from_array(
        p_s.as_array() + t @ np.array([600.0, 800.0, 0.0]))
    fwd = predict_range(st, ARMS.range, tx)
    st_at_tx = NavState(st.attitude, st.velocity, tx)
    back = predict_range(st_at_tx, LeverArm(np.zeros(3)),
                         sensor_position(st, ARMS.range))
    assert abs(fwd - back) / fwd < 1e-6


def test_predict_range_nonnegative():
    rng = np.random.default_rng(32)
    st = make_state(lat=-0.3, alt=-50.0)
    t = cart_to_curv_matrix(st.position)
    for _ in range(100):
        tx = CurvilinearPosition.from_array(
            st.position.as_array() + t @ rng.uniform(-2000, 2000, size=3))
        assert predict_range(st, ARMS.range, tx) >= 0.0


def test_noise_covariances():
    cfg = NoiseConfig()
    np.testing.assert_array_equal(dvl_noise_cov(cfg), 1e-4 * np.eye(3))
    assert depth_noise_var(cfg) == 7.0e-5
    assert range_noise_var(cfg) == 1.0
    pos = CurvilinearPosition(0.0, 0.0, 0.0)
    r = gps_noise_cov(cfg, pos)
    t = cart_to_curv_matrix(pos)
    np.testing.assert_allclose(r, 6.25 * (t @ t.T), atol=0.0)
    # sanity: the metric variance round-trips to 6.25 m^2
    tm = curv_to_cart_matrix(pos)
    np.testing.assert_allclose(tm @ r @ tm.T, 6.25 * np.eye(3), rtol=1e-9)


def test_lever_arm_validation():
    with pytest.raises(ValueError):
        LeverArm(np.array([11.0, 0.0, 0.0]))
    with pytest.raises(ValueError):
        LeverArm(np.array([1.0, 0.0]))
