import math

import numpy as np
import pytest

from auvnav.errors import SingularityError
from auvnav.geodesy import (
    WGS84,
    CurvilinearPosition,
    EllipsoidParams,
    cart_to_curv_matrix,
    curv_to_cart_matrix,
    earth_rate_n,
    gravity_n,
    principal_radii,
    transport_rate_n,
)

A = 6378137.0
E2 = 6.69437999014e-3
OMEGA = 7.292115e-5


def pos(lat=0.0, lon=0.0, alt=0.0):
    return CurvilinearPosition(lat, lon, alt)


def test_radii_equator():
    rn, re = principal_radii(0.0)
    assert re == A
    assert rn == pytest.approx(6335439.327, abs=0.01)


def test_radii_pole():
    rn, re = principal_radii(math.pi / 2)
    expected = A / math.sqrt(1.0 - E2)
    assert rn == pytest.approx(expected, rel=1e-12)
    assert re == pytest.approx(expected, rel=1e-12)


def test_radii_ordering():
    # R_E >= R_N everywhere, equal only at the poles
    for lat in np.linspace(-math.pi / 2, math.pi / 2, 101):
        rn, re = principal_radii(float(lat))
        assert re >= rn
        if abs(abs(lat) - math.pi / 2) > 1e-6:
            assert re > rn


def test_radii_domain():
    with pytest.raises(ValueError):
        principal_radii(2.0)
    with pytest.raises(ValueError):
        principal_radii(-2.0)


def test_cart_to_curv_entries():
    t = cart_to_curv_matrix(pos())
    assert t[1, 1] == pytest.approx(1.0 / A, rel=1e-12)
    assert t[2, 2] == -1.0
    assert t[0, 1] == 0.0 and t[1, 0] == 0.0


def test_curv_to_cart_entries():
    t = curv_to_cart_matrix(pos())
    assert t[0, 0] == pytest.approx(6335439.327, abs=0.01)
    t100 = curv_to_cart_matrix(pos(alt=100.0))
    assert t100[0, 0] - t[0, 0] == pytest.approx(100.0, abs=1e-9)


def test_matrix_pair_inverse():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        p = pos(lat=float(rng.uniform(-1.4, 1.4)),
                lon=float(rng.uniform(-math.pi, math.pi)),
                alt=float(rng.uniform(-100.0, 1000.0)))
        prod = cart_to_curv_matrix(p) @ curv_to_cart_matrix(p)
        assert np.max(np.abs(prod - np.eye(3))) < 1e-12


def test_matrix_polar_singularity():
    with pytest.raises(SingularityError):
        cart_to_curv_matrix(pos(lat=math.pi / 2))


def test_earth_rate_values():
    np.testing.assert_allclose(earth_rate_n(0.0), [OMEGA, 0.0, 0.0],
                               atol=1e-20)
    np.testing.assert_allclose(earth_rate_n(math.pi / 2), [0.0, 0.0, -OMEGA],
                               atol=1e-20)


def test_earth_rate_norm():
    for lat in np.linspace(-1.5, 1.5, 50):
        assert np.linalg.norm(earth_rate_n(float(lat))) == pytest.approx(
            OMEGA, rel=1e-12)


def test_transport_rate_values():
    assert np.all(transport_rate_n(np.zeros(3), pos()) == 0.0)
    w = transport_rate_n(np.array([0.0, 1.0, 0.0]), pos())
    np.testing.assert_allclose(w, [1.0 / A, 0.0, 0.0], atol=1e-18)
    w = transport_rate_n(np.array([1.0, 0.0, 0.0]), pos())
    np.testing.assert_allclose(w, [0.0, -1.0 / 6335439.327, 0.0], atol=1e-12)


def test_transport_rate_linear():
    rng = np.random.default_rng(11)
    p = pos(lat=0.7, alt=5.0)
    for _ in range(100):
        v = rng.normal(size=3)
        a = float(rng.uniform(0.1, 5.0))
        np.testing.assert_allclose(transport_rate_n(a * v, p),
                                   a * transport_rate_n(v, p), rtol=1e-12)


def test_gravity_values():
    g0 = gravity_n(pos())
    assert g0[0] == 0.0 and g0[1] == 0.0
    assert g0[2] == pytest.approx(9.7803, abs=1e-3)
    gp = gravity_n(pos(lat=math.pi / 2))
    assert gp[2] == pytest.approx(9.8322, abs=1e-3)
    # free-air correction reduces gravity with altitude
    assert gravity_n(pos(alt=1000.0))[2] < g0[2]


def test_gravity_band():
    for lat in np.linspace(-1.5, 1.5, 20):
        for alt in (-100.0, 0.0, 500.0, 1000.0):
            g = gravity_n(pos(lat=float(lat), alt=alt))
            assert 9.76 <= g[2] <= 9.84


def test_position_validation():
    with pytest.raises(ValueError):
        CurvilinearPosition(2.0, 0.0, 0.0)
    # longitude is normalized into (-pi, pi]
    p = CurvilinearPosition(0.0, math.pi + 0.5, 0.0)
    assert -math.pi < p.longitude <= math.pi


def test_position_array_roundtrip():
    p = pos(lat=0.3, lon=-1.2, alt=4.5)
    q = CurvilinearPosition.from_array(p.as_array())
    assert q == p


def test_custom_ellipsoid():
    # a sphere: both radii equal the semi-major axis at every latitude
    sphere = EllipsoidParams(eccentricity_sq=0.0)
    rn, re = principal_radii(0.9, sphere)
    assert rn == re == sphere.semi_major_axis
    assert WGS84.semi_major_axis == A
