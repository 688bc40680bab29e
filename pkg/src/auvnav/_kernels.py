"""Compiled kernels behind the strapdown, filter and simulator hot paths.

Everything here works on plain float64 arrays so numba can compile it; the
public modules wrap these with the typed interfaces. Earth parameters travel
as a packed array (see :func:`earth_array`) and the math mirrors
``geodesy``/``so3`` exactly; tests pin the two against each other.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .geodesy import EllipsoidParams

#: Error-state dimension: attitude, velocity, position, gyro bias, accel bias.
STATE_DIM = 15


def earth_array(ellipsoid: EllipsoidParams) -> np.ndarray:
    """Pack ellipsoid parameters for the kernels."""
    return np.array([ellipsoid.semi_major_axis,
                     ellipsoid.eccentricity_sq,
                     ellipsoid.rotation_rate,
                     ellipsoid.gravity_equator,
                     ellipsoid.somigliana_k])


@njit(cache=True)
def _mm3(a, b, out):
    for i in range(3):
        for j in range(3):
            out[i, j] = a[i, 0] * b[0, j] + a[i, 1] * b[1, j] + a[i, 2] * b[2, j]


@njit(cache=True)
def _exp_so3(phi, out):
    x = phi[0]
    y = phi[1]
    z = phi[2]
    t2 = x * x + y * y + z * z
    t = math.sqrt(t2)
    if t < 1e-8:
        a = 1.0 - t2 / 6.0
        b = 0.5 - t2 / 24.0
    else:
        a = math.sin(t) / t
        b = (1.0 - math.cos(t)) / t2
    out[0, 0] = 1.0 + b * (x * x - t2)
    out[0, 1] = b * x * y - a * z
    out[0, 2] = b * x * z + a * y
    out[1, 0] = b * x * y + a * z
    out[1, 1] = 1.0 + b * (y * y - t2)
    out[1, 2] = b * y * z - a * x
    out[2, 0] = b * x * z - a * y
    out[2, 1] = b * y * z + a * x
    out[2, 2] = 1.0 + b * (z * z - t2)


@njit(cache=True)
def _log_so3(r, out):
    c = (r[0, 0] + r[1, 1] + r[2, 2] - 1.0) / 2.0
    if c > 1.0:
        c = 1.0
    if c < -1.0:
        c = -1.0
    angle = math.acos(c)
    if angle < 1e-8:
        s = (1.0 + angle * angle / 6.0) / 2.0
        out[0] = s * (r[2, 1] - r[1, 2])
        out[1] = s * (r[0, 2] - r[2, 0])
        out[2] = s * (r[1, 0] - r[0, 1])
        return
    if angle < math.pi - 1e-6:
        s = angle / (2.0 * math.sin(angle))
        out[0] = s * (r[2, 1] - r[1, 2])
        out[1] = s * (r[0, 2] - r[2, 0])
        out[2] = s * (r[1, 0] - r[0, 1])
        return
    b0 = (r[0, 0] + 1.0) / 2.0
    b1 = (r[1, 1] + 1.0) / 2.0
    b2 = (r[2, 2] + 1.0) / 2.0
    i = 0
    bm = b0
    if b1 > bm:
        i = 1
        bm = b1
    if b2 > bm:
        i = 2
        bm = b2
    if bm < 1e-300:
        bm = 1e-300
    d = math.sqrt(bm)
    u0 = (r[0, i] + (1.0 if i == 0 else 0.0)) / (2.0 * d)
    u1 = (r[1, i] + (1.0 if i == 1 else 0.0)) / (2.0 * d)
    u2 = (r[2, i] + (1.0 if i == 2 else 0.0)) / (2.0 * d)
    un = math.sqrt(u0 * u0 + u1 * u1 + u2 * u2)
    u0 /= un
    u1 /= un
    u2 /= un
    flip = 1.0
    if abs(u0) > 1e-12:
        if u0 < 0.0:
            flip = -1.0
    elif abs(u1) > 1e-12:
        if u1 < 0.0:
            flip = -1.0
    elif u2 < 0.0:
        flip = -1.0
    out[0] = angle * flip * u0
    out[1] = angle * flip * u1
    out[2] = angle * flip * u2


@njit(cache=True)
def _radii(lat, earth):
    sl = math.sin(lat)
    x = 1.0 - earth[1] * sl * sl
    sx = math.sqrt(x)
    re_ = earth[0] / sx
    rn_ = earth[0] * (1.0 - earth[1]) / (x * sx)
    return rn_, re_


@njit(cache=True)
def _propagate_one(C, v, p, bg, ba, w, f, dt, earth):
    """One strapdown step, updating C, v, p in place (biases are constant)."""
    a_e = earth[0]
    wie = earth[2]
    lat = p[0]
    h = p[2]
    sl = math.sin(lat)
    cl = math.cos(lat)
    rn_, re_ = _radii(lat, earth)
    # Earth plus transport rate in NED.
    win = np.empty(3)
    win[0] = wie * cl + v[1] / (re_ + h)
    win[1] = -v[0] / (rn_ + h)
    win[2] = -wie * sl - v[1] * sl / (cl * (re_ + h))
    phi = np.empty(3)
    r1 = np.empty((3, 3))
    r2 = np.empty((3, 3))
    tmp = np.empty((3, 3))
    cn = np.empty((3, 3))
    for i in range(3):
        phi[i] = -win[i] * dt
    _exp_so3(phi, r1)
    phi[0] = (w[0] - bg[0]) * dt
    phi[1] = (w[1] - bg[1]) * dt
    phi[2] = (w[2] - bg[2]) * dt
    _exp_so3(phi, r2)
    _mm3(C, r2, tmp)
    _mm3(r1, tmp, cn)
    # Specific force through the attitude midpoint.
    fb0 = f[0] - ba[0]
    fb1 = f[1] - ba[1]
    fb2 = f[2] - ba[2]
    fn = np.empty(3)
    for i in range(3):
        fn[i] = 0.5 * ((C[i, 0] + cn[i, 0]) * fb0
                       + (C[i, 1] + cn[i, 1]) * fb1
                       + (C[i, 2] + cn[i, 2]) * fb2)
    g = earth[3] * (1.0 + earth[4] * sl * sl) / math.sqrt(1.0 - earth[1] * sl * sl) \
        * (1.0 - 2.0 * h / a_e)
    # Coriolis rate: transport + 2x earth.
    cw0 = win[0] + wie * cl
    cw1 = win[1]
    cw2 = win[2] - wie * sl
    cx = cw1 * v[2] - cw2 * v[1]
    cy = cw2 * v[0] - cw0 * v[2]
    cz = cw0 * v[1] - cw1 * v[0]
    vn0 = v[0] + dt * (fn[0] - cx)
    vn1 = v[1] + dt * (fn[1] - cy)
    vn2 = v[2] + dt * (fn[2] + g - cz)
    # Trapezoidal position with the curvilinear scaling at the pre-update point.
    p[0] = p[0] + 0.5 * dt * (v[0] + vn0) / (rn_ + h)
    p[1] = p[1] + 0.5 * dt * (v[1] + vn1) / ((re_ + h) * cl)
    p[2] = p[2] - 0.5 * dt * (v[2] + vn2)
    v[0] = vn0
    v[1] = vn1
    v[2] = vn2
    # Orthonormality guard: polar fix once drift exceeds 1e-9 (Frobenius).
    resid = 0.0
    for i in range(3):
        for j in range(3):
            s = cn[0, i] * cn[0, j] + cn[1, i] * cn[1, j] + cn[2, i] * cn[2, j]
            if i == j:
                s -= 1.0
            resid += s * s
    if resid > 1e-18:
        u_, s_, vt_ = np.linalg.svd(cn)
        _mm3(u_, vt_, tmp)
        det = (tmp[0, 0] * (tmp[1, 1] * tmp[2, 2] - tmp[1, 2] * tmp[2, 1])
               - tmp[0, 1] * (tmp[1, 0] * tmp[2, 2] - tmp[1, 2] * tmp[2, 0])
               + tmp[0, 2] * (tmp[1, 0] * tmp[2, 1] - tmp[1, 1] * tmp[2, 0]))
        if det < 0.0:
            for i in range(3):
                u_[i, 2] = -u_[i, 2]
        _mm3(u_, vt_, cn)
    for i in range(3):
        for j in range(3):
            C[i, j] = cn[i, j]


@njit(cache=True)
def propagate_chain(C, v, p, bg, ba, ws, fs, dts, earth):
    """Run consecutive strapdown steps in place."""
    for k in range(dts.shape[0]):
        _propagate_one(C, v, p, bg, ba, ws[k], fs[k], dts[k], earth)


@njit(cache=True)
def retract_inplace(C, v, p, bg, ba, xi, earth):
    """Apply a 15-dim tangent update in place; scaling evaluated at the input."""
    rn_, re_ = _radii(p[0], earth)
    cl = math.cos(p[0])
    h = p[2]
    r = np.empty((3, 3))
    cn = np.empty((3, 3))
    _exp_so3(xi[0:3], r)
    _mm3(r, C, cn)
    for i in range(3):
        for j in range(3):
            C[i, j] = cn[i, j]
    for i in range(3):
        v[i] += xi[3 + i]
        bg[i] += xi[9 + i]
        ba[i] += xi[12 + i]
    p[0] += xi[6] / (rn_ + h)
    p[1] += xi[7] / ((re_ + h) * cl)
    p[2] -= xi[8]


@njit(cache=True)
def inverse_retract_arrays(C, v, p, bg, ba, Ch, vh, ph, bgh, bah, earth):
    """Tangent coordinates of state "h" relative to the reference state."""
    xi = np.empty(STATE_DIM)
    d = np.empty((3, 3))
    phi = np.empty(3)
    for i in range(3):
        for j in range(3):
            d[i, j] = Ch[i, 0] * C[j, 0] + Ch[i, 1] * C[j, 1] + Ch[i, 2] * C[j, 2]
    _log_so3(d, phi)
    rn_, re_ = _radii(p[0], earth)
    cl = math.cos(p[0])
    h = p[2]
    for i in range(3):
        xi[i] = phi[i]
        xi[3 + i] = vh[i] - v[i]
        xi[9 + i] = bgh[i] - bg[i]
        xi[12 + i] = bah[i] - ba[i]
    xi[6] = (ph[0] - p[0]) * (rn_ + h)
    xi[7] = (ph[1] - p[1]) * ((re_ + h) * cl)
    xi[8] = -(ph[2] - p[2])
    return xi


@njit(cache=True)
def _build_sigma(C, v, p, bg, ba, S, sqrt_lam, earth, Cs, vs, ps, bgs, bas):
    """Fill the 2n sigma states retract(x, +/- sqrt_lam * S[:, j]).

    The position scaling is evaluated at the reference state p.
    """
    n = STATE_DIM
    rn_, re_ = _radii(p[0], earth)
    cl = math.cos(p[0])
    h = p[2]
    phi = np.empty(3)
    r = np.empty((3, 3))
    for j in range(n):
        for s in range(2):
            row = j + s * n
            sgn = 1.0 - 2.0 * s
            phi[0] = sgn * sqrt_lam * S[0, j]
            phi[1] = sgn * sqrt_lam * S[1, j]
            phi[2] = sgn * sqrt_lam * S[2, j]
            _exp_so3(phi, r)
            _mm3(r, C, Cs[row])
            for i in range(3):
                vs[row, i] = v[i] + sgn * sqrt_lam * S[3 + i, j]
                bgs[row, i] = bg[i] + sgn * sqrt_lam * S[9 + i, j]
                bas[row, i] = ba[i] + sgn * sqrt_lam * S[12 + i, j]
            ps[row, 0] = p[0] + sgn * sqrt_lam * S[6, j] / (rn_ + h)
            ps[row, 1] = p[1] + sgn * sqrt_lam * S[7, j] / ((re_ + h) * cl)
            ps[row, 2] = p[2] - sgn * sqrt_lam * S[8, j]


@njit(cache=True)
def predict_chunk(C, v, p, bg, ba, P, ws, fs, dts, Qd, sqrt_lam, wj, w0, earth):
    """Sigma-point prediction over consecutive IMU samples, in place.

    The new mean is the propagated central point; the covariance is rebuilt
    from the inverse-retract spreads with the reference weights (mean
    deviation term included) plus Q * dt per sample.
    """
    n = STATE_DIM
    m2 = 2 * n
    Cs = np.empty((m2, 3, 3))
    vs = np.empty((m2, 3))
    ps = np.empty((m2, 3))
    bgs = np.empty((m2, 3))
    bas = np.empty((m2, 3))
    X = np.empty((m2, n))
    xb = np.empty(n)
    for k in range(dts.shape[0]):
        S = np.linalg.cholesky(P)
        _build_sigma(C, v, p, bg, ba, S, sqrt_lam, earth, Cs, vs, ps, bgs, bas)
        _propagate_one(C, v, p, bg, ba, ws[k], fs[k], dts[k], earth)
        for row in range(m2):
            _propagate_one(Cs[row], vs[row], ps[row], bgs[row], bas[row],
                           ws[k], fs[k], dts[k], earth)
        rn2, re2 = _radii(p[0], earth)
        cl2 = math.cos(p[0])
        h2 = p[2]
        d = np.empty((3, 3))
        phi = np.empty(3)
        for row in range(m2):
            for i in range(3):
                for j in range(3):
                    d[i, j] = (Cs[row, i, 0] * C[j, 0]
                               + Cs[row, i, 1] * C[j, 1]
                               + Cs[row, i, 2] * C[j, 2])
            _log_so3(d, phi)
            X[row, 0] = phi[0]
            X[row, 1] = phi[1]
            X[row, 2] = phi[2]
            for i in range(3):
                X[row, 3 + i] = vs[row, i] - v[i]
                X[row, 9 + i] = bgs[row, i] - bg[i]
                X[row, 12 + i] = bas[row, i] - ba[i]
            X[row, 6] = (ps[row, 0] - p[0]) * (rn2 + h2)
            X[row, 7] = (ps[row, 1] - p[1]) * ((re2 + h2) * cl2)
            X[row, 8] = -(ps[row, 2] - p[2])
        for c in range(n):
            xb[c] = 0.0
        for row in range(m2):
            for c in range(n):
                xb[c] += X[row, c]
        for c in range(n):
            xb[c] *= wj
        for row in range(m2):
            for c in range(n):
                X[row, c] -= xb[c]
        pt = X.T @ X
        dt_k = dts[k]
        for i in range(n):
            for j in range(n):
                P[i, j] = wj * pt[i, j] + w0 * xb[i] * xb[j] + Qd[i, j] * dt_k
        for i in range(n):
            for j in range(i + 1, n):
                m_ = 0.5 * (P[i, j] + P[j, i])
                P[i, j] = m_
                P[j, i] = m_


@njit(cache=True)
def _h_eval(C, v, p, bg, ba, mtype, lever, w_imu, aux, earth, out):
    """Measurement models: 0 = dvl, 1 = depth, 2 = gps, 3 = range."""
    if mtype == 0:
        lat = p[0]
        sl = math.sin(lat)
        cl = math.cos(lat)
        wie = earth[2]
        wn0 = wie * cl
        wn2 = -wie * sl
        web = np.empty(3)
        for i in range(3):
            web[i] = w_imu[i] - bg[i] - (C[0, i] * wn0 + C[2, i] * wn2)
        vb0 = C[0, 0] * v[0] + C[1, 0] * v[1] + C[2, 0] * v[2]
        vb1 = C[0, 1] * v[0] + C[1, 1] * v[1] + C[2, 1] * v[2]
        vb2 = C[0, 2] * v[0] + C[1, 2] * v[1] + C[2, 2] * v[2]
        out[0] = vb0 + web[1] * lever[2] - web[2] * lever[1]
        out[1] = vb1 + web[2] * lever[0] - web[0] * lever[2]
        out[2] = vb2 + web[0] * lever[1] - web[1] * lever[0]
    elif mtype == 1:
        ld = C[2, 0] * lever[0] + C[2, 1] * lever[1] + C[2, 2] * lever[2]
        out[0] = aux[0] - (p[2] - ld)
    elif mtype == 2:
        rn_, re_ = _radii(p[0], earth)
        cl = math.cos(p[0])
        h = p[2]
        ln = C[0, 0] * lever[0] + C[0, 1] * lever[1] + C[0, 2] * lever[2]
        le = C[1, 0] * lever[0] + C[1, 1] * lever[1] + C[1, 2] * lever[2]
        ld = C[2, 0] * lever[0] + C[2, 1] * lever[1] + C[2, 2] * lever[2]
        out[0] = p[0] + ln / (rn_ + h)
        out[1] = p[1] + le / ((re_ + h) * cl)
        out[2] = p[2] - ld
    else:
        rn_, re_ = _radii(p[0], earth)
        cl = math.cos(p[0])
        h = p[2]
        ln = C[0, 0] * lever[0] + C[0, 1] * lever[1] + C[0, 2] * lever[2]
        le = C[1, 0] * lever[0] + C[1, 1] * lever[1] + C[1, 2] * lever[2]
        ld = C[2, 0] * lever[0] + C[2, 1] * lever[1] + C[2, 2] * lever[2]
        ps0 = p[0] + ln / (rn_ + h)
        ps1 = p[1] + le / ((re_ + h) * cl)
        ps2 = p[2] - ld
        rns, res = _radii(ps0, earth)
        cls = math.cos(ps0)
        d0 = (aux[1] - ps0) * (rns + ps2)
        d1 = (aux[2] - ps1) * ((res + ps2) * cls)
        d2 = -(aux[3] - ps2)
        out[0] = math.sqrt(d0 * d0 + d1 * d1 + d2 * d2)


@njit(cache=True)
def measure_sigma(C, v, p, bg, ba, P, mtype, lever, w_imu, aux, R,
                  sqrt_lam, wm, wj, w0, earth):
    """Map sigma points through a measurement model.

    Returns the weighted predicted measurement, its covariance (R included)
    and the tangent-measurement cross covariance, padded to dimension 3.
    """
    n = STATE_DIM
    m2 = 2 * n
    S = np.linalg.cholesky(P)
    Cs = np.empty((m2, 3, 3))
    vs = np.empty((m2, 3))
    ps = np.empty((m2, 3))
    bgs = np.empty((m2, 3))
    bas = np.empty((m2, 3))
    _build_sigma(C, v, p, bg, ba, S, sqrt_lam, earth, Cs, vs, ps, bgs, bas)
    y0 = np.zeros(3)
    _h_eval(C, v, p, bg, ba, mtype, lever, w_imu, aux, earth, y0)
    Y = np.zeros((m2, 3))
    for row in range(m2):
        _h_eval(Cs[row], vs[row], ps[row], bgs[row], bas[row],
                mtype, lever, w_imu, aux, earth, Y[row])
    yb = np.zeros(3)
    for row in range(m2):
        for c in range(3):
            yb[c] += Y[row, c]
    for c in range(3):
        yb[c] = wj * yb[c] + wm * y0[c]
    pyy = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            pyy[i, j] = w0 * (y0[i] - yb[i]) * (y0[j] - yb[j]) + R[i, j]
    for row in range(m2):
        for i in range(3):
            for j in range(3):
                pyy[i, j] += wj * (Y[row, i] - yb[i]) * (Y[row, j] - yb[j])
    pxy = np.zeros((n, 3))
    for j in range(n):
        for s in range(2):
            row = j + s * n
            sgn = 1.0 - 2.0 * s
            for i in range(n):
                xi_i = sgn * sqrt_lam * S[i, j]
                for c in range(3):
                    pxy[i, c] += wj * xi_i * (Y[row, c] - yb[c])
    return yb, pyy, pxy


@njit(cache=True)
def integrate_position(p0, vq, dt_half, earth):
    """RK4-integrate latitude/longitude/altitude from an NED velocity profile.

    vq holds velocities on a quarter-step grid (4N+1 rows for 2N+1 output
    half-grid positions); each RK4 step spans dt_half.
    """
    nout = (vq.shape[0] - 1) // 2 + 1
    out = np.empty((nout, 3))
    p0_, p1_, p2_ = p0[0], p0[1], p0[2]
    out[0, 0] = p0_
    out[0, 1] = p1_
    out[0, 2] = p2_
    k = np.empty((4, 3))
    for step in range(nout - 1):
        base = 2 * step
        for stage in range(4):
            if stage == 0:
                lat = p0_
                h = p2_
                vrow = base
            elif stage == 1:
                lat = p0_ + 0.5 * dt_half * k[0, 0]
                h = p2_ + 0.5 * dt_half * k[0, 2]
                vrow = base + 1
            elif stage == 2:
                lat = p0_ + 0.5 * dt_half * k[1, 0]
                h = p2_ + 0.5 * dt_half * k[1, 2]
                vrow = base + 1
            else:
                lat = p0_ + dt_half * k[2, 0]
                h = p2_ + dt_half * k[2, 2]
                vrow = base + 2
            rn_, re_ = _radii(lat, earth)
            cl = math.cos(lat)
            k[stage, 0] = vq[vrow, 0] / (rn_ + h)
            k[stage, 1] = vq[vrow, 1] / ((re_ + h) * cl)
            k[stage, 2] = -vq[vrow, 2]
        p0_ += dt_half / 6.0 * (k[0, 0] + 2.0 * k[1, 0] + 2.0 * k[2, 0] + k[3, 0])
        p1_ += dt_half / 6.0 * (k[0, 1] + 2.0 * k[1, 1] + 2.0 * k[2, 1] + k[3, 1])
        p2_ += dt_half / 6.0 * (k[0, 2] + 2.0 * k[1, 2] + 2.0 * k[2, 2] + k[3, 2])
        out[step + 1, 0] = p0_
        out[step + 1, 1] = p1_
        out[step + 1, 2] = p2_
    return out
