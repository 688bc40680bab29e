"""End-to-end acceptance checks for the navigation stack.

Each test prints a one-line summary with the measured margin; pytest -v
gives the per-check pass/fail verdict. The mission-level runs share one
filter setup (MISSION_FC) whose bias priors match the simulated IMU grade;
the small gyro-bias random walk lets the earth-rate channel re-steer a
bias estimate that absorbed heading error during alignment.
"""
import math
import time

import numpy as np
import scipy.stats

from auvnav.geodesy import CurvilinearPosition, earth_rate_n, gravity_n
from auvnav.replay import (
    compare,
    events_from_mission,
    heading_convergence_time,
    replay,
    trace_from_trajectory,
)
from auvnav.sensors import DvlMeasurement, NoiseConfig
from auvnav.simulator import (
    FigureEightSpec,
    MissionConfig,
    OutlierSpec,
    simulate_mission,
)
from auvnav.so3 import exp_so3
from auvnav.strapdown import ImuSample, NavState, propagate_many
from auvnav.ukfm import (
    ACCEL_BIAS,
    ATT,
    FilterConfig,
    GYRO_BIAS,
    POS,
    STATE_DIM,
    VEL,
    inverse_retract,
    predict,
    retract,
    sigma_points,
    update,
)

from test_strapdown import displacement_m, oracle, rest_state, run_scheme
from test_ukfm import FLAT, ZERO_ARMS, kf_oracle_step

MISSION_FC = FilterConfig(p0_gyro_bias_std=1.5e-4, p0_accel_bias_std=0.05,
                          q_gyro_bias=5e-12)

ALIGN_END = 2.0 + 40.0 + 1800.0  # rest + blend + figure-eight


def full_mission(seed, outliers=None):
    return MissionConfig(seed=seed,
                         figure_eight=FigureEightSpec(duration=1800.0),
                         outliers=outliers or OutlierSpec())


def test_heading_convergence_sweep():
    # 30 min figure-eight plus survey; replays from 12 initial headings must
    # all align to within 2 deg before the survey starts and hold it after.
    t0 = time.perf_counter()
    sim = simulate_mission(full_mission(seed=1))
    events = events_from_mission(sim)
    truth = trace_from_trajectory(sim.trajectory, stride=10)
    conv_times = []
    post_max = 0.0
    for psi0 in range(0, 360, 30):
        res = replay(events, MISSION_FC, initial_heading_deg=float(psi0))
        err = compare(res.trace, truth)
        conv = heading_convergence_time(err.times, err.heading_err_deg)
        assert conv is not None, "heading %d never aligned" % psi0
        assert conv <= ALIGN_END, "heading %d aligned at %.0f s" % (psi0, conv)
        conv_times.append(conv)
        i = int(np.searchsorted(err.times, ALIGN_END))
        post_max = max(post_max, float(err.heading_err_deg[i:].max()))
    wall = time.perf_counter() - t0
    assert post_max < 2.0
    assert wall < 300.0
    print("heading sweep PASS: 12/12 aligned %.0f-%.0f s (deadline %.0f), "
          "post max %.2f deg, wall %.0f s"
          % (min(conv_times), max(conv_times), ALIGN_END, post_max, wall))


def test_gps_denied_drift_bound():
    # position error at resurfacing stays under 0.3% of distance traveled
    drifts = []
    for seed in range(5):
        sim = simulate_mission(full_mission(seed))
        events = events_from_mission(sim)
        truth = trace_from_trajectory(sim.trajectory, stride=10)
        res = replay(events, MISSION_FC, initial_heading_deg=45.0)
        err = compare(res.trace, truth)
        traj = sim.trajectory
        depth = -traj.positions[:, 2]
        deep = np.flatnonzero(depth > 1.0)
        i_res = int(deep[-1] + np.argmax(depth[deep[-1]:] < 0.5))
        t_res = traj.times[i_res]
        speed = np.linalg.norm(traj.velocities[:i_res], axis=1)
        dist = float(np.sum(speed) * (traj.times[1] - traj.times[0]))
        k = int(np.searchsorted(err.times, t_res))
        drifts.append(100.0 * float(err.position_err_m[k - 1]) / dist)
    assert max(drifts) < 0.3
    print("drift PASS: resurfacing drift %.4f-%.4f%% of distance "
          "(bound 0.3%%) over 5 seeds" % (min(drifts), max(drifts)))


def test_dvl_outlier_gate():
    # 20 spikes well past 8 sigma: nearly all rejected, almost no
    # legitimate fixes rejected, and the velocity trace barely moves.
    base = dict(seed=0, figure_eight=FigureEightSpec(duration=735.0),
                lawnmower=None)
    spiked = MissionConfig(outliers=OutlierSpec(rate=1.0 / 30.0,
                                                magnitude=50.0,
                                                start_time=180.0), **base)
    clean = MissionConfig(**base)
    sim_o = simulate_mission(spiked)
    sim_c = simulate_mission(clean)
    ev_o = events_from_mission(sim_o)
    out_ts = [m.timestamp for m in ev_o.measurements
              if isinstance(m, DvlMeasurement) and m.outlier]
    assert len(out_ts) == 20
    res_o = replay(ev_o, MISSION_FC, initial_heading_deg=45.0)
    res_c = replay(events_from_mission(sim_c), MISSION_FC,
                   initial_heading_deg=45.0)
    verdicts = {(ts, kind): v for ts, kind, v in res_o.verdicts}
    outlier_set = set(out_ts)
    rejected = sum(1 for ts in out_ts if verdicts[(ts, "dvl")] == "rejected")
    legit = [v for (ts, kind), v in verdicts.items()
             if kind == "dvl" and ts not in outlier_set]
    legit_rejected = sum(1 for v in legit if v == "rejected")
    assert rejected >= math.ceil(0.95 * len(out_ts))
    assert legit_rejected <= math.floor(0.01 * len(legit))
    sigma_v = math.sqrt(NoiseConfig().sigma2_dvl)
    dv = np.linalg.norm(res_o.trace.velocities - res_c.trace.velocities,
                        axis=1)
    dev = float(np.interp(out_ts, res_o.trace.times, dv).max())
    assert dev < 3.0 * sigma_v
    print("outlier gate PASS: %d/20 spikes rejected, %d/%d legitimate "
          "rejected, velocity deviation %.4f m/s (bound %.2f)"
          % (rejected, legit_rejected, len(legit), dev, 3.0 * sigma_v))


def test_stationary_equilibrium_hold():
    # exact rest inputs: velocity and position must not creep over 60 s
    st = rest_state(lat=0.6)
    omega = np.tile(earth_rate_n(0.6), (100, 1))
    force = np.tile(-gravity_n(st.position), (100, 1))
    dts = np.full(100, 0.01)
    out = st
    v_max = 0.0
    for _ in range(60):
        out = propagate_many(out, omega, force, dts)
        v_max = max(v_max, float(np.linalg.norm(out.velocity)))
    disp = float(np.linalg.norm(displacement_m(st.position, out.position)))
    assert v_max < 1e-6
    assert disp < 1e-4
    print("stationary PASS: velocity %.2e m/s (bound 1e-6), "
          "displacement %.2e m (bound 1e-4)" % (v_max, disp))


def test_retraction_roundtrip_bound():
    # 1000 random (state, error) pairs with attitude error under 0.5 rad
    # and position error under 1 km must invert to 1e-9.
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        st = NavState(exp_so3(rng.normal(size=3) * 0.2),
                      rng.normal(size=3) * 2.0,
                      CurvilinearPosition(rng.uniform(-1.4, 1.4),
                                          rng.uniform(-0.5, 0.5),
                                          rng.uniform(-100.0, 10.0)),
                      rng.normal(size=3) * 1e-3,
                      rng.normal(size=3) * 0.05)
        xi = np.empty(STATE_DIM)
        a = rng.normal(size=3)
        xi[ATT] = a * (rng.uniform(0.0, 0.5) / np.linalg.norm(a))
        xi[VEL] = rng.normal(size=3)
        p = rng.normal(size=3)
        xi[POS] = p * (rng.uniform(0.0, 1000.0) / np.linalg.norm(p))
        xi[GYRO_BIAS] = rng.normal(size=3) * 1e-4
        xi[ACCEL_BIAS] = rng.normal(size=3) * 1e-2
        back = inverse_retract(st, retract(st, xi))
        worst = max(worst, float(np.max(np.abs(back - xi))))
    assert worst < 1e-9
    print("retraction PASS: worst roundtrip error %.2e (bound 1e-9) "
          "over 1000 draws" % worst)


def test_linear_kalman_equivalence_long():
    # flat-earth problem: the filter must track a closed-form Kalman
    # recursion to 1e-8 per step for 1000 steps, state and covariance
    rng = np.random.default_rng(43)
    qa, qba, sig_dvl = 1e-5, 1e-9, 0.01
    cfg = FilterConfig(
        noise=NoiseConfig(sigma2_dvl=sig_dvl ** 2),
        lever_arms=ZERO_ARMS,
        q_gyro=0.0, q_accel=qa, q_gyro_bias=0.0, q_accel_bias=qba)

    st = NavState(np.eye(3), np.array([1.0, -0.5, 0.2]),
                  CurvilinearPosition(0.0, 0.0, 0.0),
                  np.zeros(3), np.array([0.02, -0.01, 0.005]))
    p_full = np.diag([1e-30] * 3 + [0.01] * 3 + [4.0] * 3
                     + [1e-30] * 3 + [1e-4] * 3)

    idx = np.r_[3:9, 12:15]
    x_kf = np.concatenate([st.velocity, np.zeros(3), st.accel_bias])
    p_kf = np.diag([0.01] * 3 + [4.0] * 3 + [1e-4] * 3)
    q_kf = np.diag([qa] * 3 + [0.0] * 3 + [qba] * 3)
    r_kf = sig_dvl ** 2 * np.eye(3)
    h = np.zeros((3, 9))
    h[:, 0:3] = np.eye(3)

    state, p = st, p_full
    dt = 0.01
    origin = st
    worst = 0.0
    for k in range(1000):
        t = (k + 1) * dt
        accel = np.array([0.3 * math.sin(0.02 * k), -0.1, 0.05])
        sample = ImuSample(t, np.zeros(3), accel)
        state, p = predict(state, p, sample, dt, cfg, ellipsoid=FLAT)
        x_kf, p_kf = kf_oracle_step(x_kf, p_kf, dt, accel, q_kf)
        if (k + 1) % 10 == 0:
            z = x_kf[0:3] + rng.normal(size=3) * sig_dvl
            meas = DvlMeasurement(t, z)
            state, p, verdict = update(state, p, meas, cfg, sample,
                                       bypass_gate=True, ellipsoid=FLAT)
            assert verdict == "accepted"
            s = h @ p_kf @ h.T + r_kf
            kgain = p_kf @ h.T @ np.linalg.inv(s)
            x_kf = x_kf + kgain @ (z - h @ x_kf)
            p_kf = p_kf - kgain @ s @ kgain.T
            p_kf = 0.5 * (p_kf + p_kf.T)
        xi = inverse_retract(origin, state, ellipsoid=FLAT)
        x_ukf = np.concatenate([xi[VEL] + origin.velocity,
                                xi[POS],
                                xi[ACCEL_BIAS] + origin.accel_bias])
        step_err = max(float(np.max(np.abs(x_ukf - x_kf))),
                       float(np.max(np.abs(p[np.ix_(idx, idx)] - p_kf))))
        assert step_err < 1e-8, "step %d: %.2e" % (k, step_err)
        worst = max(worst, step_err)
    print("linear equivalence PASS: worst per-step deviation %.2e "
          "(bound 1e-8) over 1000 steps" % worst)


def test_sigma_point_moment_recovery():
    # weighted moments of the generated points must give back (x, P) on the
    # Euclidean block to 1e-9. Equatorial reference: the curvilinear
    # coordinates of the points then carry no representation error from a
    # large reference angle.
    rng = np.random.default_rng(17)
    st = NavState(exp_so3(np.array([0.04, -0.08, 0.9])),
                  np.array([1.2, 0.4, -0.05]),
                  CurvilinearPosition(0.0, 0.0, -30.0),
                  np.array([1e-4, -5e-5, 2e-5]),
                  np.array([0.02, -0.01, 0.03]))
    a = rng.normal(size=(STATE_DIM, STATE_DIM)) * 0.05
    p = a @ a.T + np.diag([1e-4] * 3 + [0.01] * 3 + [1.0] * 3
                          + [1e-8] * 3 + [1e-4] * 3)
    pts, w = sigma_points(st, p, FilterConfig())
    xis = np.array([inverse_retract(st, pt) for pt in pts])
    mean = w.wm * xis[0] + w.wj * xis[1:].sum(axis=0)
    spread = xis - mean
    cov = w.w0 * np.outer(spread[0], spread[0]) \
        + w.wj * sum(np.outer(s, s) for s in spread[1:])
    eu = slice(3, STATE_DIM)
    mean_err = float(np.max(np.abs(mean[eu])))
    cov_err = float(np.max(np.abs((cov - p)[eu, eu])))
    assert mean_err < 1e-9
    assert cov_err < 1e-9
    print("sigma points PASS: Euclidean-block mean error %.2e, "
          "covariance error %.2e (bound 1e-9)" % (mean_err, cov_err))


def test_strapdown_order_ratio():
    # halving dt against a tight ODE reference must shrink the error by
    # at least 3.5x on a smooth 60 s trajectory
    st = rest_state(lat=0.3)

    def omega_fn(t):
        return np.array([0.02 * math.sin(0.5 * t),
                         0.015 * math.cos(0.6 * t),
                         0.9 * math.sin(0.7 * t)])

    def force_fn(t):
        return np.array([1.2 * math.sin(0.9 * t),
                         1.0 * math.cos(1.1 * t),
                         -9.80])

    c_ref, v_ref, p_ref = oracle(st, omega_fn, force_fn, 60.0)
    errs = []
    for dt in (0.2, 0.1, 0.05):
        out = run_scheme(st, omega_fn, force_fn, 60.0, dt)
        errs.append(np.linalg.norm(out.attitude - c_ref, ord="fro")
                    + np.linalg.norm(out.velocity - v_ref)
                    + np.linalg.norm(displacement_m(p_ref, out.position)))
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    assert r1 >= 3.5
    assert r2 >= 3.5
    print("order check PASS: dt-halving ratios %.2f, %.2f (bound 3.5)"
          % (r1, r2))


def test_nees_consistency_50_runs():
    # 50 seeded 10-minute missions with initial errors drawn from the
    # filter's stated prior: the terminal 15-dim NEES mean must land in
    # the 95% chi-square interval.
    fc = FilterConfig(p0_att_std=(1e-3, 1e-3, math.radians(5.0)),
                      p0_vel_std=1e-3,
                      p0_pos_vert_std=2.5,
                      p0_gyro_bias_std=1.5e-4, p0_accel_bias_std=0.05,
                      q_gyro_bias=0.0, q_accel_bias=0.0)
    vals = []
    for run in range(50):
        rng = np.random.default_rng(1234 + run)
        bg = tuple(1.5e-4 * rng.standard_normal(3))
        ba = tuple(0.05 * rng.standard_normal(3))
        dpsi = math.degrees(math.radians(5.0) * rng.standard_normal())
        cfg = MissionConfig(seed=9000 + run, gyro_bias=bg, accel_bias=ba,
                            figure_eight=FigureEightSpec(duration=600.0),
                            lawnmower=None)
        sim = simulate_mission(cfg)
        res = replay(events_from_mission(sim), fc,
                     initial_heading_deg=45.0 + dpsi)
        truth = trace_from_trajectory(sim.trajectory, stride=10)
        i = int(np.argmin(np.abs(truth.times - res.final_time)))
        x_true = NavState(truth.attitudes[i], truth.velocities[i],
                          CurvilinearPosition.from_array(truth.positions[i]),
                          np.array(bg), np.array(ba))
        est = res.trace
        x_est = NavState(est.attitudes[-1], est.velocities[-1],
                         CurvilinearPosition.from_array(est.positions[-1]),
                         est.gyro_biases[-1], est.accel_biases[-1])
        e = inverse_retract(x_est, x_true)
        vals.append(float(e @ np.linalg.solve(res.final_covariance, e)))
    mean = float(np.mean(vals))
    lo = scipy.stats.chi2.ppf(0.025, STATE_DIM * 50) / 50
    hi = scipy.stats.chi2.ppf(0.975, STATE_DIM * 50) / 50
    assert lo <= mean <= hi, "NEES mean %.2f outside [%.2f, %.2f]" \
        % (mean, lo, hi)
    print("consistency PASS: NEES mean %.2f in [%.2f, %.2f] over 50 runs"
          % (mean, lo, hi))
