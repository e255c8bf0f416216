import math

import numpy as np
import pytest
from scipy.signal import lfilter

from kitetrack.dynamics import (
    KiteParams,
    KiteState,
    LiftCurve,
    NoiseLevels,
    actuate,
    aero_forces,
    aero_frame,
    attack_angle,
    constrained_acceleration,
    default_lift_curve,
    mechanical_energy,
    read_sensors,
    step,
    turbulence_step,
)
from kitetrack.errors import FrameUndefinedError
from kitetrack.spline import SplineNetwork

WIND = np.array([6.0, 0.0, 0.0])


def flying_state():
    r = 100.0 * np.array([math.cos(0.5), 0.0, math.sin(0.5)])
    return KiteState(r, np.array([0.0, 20.0, 0.0]), 0.0, 100.0, 0.0)


def test_aero_frame_example():
    R = aero_frame(np.array([0, 0, 100.0]), np.zeros(3), np.array([-6.0, 0, 0]))
    np.testing.assert_allclose(R, np.eye(3), atol=1e-15)


def test_aero_frame_orthonormal_and_scale_free(rng):
    for _ in range(20):
        r = rng.standard_normal(3) * 50
        rd, vw = rng.standard_normal(3) * 10, rng.standard_normal(3) * 3
        R = aero_frame(r, rd, vw)
        np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-12)
        assert np.linalg.det(R) == pytest.approx(1.0)
        np.testing.assert_allclose(aero_frame(r, vw + 2 * (rd - vw), vw), R, atol=1e-12)


def test_aero_frame_degenerate_cases():
    with pytest.raises(FrameUndefinedError):
        aero_frame(np.array([0, 0, 100.0]), np.zeros(3), np.zeros(3))
    with pytest.raises(FrameUndefinedError):
        aero_frame(np.array([0, 0, 100.0]), np.zeros(3), np.array([0, 0, -5.0]))


def test_attack_angle_examples():
    ez = np.array([0, 0, 1.0])
    assert attack_angle(np.array([0, 0, 3.0]), ez, 0.0) == 0.0
    assert attack_angle(np.array([0, 0, 3.0]), ez, 0.01) == pytest.approx(0.01)
    assert attack_angle(np.array([3.0, 0, 0]), ez, 0.01) == pytest.approx(math.pi / 2 + 0.01)


def test_aero_force_examples():
    p = KiteParams()
    assert aero_forces(p, 0.3, 0.0, 20.0)[1] == 0.0
    f = aero_forces(p, 0.0, 0.0, 20.0)  # C_L(0) = 0
    assert f[2] == 0.0
    assert f[0] == pytest.approx(-0.5 * 1.225 * 400 * 11 * 0.075)
    np.testing.assert_allclose(aero_forces(p, 0.3, 0.05, 40.0), 4 * aero_forces(p, 0.3, 0.05, 20.0))


def test_induced_drag_factor():
    p = KiteParams()
    assert p.aspect_ratio == pytest.approx(36 / 11)
    assert p.k == pytest.approx(1 / (math.pi * 36 / 11 * 0.7))
    cl = p.lift_curve(0.3)
    assert -aero_forces(p, 0.3, 0.0, 10.0)[0] == pytest.approx(0.5 * 1.225 * 100 * 11 * (0.075 + p.k * cl**2))


def test_default_lift_curve_symmetry():
    lc = default_lift_curve()
    for a in (0.1, 0.4, 1.0):
        assert lc(-a) == pytest.approx(-lc(a))
        assert lc(math.pi - a) == pytest.approx(-lc(a))
    assert lc(0.0) == 0.0 and lc.derivative(0.0) > 0.0


def test_lift_curve_from_file(tmp_path):
    path = tmp_path / "cl.txt"
    path.write_text("# alpha C_L\n0.0 0.0\n0.5 1.0\n1.0 0.5\n")
    lc = LiftCurve.from_file(path)
    assert lc(0.5) == pytest.approx(1.0)
    assert lc(2.0) == pytest.approx(0.5)  # clamped


def test_params_reject_nonpositive():
    with pytest.raises(ValueError):
        KiteParams(m=0.0)
    assert KiteParams().S_t == pytest.approx(1.1)


def test_steering_force_is_lateral_and_signed():
    p = KiteParams()
    st = flying_state()
    left = constrained_acceleration(st, p, WIND, u=0.05)
    right = constrained_acceleration(st, p, WIND, u=-0.05)
    frame = aero_frame(st.r, st.r_dot, WIND)
    assert (left - right) @ frame[:, 1] > 0.0
    assert abs((left - right) @ frame[:, 0]) < 1e-9


def test_lift_pulls_away_from_the_ground_station():
    p = KiteParams()
    st = flying_state()
    frame = aero_frame(st.r, st.r_dot, WIND)
    va = np.linalg.norm(st.r_dot - WIND)
    alpha = attack_angle(st.r, frame[:, 2], p.theta_p)
    force = frame @ aero_forces(p, alpha, 0.0, va)
    assert force @ st.r > 0.0  # the kite pulls on the tether


def test_static_kite_at_zenith():
    p = KiteParams(aero_enabled=False)
    st = KiteState(np.array([0, 0, 100.0]), np.zeros(3), 0.0, 100.0)
    np.testing.assert_allclose(constrained_acceleration(st, p, np.zeros(3)), 0.0, atol=1e-15)


def test_constraint_residual_is_zero(rng):
    p = KiteParams()
    for _ in range(20):
        st = flying_state()
        st.r_dot = st.r_dot + rng.standard_normal(3)
        st.r_dot -= (st.r_dot @ st.r) / (st.r @ st.r) * st.r
        acc = constrained_acceleration(st, p, WIND)
        rn = np.linalg.norm(st.r)
        rhat = st.r / rn
        vperp2 = st.r_dot @ st.r_dot - (st.r_dot @ rhat) ** 2
        assert acc @ rhat + vperp2 / rn == pytest.approx(0.0, abs=1e-9)


def test_pendulum_conserves_energy():
    p = KiteParams(aero_enabled=False)
    st = KiteState(100.0 * np.array([math.cos(0.8), 0, math.sin(0.8)]), np.array([0, 5.0, 0]), 0.0, 100.0)
    e0 = mechanical_energy(st, p)
    for _ in range(100):
        st = step(st, 0.0, p, 0.01, np.zeros(3))
    assert abs(mechanical_energy(st, p) - e0) / abs(e0) < 1e-4


def test_great_circle_coasting():
    p = KiteParams(aero_enabled=False, g=0.0)
    st = KiteState(np.array([100.0, 0, 0]), np.array([0, 10.0, 10.0]), 0.0, 100.0)
    normal = np.cross(st.r, st.r_dot)
    for _ in range(500):
        st = step(st, 0.0, p, 0.01, np.zeros(3))
        assert abs(np.linalg.norm(st.r) - 100.0) < 1e-9
    assert abs(st.r @ normal) / (np.linalg.norm(normal) * 100) < 1e-9
    assert np.linalg.norm(st.r_dot) == pytest.approx(math.sqrt(200), rel=1e-9)


def test_closed_loop_free_flight_stays_on_sphere():
    p = KiteParams()
    st = flying_state()
    for k in range(6000):
        st = step(st, 0.02 * math.sin(0.5 * k * 0.01), p, 0.01, WIND)
        assert abs(np.linalg.norm(st.r) - 100.0) < 1e-6 * 100.0
        assert abs(st.r_dot @ st.r) < 1e-6 * 100.0 * np.linalg.norm(st.r_dot)
        if st.r[2] < 5.0:
            break


def test_reel_out_length_grows_linearly():
    p = KiteParams()
    st = flying_state()
    st.tether_rate = 2.0
    st.r_dot = st.r_dot + 2.0 * st.r / 100.0
    for _ in range(100):
        st = step(st, 0.0, p, 0.01, WIND)
    assert st.tether_len == pytest.approx(102.0)
    assert np.linalg.norm(st.r) == pytest.approx(102.0, rel=1e-12)
    assert st.r_dot @ st.r / np.linalg.norm(st.r) == pytest.approx(2.0)


def test_actuator_rate_and_magnitude_limits():
    p = KiteParams()
    assert actuate(0.0, 1.0, p, 0.01) == pytest.approx(0.05 * 0.01)
    assert actuate(0.0, -1.0, p, 0.01) == pytest.approx(-0.05 * 0.01)
    assert actuate(0.1198, 1.0, p, 0.01) == 0.12
    assert actuate(-0.1198, -1.0, p, 0.01) == -0.12
    assert actuate(0.01, 0.0102, p, 0.01) == pytest.approx(0.0102)


def test_step_requires_positive_dt():
    with pytest.raises(ValueError):
        step(flying_state(), 0.0, KiteParams(), 0.0, WIND)


def test_turbulence_decays_without_intensity(rng):
    x = np.ones(3)
    for _ in range(10):
        x = turbulence_step(x, 0.0, 0.5, 0.1, rng)
    np.testing.assert_allclose(x, 0.95**10)


def test_turbulence_full_decorrelation(rng):
    x = turbulence_step(np.full(3, 100.0), 1.0, 1.0, 1.0, rng)
    assert np.all(np.abs(x) < 10.0)


def test_turbulence_stationary_std():
    rng = np.random.default_rng(7)
    sigma, delta, dt, n = 1.3, 5.0, 0.01, 1_000_000
    # the update is a first-order IIR filter; run it vectorized over 1e6 steps
    xi = rng.standard_normal(n)
    a, c = 1.0 - delta * dt, sigma * math.sqrt(2 * delta * dt)
    x = lfilter([c], [1.0, -a], xi)
    std = x[1000:].std()
    assert abs(std / sigma - 1.0) < 0.02
    # and the scalar update agrees with the filter form
    y = np.zeros(3)
    r2 = np.random.default_rng(3)
    r3 = np.random.default_rng(3)
    for _ in range(5):
        y = turbulence_step(y, sigma, delta, dt, r2)
    z = lfilter([c], [1.0, -a], r3.standard_normal((5, 3)), axis=0)[-1]
    np.testing.assert_allclose(y, z, rtol=1e-12)


def test_turbulence_rejects_bad_parameters(rng):
    with pytest.raises(ValueError):
        turbulence_step(np.zeros(3), -1.0, 0.5, 0.01, rng)
    with pytest.raises(ValueError):
        turbulence_step(np.zeros(3), 1.0, 0.0, 0.01, rng)


def test_noiseless_sensors_are_exact():
    p = KiteParams()
    st = flying_state()
    acc = constrained_acceleration(st, p, WIND)
    s = read_sensors(st, acc, p, WIND)
    np.testing.assert_array_equal(s.position, st.r)
    np.testing.assert_array_equal(s.velocity, st.r_dot)
    np.testing.assert_array_equal(s.acceleration, acc)
    assert s.airspeed == pytest.approx(np.linalg.norm(st.r_dot - WIND))
    np.testing.assert_array_equal(s.attitude, aero_frame(st.r, st.r_dot, WIND))


def test_sensor_noise_levels():
    p = KiteParams()
    st = flying_state()
    acc = constrained_acceleration(st, p, WIND)
    rng = np.random.default_rng(11)
    noise = NoiseLevels()
    R0 = aero_frame(st.r, st.r_dot, WIND)
    pos, ang = [], []
    for _ in range(20000):
        s = read_sensors(st, acc, p, WIND, noise, rng)
        pos.append(s.position - st.r)
        dR = s.attitude @ R0.T
        ang.append(math.acos(max(-1.0, min(1.0, (np.trace(dR) - 1) / 2))))
    pos = np.array(pos)
    assert np.all(np.abs(pos.std(axis=0) / 2.5 - 1.0) < 0.02)
    # rotation angle of an isotropic Gaussian rotation vector is Maxwell distributed
    sig = math.radians(1.0)
    assert np.mean(ang) == pytest.approx(2 * sig * math.sqrt(2 / math.pi), rel=0.02)


def test_noisy_sensors_need_rng():
    p = KiteParams()
    st = flying_state()
    with pytest.raises(ValueError):
        read_sensors(st, np.zeros(3), p, WIND, NoiseLevels())


def test_noise_scaling():
    n = NoiseLevels().scaled(2.0)
    assert n.position == 5.0 and n.attitude_deg == 2.0


def test_synthetic_steering_network_drives_the_force():
    net = SplineNetwork.uniform(weights=np.linspace(1.0, 2.0, 10))
    p = KiteParams(steer_network=net)
    assert p.steer_force_coefficient(0.0) == pytest.approx(0.0, abs=1e-15)
    h = 1e-6
    slope = (p.steer_force_coefficient(0.03 + h) - p.steer_force_coefficient(0.03 - h)) / (2 * h)
    assert slope * p.S / p.S_t == pytest.approx(net.output(0.03), rel=1e-7)
    assert p.true_control_derivative_y(0.03) == net.output(0.03)
