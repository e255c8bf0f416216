import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import j0, jn_zeros

from kitetrack.dynamics import KiteParams
from kitetrack.errors import DomainError, IrregularCurveError, NoBracketError, PoleSingularityError
from kitetrack.sphere import SpherePoint, frame_at, patch_point
from kitetrack.spline import SplineNetwork
from kitetrack.trajectory import (
    BESSEL_ROOT,
    REFERENCE_LENGTH,
    REFERENCE_OFFSET,
    acceleration_sensitivities,
    closure_defect,
    corrected_path_length_step,
    drift_term_f,
    effectiveness_B,
    effectiveness_from_sensitivities,
    figure_eight,
    find_closing_offset,
    generate_reference,
    planar_closure_defect,
    project_kinematics,
    reference_turning_angle,
)


def smooth_r(t):
    """Smooth position with varying radius, and its two derivatives."""
    def pos(t):
        rad = 100 + 3 * math.sin(0.7 * t)
        v, w = 0.4 * math.sin(0.3 * t), 0.5 + 0.2 * math.cos(0.5 * t)
        return rad * np.array([math.cos(w) * math.cos(v), math.cos(w) * math.sin(v), math.sin(w)])
    h = 1e-4
    r = pos(t)
    rd = (pos(t + h) - pos(t - h)) / (2 * h)
    rdd = (pos(t + h) - 2 * r + pos(t - h)) / h**2
    return pos, r, rd, rdd


def test_bessel_root_constant():
    assert BESSEL_ROOT == pytest.approx(jn_zeros(0, 1)[0], abs=1e-15)


def test_projection_of_circular_motion():
    # constant radius: radial part of gamma_ddot is -|gamma_dot|^2
    r = 50 * patch_point(0.3, 0.4)
    e1 = frame_at(r / 50).e1
    rd = 7.0 * e1
    rdd = -(49.0 / 50) * r / 50 + 0.3 * e1
    pk = project_kinematics(r, rd, rdd)
    assert pk.gamma_ddot @ pk.gamma == pytest.approx(-np.dot(pk.gamma_dot, pk.gamma_dot), rel=1e-12)
    assert abs(pk.gamma_dot @ pk.gamma) < 1e-12


def test_projection_kills_radial_motion():
    r = 80 * patch_point(1.0, 0.2)
    pk = project_kinematics(r, 3.0 * r, 0.5 * r)
    np.testing.assert_allclose(pk.gamma_dot, 0.0, atol=1e-14)
    assert pk.speed == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("t", [0.0, 1.3, 4.7, 9.1])
def test_projection_matches_finite_differences(t):
    pos, r, rd, rdd = smooth_r(t)
    # exact derivatives from a finer stencil of gamma itself
    def g(s):
        p = pos(s)
        return p / np.linalg.norm(p)
    h = 1e-3
    gd = (g(t - 2 * h) - 8 * g(t - h) + 8 * g(t + h) - g(t + 2 * h)) / (12 * h)
    gdd = (-g(t - 2 * h) + 16 * g(t - h) - 30 * g(t) + 16 * g(t + h) - g(t + 2 * h)) / (12 * h**2)
    pk = project_kinematics(r, rd, rdd)
    np.testing.assert_allclose(pk.gamma_dot, gd, atol=1e-5)
    np.testing.assert_allclose(pk.gamma_ddot, gdd, atol=1e-5)
    assert pk.xy_dot == pytest.approx((pk.gamma_dot @ pk.frame.e1, pk.gamma_dot @ pk.frame.e2))


def test_projection_rejects_zero_position():
    with pytest.raises(DomainError):
        project_kinematics(np.zeros(3), np.ones(3), np.ones(3))


def test_drift_on_equator_great_circle():
    pk = project_kinematics(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([-1.0, 0, 0]))
    assert drift_term_f(pk, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_drift_second_term_vanishes_across_the_heading():
    w = 0.7
    p = patch_point(0.0, w)
    f = frame_at(p)
    pk = project_kinematics(p, f.e2, -p)  # meridian, unit speed
    assert drift_term_f(pk, math.pi / 2) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("w0", [0.0, 0.3, 0.9, 1.3])
def test_drift_vanishes_on_latitude_circles(w0):
    # unit-speed latitude circle: heading along e1 is kept, so f = 0
    p = patch_point(0.5, w0)
    e1 = frame_at(p).e1
    centre = np.array([0, 0, math.sin(w0)])
    acc = -(p - centre) / math.cos(w0) ** 2
    pk = project_kinematics(p, e1, acc)
    assert drift_term_f(pk, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert pk.tan_elevation == pytest.approx(math.tan(w0))


def test_drift_guard():
    p = patch_point(0.0, 0.3)
    pk = project_kinematics(p, np.zeros(3), np.zeros(3))
    with pytest.raises(IrregularCurveError):
        drift_term_f(pk, 0.0)


def random_effectiveness_case(rng):
    r = 100 * patch_point(rng.uniform(0, 2 * math.pi), rng.uniform(0.05, 1.3))
    f = frame_at(r / 100)
    rd = rng.normal(0, 20) * f.e1 + rng.normal(0, 20) * f.e2 + rng.normal(0, 2) * r / 100
    rdd = rng.standard_normal(3) * 10
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    attitude = q * np.sign(np.linalg.det(q))
    nets = [SplineNetwork.uniform(weights=rng.standard_normal(10)) for _ in range(3)]
    return project_kinematics(r, rd, rdd), attitude, rng.uniform(5, 40), nets, rng.uniform(-0.12, 0.12)


def test_effectiveness_linear_form_matches_sensitivity_form():
    rng = np.random.default_rng(99)
    params = KiteParams()
    worst = 0.0
    for k in range(10_000):
        pk, att, va, nets, u = random_effectiveness_case(rng)
        B, lam = effectiveness_B(pk, att, va, params, nets, u)
        c = [n.output(u) for n in nets]
        dx, dy = acceleration_sensitivities(pk, att, va, params, c)
        B7 = effectiveness_from_sensitivities(pk, dx, dy)
        worst = max(worst, abs(B - B7) / max(1.0, abs(B7)))
        if k < 100:
            assert B == pytest.approx(sum(lam[i] * nets[i].weights @ nets[i].basis(u) for i in range(3)),
                                      abs=1e-12 * max(1, abs(B)))
    assert worst < 1e-12


def test_effectiveness_scaling():
    rng = np.random.default_rng(5)
    pk, att, va, nets, u = random_effectiveness_case(rng)
    B0, lam0 = effectiveness_B(pk, att, 0.0, KiteParams(), nets, u)
    assert B0 == 0.0 and np.all(lam0 == 0.0)
    B1, _ = effectiveness_B(pk, att, va, KiteParams(), nets, u)
    B2, _ = effectiveness_B(pk, att, va, KiteParams(m=3.0), nets, u)
    assert B2 == pytest.approx(B1 / 2, rel=1e-14)


def test_corrected_path_length_examples():
    T = np.array([0.0, 1.0, 0.0])
    assert corrected_path_length_step(2.5 * T, T, 0.01) == pytest.approx(0.025)
    assert corrected_path_length_step(np.array([0, 0, 1.0]), T, 0.01) == 0.0
    assert corrected_path_length_step(-T, T, 0.01) < 0.0
    # zig-zag at +-45 degrees around the target direction
    dt, total = 1e-3, 0.0
    for k in range(1000):
        sgn = 1 if (k // 100) % 2 == 0 else -1
        vel = np.array([sgn * math.sqrt(0.5), math.sqrt(0.5), 0.0])
        total += corrected_path_length_step(vel, T, dt)
    assert total / 1.0 == pytest.approx(math.sqrt(2) / 2)


def test_corrected_length_is_parametrization_independent():
    ref = figure_eight()
    L = ref.length

    def s_c_along(profile, dprofile, T_end, n):
        # midpoint sums of gamma_dot . T, flying exactly on the target
        dt = T_end / n
        s = 0.0
        for k in range(n):
            tm = (k + 0.5) * dt
            _, tangent, _ = ref.lookup(profile(tm))
            s += corrected_path_length_step(dprofile(tm) * tangent, tangent, dt)
        return s

    a = s_c_along(lambda t: 0.5 * L * t, lambda t: 0.5 * L, 1.0, 4000)
    b = s_c_along(lambda t: 0.5 * L * t**2, lambda t: L * t, 1.0, 4000)
    assert abs(a - b) < 1e-6


@pytest.mark.parametrize("s, expected", [
    (0.0, 0.834029),
    (REFERENCE_LENGTH / 2, -3.975622),
    (REFERENCE_LENGTH, 0.834029),
])
def test_reference_turning_angle_examples(s, expected):
    assert reference_turning_angle(s) == pytest.approx(expected, abs=1e-6)


def test_default_offset_is_bessel_root_minus_quarter_turn():
    assert REFERENCE_OFFSET == pytest.approx(BESSEL_ROOT - math.pi / 2, abs=1e-6)


def test_constant_heading_references():
    start = SpherePoint(0.2, 0.5)
    lat = generate_reference(lambda s: 0.0, 1.0, start, 64)
    np.testing.assert_allclose(lat.w, 0.5, atol=1e-12)
    merid = generate_reference(lambda s: math.pi / 2, 0.6, start, 64)
    np.testing.assert_allclose(merid.v, 0.2, atol=1e-12)
    np.testing.assert_allclose(merid.w, 0.5 + merid.s, atol=1e-10)


def test_reference_guards_the_pole():
    with pytest.raises(PoleSingularityError):
        generate_reference(lambda s: math.pi / 2, 2.0, SpherePoint(0.0, 0.5), 64)


def test_default_figure_eight_closes():
    ref = figure_eight()
    assert ref.closure_defect < 1e-3
    np.testing.assert_allclose(np.linalg.norm(ref.gamma, axis=1), 1.0, atol=1e-14)
    assert ref.theta[-1] - ref.theta[0] == pytest.approx(0.0, abs=1e-12)


def test_figure_eight_self_intersects():
    ref = figure_eight(n_samples=1024)
    g = ref.gamma[:-1]
    n = len(g)
    dist = np.linalg.norm(g[:, None] - g[None], axis=2)
    i, j = np.indices(dist.shape)
    far = np.minimum(abs(i - j), n - abs(i - j)) >= n // 8
    # two well-separated parts of the path pass within one sample spacing
    assert dist[far].min() < ref.s[1] - ref.s[0]


def test_reference_tangent_matches_numerical_derivative():
    ref = figure_eight(n_samples=8192)
    g, T = ref.gamma, ref.tangent
    ds = ref.s[1] - ref.s[0]
    d = (g[2:] - g[:-2]) / (2 * ds)
    assert np.max(np.abs(d - T[1:-1])) < 1e-5


def test_lookup_wraps_and_interpolates():
    ref = figure_eight()
    g0, T0, th0 = ref.lookup(0.0)
    g1, T1, th1 = ref.lookup(ref.length * 3)
    np.testing.assert_allclose(g0, g1, atol=1e-3)
    assert th0 == pytest.approx(th1)
    g, T, th = ref.lookup(0.3)
    assert abs(np.linalg.norm(T) - 1) < 1e-12 and abs(T @ g) < 1e-12
    assert th == pytest.approx(reference_turning_angle(0.3), abs=1e-6)


def test_reference_table_columns():
    ref = figure_eight(n_samples=32)
    tab = ref.table()
    assert tab.shape == (33, 4)
    assert np.all((tab[:, 1] >= 0) & (tab[:, 1] < 2 * math.pi))


@pytest.mark.parametrize("A", [BESSEL_ROOT, jn_zeros(0, 2)[1]])
@pytest.mark.parametrize("offset", [0.0, 0.834029, 2.0])
def test_planar_closure_at_bessel_roots(A, offset):
    assert planar_closure_defect(A, REFERENCE_LENGTH, offset) < 1e-6


@pytest.mark.parametrize("A", [2.0, 3.0])
def test_planar_curve_stays_open_off_the_roots(A):
    d = planar_closure_defect(A, REFERENCE_LENGTH, 0.0)
    assert d > 0.05
    # brute force agrees with the closed form L |J0(A)|
    assert d == pytest.approx(REFERENCE_LENGTH * abs(j0(A)), rel=1e-8)


def test_planar_non_root_defect_exceeds_point_one():
    assert planar_closure_defect(2.0, REFERENCE_LENGTH, 0.3) > 0.1


def test_closing_offset_on_the_sphere():
    off = find_closing_offset()
    assert off == pytest.approx(REFERENCE_OFFSET, abs=1e-3)
    assert closure_defect(BESSEL_ROOT, REFERENCE_LENGTH, SpherePoint(0.0, math.radians(30)), off) < 1e-3


@settings(max_examples=10)
@given(st.floats(0.1, 0.8), st.floats(0.0, 6.0))
def test_closing_offset_independent_of_start(w0, v0):
    off = find_closing_offset(start=SpherePoint(v0, w0))
    assert off == pytest.approx(BESSEL_ROOT - math.pi / 2, abs=1e-6)


def test_closing_offset_without_bracket():
    with pytest.raises(NoBracketError):
        find_closing_offset(2.0)
