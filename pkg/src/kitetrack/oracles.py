"""Independent numerical checks of the geometry, reference and controller.

Each suite returns a :class:`CheckResult`. The self-test runs all of them;
the test suite calls the same functions with the acceptance tolerances.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .config import RunConfig, make_controller
from .dynamics import constrained_acceleration, read_sensors, step_with_auxiliary
from .experiment import initial_state
from .sphere import (
    SpherePoint,
    geodesic_curvature,
    geodesic_distance,
    geodesic_distance_rate,
    geodesic_vector,
    rotate_along_geodesic,
    tangent_angle,
    turning_angle_rate,
)
from .synthetic import run_synthetic
from .trajectory import (
    BESSEL_ROOT,
    REFERENCE_LENGTH,
    REFERENCE_OFFSET,
    closure_defect,
    find_closing_offset,
    planar_closure_defect,
    project_kinematics,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    value: float = math.nan


def _timed(fn: Callable[..., CheckResult]) -> Callable[..., CheckResult]:
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# geometry ---------------------------------------------------------------------

def _random_curve(rng: np.random.Generator):
    """``t -> (p(t), p_dot(t))`` for a normalized quadratic through a random point."""
    a, b, c = rng.standard_normal((3, 3))
    a /= np.linalg.norm(a)

    def point(t):
        x = a + b * t + c * t * t
        return x / np.linalg.norm(x)

    def velocity(t):
        x = a + b * t + c * t * t
        xd = b + 2.0 * c * t
        n = np.linalg.norm(x)
        return xd / n - x * float(x @ xd) / n**3

    return point, velocity


def distance_rate_errors(n_pairs: int = 1000, seed: int = 12345, h: float = 1e-5,
                         min_separation: float = 0.05) -> np.ndarray:
    """Relative error of the analytic distance rate against centred differences.

    Pairs closer than ``min_separation`` to coincidence or antipodality are
    redrawn (the distance is not differentiable there). The error is scaled
    by ``max(|fd|, 1e-3 (|p_dot| + |q_dot|))`` so near-stationary distances
    are not divided by zero.
    """
    rng = np.random.default_rng(seed)
    errs = []
    while len(errs) < n_pairs:
        p, pd = _random_curve(rng)
        q, qd = _random_curve(rng)
        d0 = geodesic_distance(p(0.0), q(0.0))
        if not (min_separation < d0 < math.pi - min_separation):
            continue
        fd = (geodesic_distance(p(h), q(h)) - geodesic_distance(p(-h), q(-h))) / (2.0 * h)
        an = geodesic_distance_rate(p(0.0), pd(0.0), q(0.0), qd(0.0))
        scale = max(abs(fd), 1e-3 * (np.linalg.norm(pd(0.0)) + np.linalg.norm(qd(0.0))))
        errs.append(abs(an - fd) / scale)
    return np.array(errs)


def rotation_symmetry_errors(n_pairs: int = 1000, seed: int = 54321) -> np.ndarray:
    """``|R Y(p -> q) + Y(q -> p)|`` for random pairs."""
    rng = np.random.default_rng(seed)
    errs = []
    while len(errs) < n_pairs:
        p, q = rng.standard_normal((2, 3))
        p /= np.linalg.norm(p)
        q /= np.linalg.norm(q)
        if np.linalg.norm(np.cross(p, q)) < 1e-3:
            continue
        R = rotate_along_geodesic(p, q)
        errs.append(float(np.linalg.norm(R @ geodesic_vector(p, q) + geodesic_vector(q, p))))
    return np.array(errs)


@_timed
def check_geometry(n_pairs: int = 1000, rate_tol: float = 1e-6, sym_tol: float = 1e-10) -> CheckResult:
    rate = distance_rate_errors(n_pairs)
    sym = rotation_symmetry_errors(n_pairs)
    ok = rate.max() < rate_tol and sym.max() < sym_tol
    return CheckResult("geometry", bool(ok),
                       f"distance rate rel. err {rate.max():.2e} (< {rate_tol:g}), "
                       f"rotation symmetry {sym.max():.2e} (< {sym_tol:g})", value=float(rate.max()))


# turning angle ------------------------------------------------------------------

def liouville_rate(r, r_dot, r_ddot, theta: float, sign: float = 1.0) -> float:
    """Turning-angle rate of the projected path; ``sign = -1`` is a deliberate mutation."""
    pk = project_kinematics(r, r_dot, r_ddot)
    kappa = geodesic_curvature(pk.xy_dot, pk.xy_ddot)
    kg1 = pk.tan_elevation
    return turning_angle_rate(theta, kappa, sign * kg1, pk.speed)


def _wrapped_gap(a: float, b: float) -> float:
    return abs((a - b + math.pi) % (2.0 * math.pi) - math.pi)


def liouville_flight_errors(duration_s: float = 60.0, config: Optional[RunConfig] = None,
                            mutate: bool = False) -> np.ndarray:
    """Integrated turning angle against the tangent direction along a closed-loop flight.

    The angle is integrated through the same RK4 stages as the kite. Its
    initial value comes from the initial velocity. At every tick it is
    compared with ``atan2(T.e2, T.e1)`` modulo ``2 pi``.
    """
    cfg = config or RunConfig()
    params = cfg.kite_params()
    reference = cfg.reference()
    ctrl = make_controller(cfg, params, reference)
    wind = np.array([cfg.wind_speed_m_s, 0.0, 0.0])
    dt = cfg.dt_s
    state = initial_state(cfg, reference)
    sign = -1.0 if mutate else 1.0

    def measured_angle(st):
        pk = project_kinematics(st.r, st.r_dot, np.zeros(3))
        return tangent_angle(pk.gamma_dot, pk.frame)

    theta = measured_angle(state)
    errs = []
    for _ in range(int(round(duration_s / dt))):
        acc = constrained_acceleration(state, params, wind)
        command, _ = ctrl.compute(read_sensors(state, acc, params, wind), dt)
        new, theta = step_with_auxiliary(state, command, params, dt, wind, theta,
                                         lambda r, rd, rdd, th: liouville_rate(r, rd, rdd, th, sign))
        ctrl.feedback(new.u_act - state.u_act, dt)
        state = new
        errs.append(_wrapped_gap(theta, measured_angle(state)))
    return np.array(errs)


def analytic_path(t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Smooth Lissajous figure eight on the unit sphere with its two time derivatives."""
    v, vd, vdd = 0.8 * math.sin(0.5 * t), 0.4 * math.cos(0.5 * t), -0.2 * math.sin(0.5 * t)
    w, wd, wdd = 0.6 + 0.25 * math.sin(t), 0.25 * math.cos(t), -0.25 * math.sin(t)
    cv, sv, cw, sw = math.cos(v), math.sin(v), math.cos(w), math.sin(w)
    p = np.array([cw * cv, cw * sv, sw])
    pv = np.array([-cw * sv, cw * cv, 0.0])
    pw = np.array([-sw * cv, -sw * sv, cw])
    pvv = np.array([-cw * cv, -cw * sv, 0.0])
    pww = -p
    pvw = np.array([sw * sv, -sw * cv, 0.0])
    pd = pv * vd + pw * wd
    pdd = pvv * vd**2 + 2.0 * pvw * vd * wd + pww * wd**2 + pv * vdd + pw * wdd
    return p, pd, pdd


def liouville_analytic_errors(duration_s: float = 60.0, dt: float = 0.01, mutate: bool = False) -> np.ndarray:
    """Same comparison as :func:`liouville_flight_errors` along :func:`analytic_path`."""
    sign = -1.0 if mutate else 1.0

    def rate(t, th):
        p, pd, pdd = analytic_path(t)
        return liouville_rate(p, pd, pdd, th, sign)

    def measured(t):
        p, pd, pdd = analytic_path(t)
        pk = project_kinematics(p, pd, pdd)
        return tangent_angle(pk.gamma_dot, pk.frame)

    theta = measured(0.0)
    errs = []
    for k in range(int(round(duration_s / dt))):
        t = k * dt
        k1 = rate(t, theta)
        k2 = rate(t + 0.5 * dt, theta + 0.5 * dt * k1)
        k3 = rate(t + 0.5 * dt, theta + 0.5 * dt * k2)
        k4 = rate(t + dt, theta + dt * k3)
        theta += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        errs.append(_wrapped_gap(theta, measured(t + dt)))
    return np.array(errs)


@_timed
def check_liouville(tol: float = 1e-6, mutate: bool = False, flight: bool = False,
                    duration_s: float = 60.0) -> CheckResult:
    errs = (liouville_flight_errors(duration_s, mutate=mutate) if flight
            else liouville_analytic_errors(duration_s, mutate=mutate))
    worst = float(errs.max())
    src = "flight" if flight else "analytic path"
    return CheckResult("liouville", worst < tol, f"{src}: max angle gap {worst:.2e} rad (< {tol:g})",
                       value=worst)


# reference closure ----------------------------------------------------------------

@_timed
def check_closure(planar_tol: float = 1e-6, open_min: float = 0.05, sphere_tol: float = 1e-3,
                  offset_tol: float = 1e-3) -> CheckResult:
    closed = planar_closure_defect(BESSEL_ROOT, REFERENCE_LENGTH, BESSEL_ROOT - 0.5 * math.pi)
    opened = planar_closure_defect(2.0, REFERENCE_LENGTH, 2.0 - 0.5 * math.pi)
    start = SpherePoint(0.0, math.radians(30.0))
    offset = find_closing_offset(BESSEL_ROOT, REFERENCE_LENGTH, start)
    defect = closure_defect(BESSEL_ROOT, REFERENCE_LENGTH, start, offset)
    ok = (closed < planar_tol and opened > open_min and defect < sphere_tol
          and abs(offset - REFERENCE_OFFSET) < offset_tol)
    return CheckResult("closure", bool(ok),
                       f"planar defect {closed:.1e} at the Bessel root, {opened:.3f} at A = 2; "
                       f"sphere offset {offset:.6f} with defect {defect:.1e}", value=defect)


# Lyapunov ------------------------------------------------------------------------

@_timed
def check_lyapunov(limits: bool = False, duration_s: float = 20.0, increase_tol: float = 1e-9) -> CheckResult:
    run = run_synthetic(duration=duration_s, limits=limits)
    res, tol = run.lyapunov_residual(modified=limits)
    ratio = float(np.max(np.abs(res) / tol))
    if limits:
        bound = run.estimate_bound
        rise = float(np.max(np.diff(bound)))
        bounded = bool(np.all(run.weight_error.max(axis=1) <= bound * (1.0 + 1e-12)))
        ok = ratio <= 1.0 and rise <= increase_tol and bounded
        detail = (f"residual/tol {ratio:.2f}, max rise of sqrt(2 Gamma V_m) {rise:.1e}, "
                  f"bound holds: {bounded}, limited ticks {run.limited.mean():.0%}")
        name = "lyapunov-limited"
    else:
        rise = float(np.max(np.diff(run.V)))
        ok = ratio <= 1.0 and rise <= increase_tol
        detail = f"residual/tol {ratio:.2f}, max rise of V {rise:.1e}"
        name = "lyapunov"
    return CheckResult(name, bool(ok), detail, value=ratio)


def run_selftest(mutate_liouville: bool = False) -> list[CheckResult]:
    """All oracle suites with their default tolerances."""
    return [
        check_geometry(),
        check_liouville(mutate=mutate_liouville),
        check_closure(),
        check_lyapunov(limits=False),
        check_lyapunov(limits=True),
    ]


def format_report(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'suite'.ljust(width)}  result  time    detail"]
    for r in results:
        lines.append(f"{r.name.ljust(width)}  {'PASS' if r.passed else 'FAIL'}    "
                     f"{r.seconds:6.2f}s {r.detail}")
    return "\n".join(lines)
