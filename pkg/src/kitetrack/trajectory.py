"""Geometric control signals and the figure-eight reference.

Measurements of the kite position, velocity and acceleration are projected
onto the unit sphere; the turning-angle dynamics are then written as
``dtheta/dt = f + B * du`` with ``B = sum_i lambda_i * C_i(u)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.integrate import solve_ivp, trapezoid
from scipy.optimize import brentq

from .errors import DomainError, IrregularCurveError, NoBracketError, PoleSingularityError
from .sphere import EPS_REG, W_MAX, SpherePoint, TangentFrame, frame_at

BESSEL_ROOT = 2.404825557695773
REFERENCE_LENGTH = 4.0 / 3.0
REFERENCE_OFFSET = 0.834029


class ProjectedKinematics(NamedTuple):
    gamma: np.ndarray
    gamma_dot: np.ndarray
    gamma_ddot: np.ndarray
    frame: TangentFrame
    xy_dot: tuple[float, float]
    xy_ddot: tuple[float, float]
    radius: float

    @property
    def speed(self) -> float:
        return math.hypot(*self.xy_dot)

    @property
    def sin_elevation(self) -> float:
        return float(self.gamma[2])

    @property
    def tan_elevation(self) -> float:
        """Geodesic curvature of the latitude circle through ``gamma``."""
        z = float(self.gamma[2])
        c = math.sqrt(max(0.0, 1.0 - z * z))
        if c <= 1e-9:
            raise PoleSingularityError("projected position at the pole")
        return z / c


def project_kinematics(r, r_dot, r_ddot) -> ProjectedKinematics:
    """Kinematics of ``gamma = r / |r|`` and their tangent-frame coordinates."""
    r = np.asarray(r, dtype=float)
    r_dot = np.asarray(r_dot, dtype=float)
    r_ddot = np.asarray(r_ddot, dtype=float)
    rn = math.sqrt(r @ r)
    if rn < 1e-9:
        raise DomainError("cannot project a zero position vector")
    rn_dot = float(r @ r_dot) / rn
    rn_ddot = (float(r_dot @ r_dot) + float(r @ r_ddot)) / rn - rn_dot**2 / rn
    gamma = r / rn
    gamma_dot = r_dot / rn - rn_dot * r / rn**2
    gamma_ddot = (r_ddot / rn - rn_ddot * r / rn**2 - 2.0 * rn_dot * r_dot / rn**2
                  + 2.0 * rn_dot**2 * r / rn**3)
    frame = frame_at(gamma)
    xy_dot = (float(gamma_dot @ frame.e1), float(gamma_dot @ frame.e2))
    xy_ddot = (float(gamma_ddot @ frame.e1), float(gamma_ddot @ frame.e2))
    return ProjectedKinematics(gamma, gamma_dot, gamma_ddot, frame, xy_dot, xy_ddot, rn)


def drift_term_f(pk: ProjectedKinematics, theta: float) -> float:
    """Turning-angle rate at the current steering position.

    ``(xd ydd - xdd yd) / |v|**2 - tan(w) cos(theta) |v|``.
    """
    xd, yd = pk.xy_dot
    xdd, ydd = pk.xy_ddot
    speed2 = xd * xd + yd * yd
    if speed2 <= EPS_REG**2:
        raise IrregularCurveError("speed below regularity guard")
    return (xd * ydd - xdd * yd) / speed2 - pk.tan_elevation * math.cos(theta) * math.sqrt(speed2)


def tangential_map(pk: ProjectedKinematics, attitude) -> np.ndarray:
    """Rotation taking body-frame components to ``(e1, e2, gamma)`` components."""
    tangential = np.vstack([pk.frame.e1, pk.frame.e2, pk.gamma])
    return tangential @ np.asarray(attitude)


def sensitivity_scale(pk: ProjectedKinematics, airspeed: float, params) -> float:
    return params.rho * airspeed**2 * params.S_t / (2.0 * params.m * pk.radius)


def acceleration_sensitivities(pk: ProjectedKinematics, attitude, airspeed: float, params,
                               control_derivatives) -> tuple[float, float]:
    """``(d xdd / du, d ydd / du)`` from body-frame control derivatives."""
    ct = tangential_map(pk, attitude) @ np.asarray(control_derivatives, dtype=float)
    k = sensitivity_scale(pk, airspeed, params)
    return k * ct[0], k * ct[1]


def effectiveness_from_sensitivities(pk: ProjectedKinematics, dxdd: float, dydd: float) -> float:
    xd, yd = pk.xy_dot
    speed2 = xd * xd + yd * yd
    if speed2 <= EPS_REG**2:
        raise IrregularCurveError("speed below regularity guard")
    return (xd * dydd - dxdd * yd) / speed2


def effectiveness_coefficients(pk: ProjectedKinematics, attitude, airspeed: float, params) -> np.ndarray:
    """The per-axis coefficients ``lambda_i`` with ``B = sum_i lambda_i C_i``."""
    xd, yd = pk.xy_dot
    speed2 = xd * xd + yd * yd
    if speed2 <= EPS_REG**2:
        raise IrregularCurveError("speed below regularity guard")
    m = tangential_map(pk, attitude)
    return sensitivity_scale(pk, airspeed, params) / speed2 * (xd * m[1] - yd * m[0])


def effectiveness_B(pk: ProjectedKinematics, attitude, airspeed: float, params,
                    networks: Sequence, u: float) -> tuple[float, np.ndarray]:
    """Control effectiveness ``B`` from the spline networks and its ``lambda`` coefficients."""
    lam = effectiveness_coefficients(pk, attitude, airspeed, params)
    c = np.array([net.output(u) for net in networks])
    return float(lam @ c), lam


def corrected_path_length_step(gamma_dot, tangent_transported, dt: float) -> float:
    """Arc increment counting only motion along the (transported) target tangent."""
    return float(np.asarray(gamma_dot) @ np.asarray(tangent_transported)) * dt


def reference_turning_angle(s_c: float, amplitude: float = BESSEL_ROOT,
                            length: float = REFERENCE_LENGTH,
                            offset: float = REFERENCE_OFFSET) -> float:
    return amplitude * (math.cos(2.0 * math.pi * s_c / length) - 1.0) + offset


def _sphere_point(v, w) -> np.ndarray:
    cw = np.cos(w)
    return np.stack([cw * np.cos(v), cw * np.sin(v), np.sin(w)], axis=-1)


def _tangent(v, w, theta) -> np.ndarray:
    sv, cv, sw, cw = np.sin(v), np.cos(v), np.sin(w), np.cos(w)
    ct, st = np.cos(theta), np.sin(theta)
    return np.stack([-sv * ct - cv * sw * st, cv * ct - sv * sw * st, cw * st], axis=-1)


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Sampled unit-speed reference, one period in arc length.

    ``v`` is stored unwrapped so that linear interpolation never crosses the
    ``0 / 2pi`` seam.
    """

    s: np.ndarray
    v: np.ndarray
    w: np.ndarray
    theta: np.ndarray
    length: float
    amplitude: float = BESSEL_ROOT
    offset: float = REFERENCE_OFFSET

    @property
    def gamma(self) -> np.ndarray:
        return _sphere_point(self.v, self.w)

    @property
    def tangent(self) -> np.ndarray:
        return _tangent(self.v, self.w, self.theta)

    @property
    def closure_defect(self) -> float:
        g = self.gamma
        return float(np.linalg.norm(g[-1] - g[0]))

    def lookup(self, s_c: float) -> tuple[np.ndarray, np.ndarray, float]:
        """Target point, unit tangent and turning angle at corrected length ``s_c``.

        ``s_c`` is reduced modulo the period; the turning angle returned is the
        periodic profile value (no winding is accumulated across periods).
        """
        x = s_c % self.length
        v = float(np.interp(x, self.s, self.v))
        w = float(np.interp(x, self.s, self.w))
        th = float(np.interp(x, self.s, self.theta))
        return _sphere_point(v, w), _tangent(v, w, th), th

    def table(self) -> np.ndarray:
        """Columns ``s_c, v, w, theta``."""
        return np.column_stack([self.s, self.v % (2.0 * math.pi), self.w, self.theta])


def generate_reference(theta_fn: Callable[[float], float], length: float, start: SpherePoint,
                       n_samples: int = 4096, amplitude: float = BESSEL_ROOT,
                       offset: float = REFERENCE_OFFSET, w_max: float = W_MAX) -> ReferenceTrajectory:
    """Integrate the unit-speed curve with prescribed turning angle ``theta_fn(s)``.

    ``dw/ds = sin(theta)``, ``dv/ds = cos(theta) / cos(w)``.
    """

    def rhs(s, y):
        th = theta_fn(s)
        return [math.cos(th) / math.cos(y[1]), math.sin(th)]

    def near_pole(s, y):
        return w_max - y[1]

    near_pole.terminal = True
    s_eval = np.linspace(0.0, length, n_samples + 1)
    sol = solve_ivp(rhs, (0.0, length), [start.v, start.w], method="DOP853", t_eval=s_eval,
                    rtol=1e-11, atol=1e-12, events=near_pole)
    if sol.status == 1:
        raise PoleSingularityError(f"reference reaches the pole guard at s = {sol.t_events[0][0]:.4f}")
    theta = np.array([theta_fn(s) for s in s_eval])
    return ReferenceTrajectory(s_eval, sol.y[0], sol.y[1], theta, length, amplitude, offset)


def figure_eight(start: SpherePoint = SpherePoint(0.0, math.radians(30.0)),
                 amplitude: float = BESSEL_ROOT, length: float = REFERENCE_LENGTH,
                 offset: float = REFERENCE_OFFSET, n_samples: int = 4096) -> ReferenceTrajectory:
    """The cosine turning-angle figure eight starting (and crossing) at ``start``."""
    return generate_reference(lambda s: reference_turning_angle(s, amplitude, length, offset),
                              length, start, n_samples, amplitude, offset)


def _endpoint_displacement(amplitude, length, start, offset):
    ref = figure_eight(start, amplitude, length, offset, n_samples=64)
    return ref.gamma[-1] - ref.gamma[0]


def closure_defect(amplitude: float, length: float, start: SpherePoint, offset: float) -> float:
    return float(np.linalg.norm(_endpoint_displacement(amplitude, length, start, offset)))


def find_closing_offset(amplitude: float = BESSEL_ROOT, length: float = REFERENCE_LENGTH,
                        start: SpherePoint = SpherePoint(0.0, math.radians(30.0)),
                        half_width: float = math.pi / 4, tol: float = 1e-3) -> float:
    """Initial turning angle that closes the figure eight on the sphere.

    The root is sought for the azimuthal (transverse) component of the
    endpoint defect, bracketed around ``amplitude - pi/2``: the planar offset
    at which the two crossing directions are mirror images about ``e2``.
    """
    e1 = frame_at(start.cartesian).e1
    centre = amplitude - 0.5 * math.pi

    def transverse(offset):
        return float(_endpoint_displacement(amplitude, length, start, offset) @ e1)

    lo, hi = centre - half_width, centre + half_width
    f_lo, f_hi = transverse(lo), transverse(hi)
    if f_lo * f_hi > 0.0:
        raise NoBracketError(f"no sign change of the closure defect on [{lo:.4f}, {hi:.4f}]")
    offset = brentq(transverse, lo, hi, xtol=1e-13)
    defect = closure_defect(amplitude, length, start, offset)
    if defect > tol:
        raise NoBracketError(f"transverse root found but closure defect is {defect:.3g}")
    return offset


def planar_closure_defect(amplitude: float, length: float = REFERENCE_LENGTH,
                          offset: float = 0.0, n: int = 20000) -> float:
    """Endpoint gap of the planar unit-speed curve with the cosine turning angle.

    Brute-force composite trapezoid on the periodic integrand; the heading is
    periodic by construction, so the position gap is the whole defect.
    """
    s = np.linspace(0.0, length, n + 1)
    th = amplitude * (np.cos(2.0 * np.pi * s / length) - 1.0) + offset
    x = trapezoid(np.cos(th), s)
    y = trapezoid(np.sin(th), s)
    return math.hypot(x, y)
