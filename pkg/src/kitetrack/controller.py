"""Adaptive turning-angle tracking controller.

The outer loop turns the geodesic offset from the target point into a
target turning angle; the inner loop is an incremental inversion of
``dtheta/dt = f + B * du`` with ``B`` estimated from B-spline networks.
Actuator rate/magnitude limits are accounted for by the filter state
``zeta``; the estimator is driven by the modified error ``e - zeta`` and the
increment the actuator actually achieved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .sphere import (
    EPS_REG,
    TangentFrame,
    TurningAngleState,
    cross3,
    geodesic_curvature,
    lift_angle,
    tangent_angle,
    transport_to,
    turning_angle_rate,
)
from .spline import SplineNetwork
from .trajectory import (
    ReferenceTrajectory,
    corrected_path_length_step,
    drift_term_f,
    effectiveness_coefficients,
    project_kinematics,
)

EPS_B = 1e-4
DTHETA_METHODS = ("extrapolated", "backward")


@dataclass(frozen=True)
class Gains:
    K: float = 3.0
    Gamma: float = 100.0
    L_gain: float = 10.0

    def __post_init__(self):
        if not self.K > 0.0:
            raise ValueError("K must be positive")
        if self.Gamma < 0.0 or self.L_gain < 0.0:
            raise ValueError("Gamma and L_gain must be non-negative")


def outer_target_angle(gamma, gamma_t, T_t, frame: TangentFrame, L_gain: float,
                       theta_current: float) -> float:
    """Target turning angle steering ``gamma`` onto the target point.

    The tangent ``T_t`` is carried to ``gamma`` along the connecting geodesic
    and tilted towards the target by ``L_gain`` times the cross-track offset.
    Only the direction of the resulting vector is used.
    """
    T = transport_to(gamma, gamma_t, T_t)
    t = cross3(gamma, T)
    perp = gamma_t - float(gamma_t @ gamma) * gamma
    vec = T + L_gain * float(t @ perp) * t
    return lift_angle(tangent_angle(vec, frame), theta_current)


def inner_control(f: float, B_hat: float, theta: float, theta_t: float, dtheta_t_dt: float,
                  K: float, eps_b: float = EPS_B) -> tuple[float, bool]:
    """Steering increment; returns ``(du, singular)``.

    When ``|B_hat| <= eps_b`` the increment is 0 and ``singular`` is set.
    """
    if abs(B_hat) <= eps_b:
        return 0.0, True
    e = theta - theta_t
    return -(f - dtheta_t_dt + K * e) / B_hat, False


def zeta_rate(zeta: float, K: float, B_hat: float, du_deficit: float) -> float:
    """``dzeta/dt = -K zeta + B_hat (du_a - du)``."""
    return -K * zeta + B_hat * du_deficit


def zeta_step(zeta: float, K: float, B_hat: float, du_deficit: float, dt: float) -> float:
    """Forward-Euler step of :func:`zeta_rate`."""
    return zeta + dt * zeta_rate(zeta, K, B_hat, du_deficit)


def weight_rate(e_m: float, lam, du_applied: float, b, Gamma: float) -> np.ndarray:
    """Modified estimator law ``dw_i/dt = Gamma e_m lambda_i du_a b``, one row per axis."""
    return (Gamma * e_m * du_applied) * np.outer(lam, b)


def update_weights(w_hat: np.ndarray, e_m: float, lam, du_applied: float, b, Gamma: float,
                   dt: float) -> np.ndarray:
    """Forward-Euler step of :func:`weight_rate`."""
    return w_hat + dt * weight_rate(e_m, lam, du_applied, b, Gamma)


def lyapunov_monitors(e: float, e_m: float, w_hat, w_true, Gamma: float) -> tuple[float, float]:
    """Tracking and modified Lyapunov functions ``(V, V_m)``."""
    err = float(np.sum((np.asarray(w_hat) - np.asarray(w_true)) ** 2))
    est = 0.5 * err / Gamma if Gamma > 0.0 else (0.0 if err == 0.0 else math.inf)
    return 0.5 * e * e + est, 0.5 * e_m * e_m + est


@dataclass
class ControllerState:
    w_hat: np.ndarray
    zeta: float = 0.0
    theta: Optional[TurningAngleState] = None
    theta_t_prev: Optional[float] = None
    dtheta_t_filt: float = 0.0
    u_star: float = 0.0
    s_c: float = 0.0
    saturated_ever: bool = False
    r_hat: Optional[np.ndarray] = None
    raw_prev: Optional[float] = None
    v_prev: Optional[np.ndarray] = None


@dataclass
class Diagnostics:
    t: float = 0.0
    gamma: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gamma_t: np.ndarray = field(default_factory=lambda: np.zeros(3))
    theta: float = 0.0
    theta_t: float = 0.0
    dtheta_t: float = 0.0
    e: float = 0.0
    e_m: float = 0.0
    zeta: float = 0.0
    f: float = 0.0
    B_hat: float = 0.0
    lam: np.ndarray = field(default_factory=lambda: np.zeros(3))
    du: float = 0.0
    du_applied: float = 0.0
    command: float = 0.0
    s_c: float = 0.0
    singular: bool = False


class TrackingController:
    """One controller instance per flight; call :meth:`compute` then :meth:`feedback` each tick.

    The target-angle rate comes from differencing the lifted target angle.
    With ``dtheta_method="backward"`` it is the last tick's difference. With
    ``"extrapolated"`` (the default) that difference is linearly extrapolated
    half a tick ahead, which removes the lag bias of ``dt * d2theta_t/dt2``.
    ``dtheta_filter_tau`` optionally low-pass filters the result.
    ``position_filter_tau`` blends the measured position with the
    trapezoidal integral of the measured velocity. This suppresses
    position noise, which the outer loop would otherwise amplify by
    ``L_gain``. A value of 0 passes the position through unchanged.
    """

    def __init__(self, reference: ReferenceTrajectory, gains: Gains, params,
                 networks: Sequence[SplineNetwork], dtheta_filter_tau: float = 0.0,
                 position_filter_tau: float = 0.0, eps_b: float = EPS_B,
                 dtheta_method: str = "extrapolated"):
        if dtheta_filter_tau < 0.0 or position_filter_tau < 0.0:
            raise ValueError("filter time constants must be non-negative")
        if dtheta_method not in DTHETA_METHODS:
            raise ValueError(f"dtheta_method must be one of {DTHETA_METHODS}")
        self.dtheta_method = dtheta_method
        self.reference = reference
        self.gains = gains
        self.params = params
        self.networks = [net.copy() for net in networks]
        self.dtheta_filter_tau = dtheta_filter_tau
        self.position_filter_tau = position_filter_tau
        self.eps_b = eps_b
        self.state = ControllerState(np.array([net.weights for net in self.networks]))
        self._pending: Optional[tuple] = None
        self._last_command = 0.0

    @property
    def w_hat(self) -> np.ndarray:
        return self.state.w_hat

    def _sync_networks(self):
        for net, w in zip(self.networks, self.state.w_hat):
            net.weights = w

    def _filtered_position(self, position, velocity, dt: float) -> np.ndarray:
        st = self.state
        position = np.asarray(position, dtype=float)
        velocity = np.asarray(velocity, dtype=float)
        if not self.position_filter_tau:
            return position
        if st.r_hat is None:
            st.r_hat = position.copy()
        else:
            pred = st.r_hat + 0.5 * (st.v_prev + velocity) * dt
            st.r_hat = pred + (dt / self.position_filter_tau) * (position - pred)
        st.v_prev = velocity.copy()
        return st.r_hat

    def compute(self, reading, dt: float) -> tuple[float, Diagnostics]:
        """Steering command from one sensor reading."""
        st = self.state
        g = self.gains
        position = self._filtered_position(reading.position, reading.velocity, dt)
        pk = project_kinematics(position, reading.velocity, reading.acceleration)
        st.u_star = reading.u_act

        if st.theta is None:
            st.theta = TurningAngleState.from_velocity(pk.gamma, pk.gamma_dot)
        else:
            kappa = geodesic_curvature(pk.xy_dot, pk.xy_ddot) if pk.speed > EPS_REG else 0.0
            kg1 = pk.tan_elevation
            rate = turning_angle_rate(st.theta.theta, kappa, kg1, pk.speed)
            st.theta = st.theta.advance(pk.gamma, pk.gamma_dot, rate, dt)
            gamma_t, T_t, _ = self.reference.lookup(st.s_c)
            st.s_c += corrected_path_length_step(pk.gamma_dot, transport_to(pk.gamma, gamma_t, T_t), dt)
        theta = st.theta.theta

        gamma_t, T_t, _ = self.reference.lookup(st.s_c)
        theta_t = outer_target_angle(pk.gamma, gamma_t, T_t, pk.frame, g.L_gain, theta)
        if st.theta_t_prev is not None:
            # the branch of theta_t follows theta; keep the difference continuous
            raw = (lift_angle(theta_t, st.theta_t_prev) - st.theta_t_prev) / dt
            if self.dtheta_method == "extrapolated" and st.raw_prev is not None:
                # predict the mean rate over the coming tick, not the last one
                raw, st.raw_prev = 2.0 * raw - st.raw_prev, raw
            else:
                st.raw_prev = raw
            if self.dtheta_filter_tau:
                a = 1.0 - math.exp(-dt / self.dtheta_filter_tau)
                st.dtheta_t_filt += a * (raw - st.dtheta_t_filt)
            else:
                st.dtheta_t_filt = raw
        st.theta_t_prev = theta_t

        f = drift_term_f(pk, theta)
        lam = effectiveness_coefficients(pk, reading.attitude, reading.airspeed, self.params)
        b = self.networks[0].basis(st.u_star)
        B_hat = float(lam @ (st.w_hat @ b))
        du, singular = inner_control(f, B_hat, theta, theta_t, st.dtheta_t_filt, g.K, self.eps_b)
        command = self._last_command if singular else st.u_star + du
        if singular:
            du = command - st.u_star
        self._last_command = command
        e = theta - theta_t
        self._pending = (e, lam, b, B_hat, du)
        diag = Diagnostics(gamma=pk.gamma, gamma_t=gamma_t, theta=theta, theta_t=theta_t,
                           dtheta_t=st.dtheta_t_filt, e=e, e_m=e - st.zeta, zeta=st.zeta, f=f,
                           B_hat=B_hat, lam=lam, du=du, command=command, s_c=st.s_c,
                           singular=singular)
        return command, diag

    def feedback(self, du_applied: float, dt: float) -> float:
        """Run the estimator and actuator-correction filter with the realised increment.

        Returns the modified tracking error used for the update.
        """
        if self._pending is None:
            raise RuntimeError("feedback() called before compute()")
        e, lam, b, B_hat, du = self._pending
        st = self.state
        e_m = e - st.zeta
        if self.gains.Gamma > 0.0:
            st.w_hat = update_weights(st.w_hat, e_m, lam, du_applied, b, self.gains.Gamma, dt)
            self._sync_networks()
        deficit = du_applied - du
        # rounding in u* + du - u* is not an actuator limit
        if abs(deficit) <= 8.0 * np.finfo(float).eps * (abs(st.u_star) + abs(du) + 1e-300):
            deficit = 0.0
        else:
            st.saturated_ever = True
        st.zeta = zeta_step(st.zeta, self.gains.K, B_hat, deficit, dt)
        self._pending = None
        return e_m
