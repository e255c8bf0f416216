"""Point-mass kite truth model on a sphere of prescribed radius.

The kite is held on the sphere ``|r| = tether_len`` by an analytic
constraint acceleration.  Aerodynamic forces act in the aerodynamic frame
``(e_x, e_y, e_z)``: ``e_x`` along the apparent wind ``r_dot - v_w``,
``e_y`` along ``r x e_x`` (no roll relative to the tether) and
``e_z = e_x x e_y``, which always has a non-negative radial component.
Drag acts along ``-e_x``; lift along ``+e_z`` and the steering force along
``+e_y``, so a positive steering input turns the kite towards ``+e_y``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.interpolate import BSpline, PchipInterpolator
from scipy.spatial.transform import Rotation

from .errors import FrameUndefinedError
from .sphere import cross3
from .spline import SplineNetwork

GRAVITY = 9.81
EPS_AIR = 1e-3

# (alpha_deg, C_L) for 0..180 deg; extended as an odd function.  Thin-airfoil
# slope 2*pi*sin(alpha) up to 10 deg, stall plateau near 15 deg, flat-plate-like
# behaviour at large angles.
_DEFAULT_LIFT_HALF = [
    (0.0, 0.0), (2.0, 0.2193), (4.0, 0.4383), (6.0, 0.6568), (8.0, 0.8745),
    (10.0, 1.0911), (11.0, 1.1900), (12.0, 1.2750), (13.0, 1.3400), (14.0, 1.3800),
    (15.0, 1.4000), (16.0, 1.3800), (17.0, 1.3000), (18.0, 1.1800), (20.0, 1.0200),
    (25.0, 0.9200), (30.0, 0.9500), (40.0, 1.0200), (45.0, 1.0300), (50.0, 1.0000),
    (60.0, 0.8600), (70.0, 0.6200), (80.0, 0.3200), (90.0, 0.0),
]


class LiftCurve:
    """Shape-preserving cubic interpolation of an ``(alpha, C_L)`` table."""

    def __init__(self, alpha, cl):
        alpha = np.asarray(alpha, dtype=float)
        cl = np.asarray(cl, dtype=float)
        order = np.argsort(alpha)
        self.alpha = alpha[order]
        self.cl = cl[order]
        self._interp = PchipInterpolator(self.alpha, self.cl, extrapolate=False)
        self._slope = self._interp.derivative()

    def __call__(self, alpha: float) -> float:
        a = min(max(alpha, self.alpha[0]), self.alpha[-1])
        return float(self._interp(a))

    def derivative(self, alpha: float) -> float:
        a = min(max(alpha, self.alpha[0]), self.alpha[-1])
        return float(self._slope(a))

    @classmethod
    def from_file(cls, path) -> "LiftCurve":
        """Load a two-column text table ``alpha_rad C_L``."""
        data = np.loadtxt(Path(path), comments="#", ndmin=2)
        return cls(data[:, 0], data[:, 1])


def default_lift_curve() -> LiftCurve:
    half = np.array(_DEFAULT_LIFT_HALF)
    a = np.radians(half[:, 0])
    c = half[:, 1]
    # mirror about 90 deg (C_L(pi - a) = -C_L(a)), then odd extension
    a_full = np.concatenate([a, np.pi - a[-2::-1]])
    c_full = np.concatenate([c, -c[-2::-1]])
    return LiftCurve(np.concatenate([-a_full[:0:-1], a_full]), np.concatenate([-c_full[:0:-1], c_full]))


@dataclass
class KiteParams:
    S: float = 11.0
    b_span: float = 6.0
    oswald: float = 0.7
    m: float = 1.5
    C_D0: float = 0.075
    rho: float = 1.225
    theta_p: float = 0.01
    S_t: Optional[float] = None
    g: float = GRAVITY
    rate_limit: float = 0.05
    steer_limit: float = 0.12
    aero_enabled: bool = True
    lift_curve: LiftCurve = field(default_factory=default_lift_curve, repr=False)
    steer_curve: Optional[LiftCurve] = field(default=None, repr=False)
    #: synthetic-truth steering: ``C_S`` is the antiderivative of this network
    #: (a control-derivative network referred to the tip area ``S_t``)
    steer_network: Optional[SplineNetwork] = field(default=None, repr=False)

    def __post_init__(self):
        if self.S_t is None:
            self.S_t = self.S / 10.0
        for name in ("S", "b_span", "oswald", "m", "C_D0", "rho", "S_t"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.steer_curve is None:
            self.steer_curve = self.lift_curve
        self._steer_integral = None
        if self.steer_network is not None:
            net = self.steer_network
            anti = BSpline(net.knots, net.weights, net.degree).antiderivative()
            self._steer_integral = (anti, float(anti(0.0)))

    @property
    def aspect_ratio(self) -> float:
        return self.b_span**2 / self.S

    @property
    def k(self) -> float:
        return 1.0 / (math.pi * self.aspect_ratio * self.oswald)

    def steer_force_coefficient(self, u: float) -> float:
        """Steering force coefficient referred to the projected area ``S``."""
        if self._steer_integral is not None:
            anti, c0 = self._steer_integral
            return (float(anti(u)) - c0) * self.S_t / self.S
        return self.steer_curve(u)

    def true_control_derivative_y(self, u: float) -> float:
        """Lateral control derivative referred to ``S_t`` (the estimator's scale)."""
        if self.steer_network is not None:
            return self.steer_network.output(u)
        return self.steer_curve.derivative(u) * self.S / self.S_t


@dataclass
class KiteState:
    r: np.ndarray
    r_dot: np.ndarray
    u_act: float = 0.0
    tether_len: float = 100.0
    tether_rate: float = 0.0
    turb: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def copy(self) -> "KiteState":
        return replace(self, r=self.r.copy(), r_dot=self.r_dot.copy(), turb=self.turb.copy())


def aero_frame(r, r_dot, v_w) -> np.ndarray:
    """Aerodynamic axes as the columns of a body-to-earth rotation matrix."""
    va = r_dot - v_w
    speed = math.sqrt(va @ va)
    if speed <= EPS_AIR:
        raise FrameUndefinedError(f"airspeed {speed:g} m/s: aerodynamic frame undefined")
    ex = va / speed
    ey = cross3(r, ex)
    n = math.sqrt(ey @ ey)
    if n <= 1e-9 * math.sqrt(r @ r):
        raise FrameUndefinedError("apparent wind parallel to the tether")
    ey = ey / n
    return np.column_stack([ex, ey, cross3(ex, ey)])


def attack_angle(r, aero_ez, theta_p: float) -> float:
    c = float(r @ aero_ez) / math.sqrt(r @ r)
    return math.acos(max(-1.0, min(1.0, c))) + theta_p


def aero_forces(params: KiteParams, alpha: float, u: float, va: float) -> np.ndarray:
    """Force components along ``(e_x, e_y, e_z)`` in newtons."""
    qs = 0.5 * params.rho * va * va * params.S
    cl = params.lift_curve(alpha)
    cd = params.C_D0 + params.k * cl * cl
    return np.array([-qs * cd, qs * params.steer_force_coefficient(u), qs * cl])


def wind_at(state: KiteState, wind) -> np.ndarray:
    return np.asarray(wind, dtype=float) + state.turb


def _acceleration(r, r_dot, u, params: KiteParams, v_w, tether_acc: float) -> np.ndarray:
    if params.aero_enabled:
        frame = aero_frame(r, r_dot, v_w)
        va = math.sqrt((r_dot - v_w) @ (r_dot - v_w))
        alpha = attack_angle(r, frame[:, 2], params.theta_p)
        acc = frame @ aero_forces(params, alpha, u, va) / params.m
    else:
        acc = np.zeros(3)
    acc[2] -= params.g
    rn = math.sqrt(r @ r)
    rhat = r / rn
    vr = float(r_dot @ rhat)
    v_perp2 = float(r_dot @ r_dot) - vr * vr
    # choose the radial multiplier so that d^2|r|/dt^2 equals tether_acc
    lam = tether_acc - v_perp2 / rn - float(acc @ rhat)
    return acc + lam * rhat


def constrained_acceleration(state: KiteState, params: KiteParams, wind, tether_acc: float = 0.0,
                             u: Optional[float] = None) -> np.ndarray:
    """Earth-frame acceleration including gravity and the sphere constraint."""
    u = state.u_act if u is None else u
    return _acceleration(state.r, state.r_dot, u, params, wind_at(state, wind), tether_acc)


def actuate(u_act: float, command: float, params: KiteParams, dt: float) -> float:
    """Rate limit, then magnitude saturation."""
    step = max(-params.rate_limit * dt, min(params.rate_limit * dt, command - u_act))
    return max(-params.steer_limit, min(params.steer_limit, u_act + step))


def step(state: KiteState, command_u: float, params: KiteParams, dt: float, wind) -> KiteState:
    """Advance the truth model by one fixed step.

    The actuator moves first; the new steering position is then held while
    ``(r, r_dot)`` are integrated with classical RK4.  The result is projected
    back onto the sphere of the updated tether length.
    """
    return step_with_auxiliary(state, command_u, params, dt, wind)[0]


def step_with_auxiliary(state: KiteState, command_u: float, params: KiteParams, dt: float, wind,
                        aux: float = 0.0,
                        aux_rate: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray, float], float]] = None
                        ) -> tuple[KiteState, float]:
    """:func:`step` that also integrates a scalar ``aux`` through the same RK4 stages.

    ``aux_rate(r, r_dot, r_ddot, aux)`` is evaluated at every stage.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    u = actuate(state.u_act, command_u, params, dt)
    v_w = wind_at(state, wind)

    def deriv(r, rd, y):
        acc = _acceleration(r, rd, u, params, v_w, 0.0)
        return rd, acc, (aux_rate(r, rd, acc, y) if aux_rate is not None else 0.0)

    r0, v0 = state.r, state.r_dot
    k1r, k1v, k1a = deriv(r0, v0, aux)
    k2r, k2v, k2a = deriv(r0 + 0.5 * dt * k1r, v0 + 0.5 * dt * k1v, aux + 0.5 * dt * k1a)
    k3r, k3v, k3a = deriv(r0 + 0.5 * dt * k2r, v0 + 0.5 * dt * k2v, aux + 0.5 * dt * k2a)
    k4r, k4v, k4a = deriv(r0 + dt * k3r, v0 + dt * k3v, aux + dt * k3a)
    r1 = r0 + dt / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
    v1 = v0 + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    aux1 = aux + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)

    length = state.tether_len + state.tether_rate * dt
    rhat = r1 / math.sqrt(r1 @ r1)
    r1 = length * rhat
    v1 = v1 - (v1 @ rhat) * rhat + state.tether_rate * rhat
    return KiteState(r1, v1, u, length, state.tether_rate, state.turb.copy()), aux1


def turbulence_step(turb, sigma: float, delta: float, dt: float, rng: np.random.Generator) -> np.ndarray:
    """First-order Gauss-Markov update of the three gust components."""
    if sigma < 0.0 or delta <= 0.0:
        raise ValueError("need sigma >= 0 and delta > 0")
    xi = rng.standard_normal(3)
    return np.asarray(turb) * (1.0 - delta * dt) + sigma * math.sqrt(2.0 * delta * dt) * xi


@dataclass(frozen=True)
class NoiseLevels:
    """Standard deviations of the additive measurement noise."""

    position: float = 2.5
    velocity: float = 0.02
    acceleration: float = 0.02
    airspeed: float = 0.9
    attitude_deg: float = 1.0

    def scaled(self, factor: float) -> "NoiseLevels":
        return NoiseLevels(*(factor * x for x in (self.position, self.velocity, self.acceleration,
                                                  self.airspeed, self.attitude_deg)))


class SensorReading(NamedTuple):
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    airspeed: float
    attitude: np.ndarray
    u_act: float


def read_sensors(state: KiteState, accel, params: KiteParams, wind,
                 noise: Optional[NoiseLevels] = None,
                 rng: Optional[np.random.Generator] = None) -> SensorReading:
    """Measure the truth state, optionally adding Gaussian noise.

    The attitude is the aerodynamic frame (the point-mass model's only
    kite-fixed frame).  Attitude noise is a random rotation whose rotation
    vector has independent Gaussian components.
    """
    v_w = wind_at(state, wind)
    attitude = aero_frame(state.r, state.r_dot, v_w)
    airspeed = float(np.linalg.norm(state.r_dot - v_w))
    pos, vel, acc = state.r.copy(), state.r_dot.copy(), np.array(accel, dtype=float)
    if noise is not None:
        if rng is None:
            raise ValueError("noisy sensors need an rng")
        pos = pos + noise.position * rng.standard_normal(3)
        vel = vel + noise.velocity * rng.standard_normal(3)
        acc = acc + noise.acceleration * rng.standard_normal(3)
        airspeed = airspeed + noise.airspeed * float(rng.standard_normal())
        rotvec = math.radians(noise.attitude_deg) * rng.standard_normal(3)
        attitude = Rotation.from_rotvec(rotvec).as_matrix() @ attitude
    return SensorReading(pos, vel, acc, airspeed, attitude, state.u_act)


def mechanical_energy(state: KiteState, params: KiteParams) -> float:
    return 0.5 * params.m * float(state.r_dot @ state.r_dot) + params.m * params.g * float(state.r[2])

