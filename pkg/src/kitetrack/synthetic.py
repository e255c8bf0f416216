"""Synthetic-truth turning-angle plant for Lyapunov checks.

The plant has exactly the controller's model form,
``dtheta/dt = f(t, theta) + B(t) * du_a`` with
``B = sum_i lambda_i(t) * w_i . b(u*)`` and known true weights ``w_i``.
That makes the Lyapunov functions of the estimator computable along a run.

The loop is hybrid. The actuator position ``u*`` is held for each control
tick, and the achieved increment is added to it at the end of the tick.
Within the tick, the turning angle, the weight estimates and ``zeta`` follow
their continuous-time laws. They are integrated with fine RK4 substeps, so
the sampled Lyapunov functions inherit ``dV/dt = -K e**2`` up to the
integration error. A forward-Euler estimator would add a positive
``O(dt**2)`` term per tick instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .controller import Gains, inner_control, lyapunov_monitors, weight_rate, zeta_rate
from .spline import SplineNetwork


def _default_true_weights(net: SplineNetwork) -> np.ndarray:
    g = net.greville()
    return np.array([2.0 + 5.0 * g, 60.0 * (1.0 - 10.0 * g**2), np.full_like(g, -1.5)])


def _default_drift(t: float, theta: float) -> float:
    return 0.3 * math.sin(0.7 * t) + 0.2 * math.sin(theta) * math.cos(0.3 * t)


def _default_coefficients(t: float) -> np.ndarray:
    return np.array([0.3 * math.cos(0.4 * t), 10.0 + 2.0 * math.sin(0.3 * t), 0.5 * math.sin(0.9 * t)])


@dataclass
class SyntheticPlant:
    """Scalar turning-angle system with prescribed drift, coefficients and target."""

    network: SplineNetwork = field(default_factory=SplineNetwork.uniform)
    true_weights: Optional[np.ndarray] = None
    drift: Callable[[float, float], float] = _default_drift
    coefficients: Callable[[float], np.ndarray] = _default_coefficients
    target: Callable[[float], float] = lambda t: 0.5 * math.sin(0.5 * t)
    target_rate: Callable[[float], float] = lambda t: 0.25 * math.cos(0.5 * t)

    def __post_init__(self):
        if self.true_weights is None:
            self.true_weights = _default_true_weights(self.network)
        self.true_weights = np.asarray(self.true_weights, dtype=float)

    def effectiveness(self, t: float, u: float) -> float:
        return float(self.coefficients(t) @ (self.true_weights @ self.network.basis(u)))


@dataclass
class SyntheticRun:
    t: np.ndarray
    theta: np.ndarray
    e: np.ndarray
    e_m: np.ndarray
    zeta: np.ndarray
    V: np.ndarray
    V_m: np.ndarray
    weight_error: np.ndarray  # (ticks, 3) per-axis norms of w_hat - w
    u: np.ndarray
    limited: np.ndarray  # achieved increment differed from the command at the tick end
    gains: Gains

    def lyapunov_residual(self, modified: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Per-tick ``dV/dt + K e**2`` and its tolerance.

        The tolerance is ``max(1e-6, 5 dt |d2V/dt2|)`` with the curvature taken
        from three-point differences at both ends of the tick.
        """
        V = self.V_m if modified else self.V
        e = self.e_m if modified else self.e
        dt = self.t[1] - self.t[0]
        res = np.diff(V) / dt + self.gains.K * e[:-1] ** 2
        curv = np.zeros_like(V)
        curv[1:-1] = np.abs(V[2:] - 2.0 * V[1:-1] + V[:-2]) / dt**2
        curv[0], curv[-1] = curv[1], curv[-2]
        tol = np.maximum(1e-6, 5.0 * dt * np.maximum(curv[:-1], curv[1:]))
        return res, tol

    @property
    def estimate_bound(self) -> np.ndarray:
        """``sqrt(2 Gamma V_m)``, which bounds every per-axis weight error."""
        return np.sqrt(2.0 * self.gains.Gamma * self.V_m)


def run_synthetic(plant: Optional[SyntheticPlant] = None, gains: Gains = Gains(), dt: float = 0.01,
                  duration: float = 20.0, limits: bool = False, rate_limit: float = 0.05,
                  steer_limit: float = 0.12, initial_scale: float = 0.8, theta0: float = 0.3,
                  substeps: int = 10) -> SyntheticRun:
    """Closed loop of the inner controller and estimator on the synthetic plant.

    Without limits the achieved increment equals the command and ``zeta``
    stays 0, so ``e_m = e``. With limits the increment is clipped to
    ``rate_limit * dt`` and the position to ``steer_limit``.
    Estimates start at ``initial_scale`` times the true weights.
    """
    plant = plant or SyntheticPlant()
    w_true = plant.true_weights
    shape = w_true.shape
    n = int(round(duration / dt))
    h = dt / substeps
    t_arr = np.arange(n + 1) * dt
    cols = {k: np.zeros(n + 1) for k in ("theta", "e", "e_m", "zeta", "V", "V_m", "u")}
    werr = np.zeros((n + 1, 3))
    limited = np.zeros(n + 1, dtype=bool)

    def achieved(du: float, u_star: float) -> float:
        if not limits:
            return du
        du = max(-rate_limit * dt, min(rate_limit * dt, du))
        return max(-steer_limit, min(steer_limit, u_star + du)) - u_star

    def controls(t, y, b):
        theta, w_hat = y[0], y[2:].reshape(shape)
        lam = plant.coefficients(t)
        B_hat = float(lam @ (w_hat @ b))
        du, _ = inner_control(plant.drift(t, theta), B_hat, theta, plant.target(t),
                              plant.target_rate(t), gains.K)
        return lam, B_hat, du

    def rhs(t, y, u_star, b, B_true_fn):
        theta, zeta = y[0], y[1]
        lam, B_hat, du = controls(t, y, b)
        du_a = achieved(du, u_star)
        e_m = theta - plant.target(t) - zeta
        out = np.empty_like(y)
        out[0] = plant.drift(t, theta) + B_true_fn(t) * du_a
        out[1] = zeta_rate(zeta, gains.K, B_hat, du_a - du)
        out[2:] = weight_rate(e_m, lam, du_a, b, gains.Gamma).ravel()
        return out

    y = np.concatenate([[theta0, 0.0], (initial_scale * w_true).ravel()])
    u_star = 0.0
    for k in range(n + 1):
        t = t_arr[k]
        theta, zeta, w_hat = y[0], y[1], y[2:].reshape(shape)
        e = theta - plant.target(t)
        V, V_m = lyapunov_monitors(e, e - zeta, w_hat, w_true, gains.Gamma)
        for key, val in zip(("theta", "e", "e_m", "zeta", "V", "V_m", "u"),
                            (theta, e, e - zeta, zeta, V, V_m, u_star)):
            cols[key][k] = val
        werr[k] = np.linalg.norm(w_hat - w_true, axis=1)
        if k == n:
            break
        b = plant.network.basis(u_star)
        Wb = w_true @ b

        def B_true(s, Wb=Wb):
            return float(plant.coefficients(s) @ Wb)

        for i in range(substeps):
            s = t + i * h
            k1 = rhs(s, y, u_star, b, B_true)
            k2 = rhs(s + 0.5 * h, y + 0.5 * h * k1, u_star, b, B_true)
            k3 = rhs(s + 0.5 * h, y + 0.5 * h * k2, u_star, b, B_true)
            k4 = rhs(s + h, y + h * k3, u_star, b, B_true)
            y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _, _, du_end = controls(t + dt, y, b)
        du_a = achieved(du_end, u_star)
        limited[k] = du_a != du_end
        u_star += du_a

    return SyntheticRun(t_arr, cols["theta"], cols["e"], cols["e_m"], cols["zeta"], cols["V"],
                        cols["V_m"], werr, cols["u"], limited, gains)
