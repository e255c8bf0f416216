"""Run configuration stored as a flat ``key = value`` text file.

Units are part of the key names. Lines starting with ``#`` are comments.
Keys that are not listed in the file keep their defaults.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .controller import Gains, TrackingController
from .dynamics import KiteParams, LiftCurve, NoiseLevels, default_lift_curve
from .errors import ConfigError
from .sphere import SpherePoint
from .spline import SplineNetwork
from .trajectory import BESSEL_ROOT, REFERENCE_LENGTH, REFERENCE_OFFSET, ReferenceTrajectory, figure_eight


@dataclass(frozen=True)
class RunConfig:
    # run
    duration_s: float = 40.0
    dt_s: float = 0.01
    seed: int = 0
    stop_after_cycles: float = 0.0
    output_dir: str = "runs"
    # wind along earth x
    wind_speed_m_s: float = 6.0
    turbulence_sigma_m_s: float = 0.0
    turbulence_delta_per_s: float = 0.5
    # sensors
    noise_enabled: bool = False
    noise_position_m: float = 2.5
    noise_velocity_m_s: float = 0.02
    noise_acceleration_m_s2: float = 0.02
    noise_airspeed_m_s: float = 0.9
    noise_attitude_deg: float = 1.0
    # kite
    area_m2: float = 11.0
    span_m: float = 6.0
    oswald_efficiency: float = 0.7
    mass_kg: float = 1.5
    drag_coefficient_zero: float = 0.075
    air_density_kg_m3: float = 1.225
    power_setting_rad: float = 0.01
    tip_area_m2: float = 0.0  # 0 selects area_m2 / 10
    gravity_m_s2: float = 9.81
    lift_table_path: str = ""
    steer_rate_limit_rad_s: float = 0.05
    steer_limit_rad: float = 0.12
    # tether
    tether_length_m: float = 100.0
    tether_rate_m_s: float = 0.0
    # controller
    gain_k_per_s: float = 3.0
    gain_gamma: float = 100.0
    gain_l: float = 10.0
    effectiveness_guard: float = 1e-4
    dtheta_method: str = "extrapolated"  # or "backward"
    dtheta_filter_tau_s: float = 0.0
    position_filter_tau_s: float = 5.0
    # estimator
    spline_basis_count: int = 10
    spline_degree: int = 2
    initial_weights: str = "precise"  # or "constant"
    initial_weight_constant: float = 0.5
    synthetic_truth: bool = False
    # reference and initial condition
    reference_amplitude_rad: float = BESSEL_ROOT
    reference_length: float = REFERENCE_LENGTH
    reference_offset_rad: float = REFERENCE_OFFSET
    reference_start_azimuth_rad: float = 0.0
    reference_start_elevation_rad: float = math.radians(30.0)
    reference_samples: int = 4096
    initial_speed_m_s: float = 20.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not (self.dt_s > 0.0 and math.isfinite(self.dt_s)):
            raise ConfigError("dt_s must be positive")
        if not (self.duration_s >= 0.0 and math.isfinite(self.duration_s)):
            raise ConfigError("duration_s must be non-negative")
        if self.stop_after_cycles < 0.0:
            raise ConfigError("stop_after_cycles must be non-negative")
        if self.turbulence_sigma_m_s < 0.0 or self.turbulence_delta_per_s <= 0.0:
            raise ConfigError("need turbulence_sigma_m_s >= 0 and turbulence_delta_per_s > 0")
        for name in ("noise_position_m", "noise_velocity_m_s", "noise_acceleration_m_s2",
                     "noise_airspeed_m_s", "noise_attitude_deg", "tip_area_m2",
                     "dtheta_filter_tau_s", "position_filter_tau_s", "gain_gamma", "gain_l",
                     "effectiveness_guard"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"{name} must be non-negative")
        for name in ("area_m2", "span_m", "oswald_efficiency", "mass_kg", "drag_coefficient_zero",
                     "air_density_kg_m3", "tether_length_m", "gain_k_per_s", "reference_length",
                     "steer_rate_limit_rad_s", "steer_limit_rad", "initial_speed_m_s"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive")
        if self.dtheta_method not in ("extrapolated", "backward"):
            raise ConfigError("dtheta_method must be 'extrapolated' or 'backward'")
        if self.initial_weights not in ("precise", "constant"):
            raise ConfigError("initial_weights must be 'precise' or 'constant'")
        if self.spline_degree < 0 or self.spline_basis_count < self.spline_degree + 1:
            raise ConfigError("spline_basis_count must exceed spline_degree")
        if self.reference_samples < 16:
            raise ConfigError("reference_samples must be at least 16")
        if abs(self.reference_start_elevation_rad) >= 0.5 * math.pi:
            raise ConfigError("reference start elevation must be below the pole")

    # serialization ---------------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, bool):
                txt = "true" if val else "false"
            elif isinstance(val, float):
                txt = repr(val)
            else:
                txt = str(val)
            lines.append(f"{f.name} = {txt}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, base: Optional["RunConfig"] = None) -> "RunConfig":
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, val = (part.strip() for part in line.split("=", 1))
            if key not in types:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            values[key] = _parse(key, val, types[key])
        try:
            return dataclasses.replace(base or cls(), **values)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    # model objects ---------------------------------------------------------

    def lift_curve(self) -> LiftCurve:
        if not self.lift_table_path:
            return default_lift_curve()
        try:
            return LiftCurve.from_file(self.lift_table_path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load lift table {self.lift_table_path}: {exc}") from exc

    def kite_params(self) -> KiteParams:
        params = KiteParams(
            S=self.area_m2, b_span=self.span_m, oswald=self.oswald_efficiency, m=self.mass_kg,
            C_D0=self.drag_coefficient_zero, rho=self.air_density_kg_m3, theta_p=self.power_setting_rad,
            S_t=self.tip_area_m2 or None, g=self.gravity_m_s2, rate_limit=self.steer_rate_limit_rad_s,
            steer_limit=self.steer_limit_rad, lift_curve=self.lift_curve())
        if self.synthetic_truth:
            params = dataclasses.replace(params, steer_network=synthetic_steer_network(self, params))
        return params

    def gains(self) -> Gains:
        return Gains(self.gain_k_per_s, self.gain_gamma, self.gain_l)

    def noise_levels(self) -> Optional[NoiseLevels]:
        if not self.noise_enabled:
            return None
        return NoiseLevels(self.noise_position_m, self.noise_velocity_m_s, self.noise_acceleration_m_s2,
                           self.noise_airspeed_m_s, self.noise_attitude_deg)

    def empty_network(self) -> SplineNetwork:
        return SplineNetwork.uniform(self.spline_basis_count, self.spline_degree,
                                     -self.steer_limit_rad, self.steer_limit_rad)

    def initial_networks(self, params: KiteParams) -> list[SplineNetwork]:
        """Estimator networks for the x, y and z body axes."""
        nets = [self.empty_network() for _ in range(3)]
        if self.initial_weights == "precise":
            g = nets[1].greville()
            nets[1].weights = np.array([params.true_control_derivative_y(u) for u in g])
        else:
            # the sign follows the slope of the truth steering curve
            sign = 1.0 if params.true_control_derivative_y(0.0) >= 0.0 else -1.0
            nets[1].weights = np.full(nets[1].n_basis, sign * self.initial_weight_constant)
        return nets

    def true_weights(self, params: KiteParams) -> Optional[np.ndarray]:
        """Known truth weights (synthetic-truth mode only)."""
        if params.steer_network is None:
            return None
        w = np.zeros((3, params.steer_network.n_basis))
        w[1] = params.steer_network.weights
        return w

    def reference(self) -> ReferenceTrajectory:
        start = SpherePoint(self.reference_start_azimuth_rad, self.reference_start_elevation_rad)
        return figure_eight(start, self.reference_amplitude_rad, self.reference_length,
                            self.reference_offset_rad, self.reference_samples)


def synthetic_steer_network(config: RunConfig, params: KiteParams) -> SplineNetwork:
    """Known lateral control-derivative network used as truth in synthetic mode.

    A downward parabola in ``u`` whose centre value matches the default
    steering curve's slope.
    """
    net = config.empty_network()
    base = params.steer_curve.derivative(0.0) * params.S / params.S_t
    g = net.greville() / config.steer_limit_rad
    net.weights = base * (1.0 - 0.3 * g**2)
    return net


def _parse(key: str, text: str, typ) -> object:
    typ = typ if isinstance(typ, str) else typ.__name__
    try:
        if typ == "bool":
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if typ == "int":
            return int(text)
        if typ == "float":
            val = float(text)
            if not math.isfinite(val):
                raise ValueError(text)
            return val
        return text
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None


def make_controller(config: RunConfig, params: KiteParams, reference: ReferenceTrajectory):
    """Tracking controller configured from ``config``."""
    return TrackingController(reference, config.gains(), params, config.initial_networks(params),
                              config.dtheta_filter_tau_s, config.position_filter_tau_s,
                              config.effectiveness_guard, config.dtheta_method)
