"""Adaptive turning-angle trajectory tracking for tethered kites.

Submodules:

* :mod:`kitetrack.sphere`: coordinate patch, tangent frame, turning angle, geodesics
* :mod:`kitetrack.spline`: B-spline networks for control derivatives
* :mod:`kitetrack.dynamics`: point-mass kite on a sphere, turbulence, sensors
* :mod:`kitetrack.trajectory`: projected kinematics, control coefficients, figure-eight reference
* :mod:`kitetrack.controller`: outer and inner loop, estimator, actuator-limit filter
* :mod:`kitetrack.experiment`: closed-loop runs, sweeps, noise studies and their outputs
"""
from .config import RunConfig
from .controller import Gains, TrackingController
from .dynamics import KiteParams, KiteState, NoiseLevels
from .experiment import run_noise_study, run_single, run_sweep
from .sphere import SpherePoint
from .spline import SplineNetwork
from .trajectory import ReferenceTrajectory, figure_eight

__all__ = [
    "Gains", "KiteParams", "KiteState", "NoiseLevels", "ReferenceTrajectory", "RunConfig", "SpherePoint",
    "SplineNetwork", "TrackingController", "figure_eight", "run_noise_study", "run_single", "run_sweep",
]
__version__ = "0.1.0"
