"""Differential geometry on the upper unit hemisphere.

Coordinates are azimuth ``v`` and elevation ``w``; the patch
``p(v, w) = (cos w cos v, cos w sin v, sin w)`` covers the hemisphere
except at the pole.  The tangent frame ``(e1, e2)`` is the normalized pair
of partial derivatives of the patch; ``e1`` is horizontal and serves as the
reference field for the turning angle.

All functions are pure and operate on length-3 numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    DomainError,
    IrregularCurveError,
    PoleSingularityError,
    UndefinedDirectionError,
)

TWO_PI = 2.0 * math.pi

#: speed (on the unit sphere) below which a curve is treated as irregular
EPS_REG = 1e-6
#: minimum ``|p x q|`` for the geodesic direction / rotation to be defined
EPS_ANTIPODAL = 1e-9
#: trajectories must stay below this elevation
W_MAX = 0.5 * math.pi - 1e-3

_POLE_TOL = 1e-9
_UNIT_TOL = 1e-8


def cross3(a, b) -> np.ndarray:
    """Cross product of two 3-vectors (much cheaper than ``np.cross`` for single vectors)."""
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


class TangentFrame(NamedTuple):
    e1: np.ndarray
    e2: np.ndarray


@dataclass(frozen=True)
class SpherePoint:
    """A point of the upper hemisphere in patch coordinates."""

    v: float
    w: float

    @property
    def cartesian(self) -> np.ndarray:
        return patch_point(self.v, self.w)

    @classmethod
    def from_cartesian(cls, p) -> "SpherePoint":
        return cls(*point_coords(p))


def patch_point(v: float, w: float) -> np.ndarray:
    """Map azimuth/elevation to a unit vector in the earth frame."""
    if not (0.0 <= v < TWO_PI) or not (0.0 <= w <= 0.5 * math.pi):
        raise DomainError(f"(v, w) = ({v}, {w}) outside [0, 2pi) x [0, pi/2]")
    cw = math.cos(w)
    return np.array([cw * math.cos(v), cw * math.sin(v), math.sin(w)])


def point_coords(p) -> tuple[float, float]:
    """Inverse of :func:`patch_point` (``v`` reduced to ``[0, 2pi)``)."""
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    n = math.sqrt(x * x + y * y + z * z)
    v = math.atan2(y, x) % TWO_PI
    w = math.asin(max(-1.0, min(1.0, z / n)))
    return v, w


def tangent_basis(v: float, w: float) -> TangentFrame:
    """Orthonormal tangent frame at ``p(v, w)``.

    ``e1 = (-sin v, cos v, 0)`` and
    ``e2 = (-cos v sin w, -sin v sin w, cos w)``; ``e1 x e2`` is the point
    itself (outward normal).
    """
    if abs(w - 0.5 * math.pi) < _POLE_TOL:
        raise PoleSingularityError("tangent basis is undefined at the pole")
    sv, cv = math.sin(v), math.cos(v)
    sw, cw = math.sin(w), math.cos(w)
    return TangentFrame(np.array([-sv, cv, 0.0]), np.array([-cv * sw, -sv * sw, cw]))


def frame_at(p) -> TangentFrame:
    """Tangent frame at a unit vector, without going through angles."""
    rho = math.hypot(p[0], p[1])
    if rho < math.cos(0.5 * math.pi - _POLE_TOL):
        raise PoleSingularityError("tangent basis is undefined at the pole")
    e1 = np.array([-p[1] / rho, p[0] / rho, 0.0])
    e2 = np.array([-p[2] * e1[1], p[2] * e1[0], p[0] * e1[1] - p[1] * e1[0]])
    return TangentFrame(e1, e2)


def check_below_pole(p, w_max: float = W_MAX) -> None:
    if p[2] > math.sin(w_max):
        raise PoleSingularityError(f"elevation {math.degrees(math.asin(min(1.0, p[2]))):.4f} deg too close to the pole")


def coordinate_curvatures(w: float) -> tuple[float, float]:
    """Geodesic curvatures of the ``v``- and ``w``-coordinate curves.

    The ``v``-curves are latitude circles of radius ``cos w``; their
    geodesic curvature is ``tan w``. The ``w``-curves are meridians
    (great circles) with zero geodesic curvature.
    """
    if abs(w) > 0.5 * math.pi - _POLE_TOL:
        raise PoleSingularityError("latitude circle degenerates at the pole")
    return math.tan(w), 0.0


def geodesic_curvature(xy_dot, xy_ddot) -> float:
    """Geodesic curvature from tangent-frame velocity and acceleration."""
    xd, yd = xy_dot
    xdd, ydd = xy_ddot
    speed = math.hypot(xd, yd)
    if speed <= EPS_REG:
        raise IrregularCurveError(f"speed {speed:g} below regularity guard")
    return (xd * ydd - xdd * yd) / speed**3


def turning_angle_rate(theta: float, kappa_g: float, kg1: float, speed: float) -> float:
    """Time derivative of the turning angle with respect to ``e1``."""
    return (kappa_g - kg1 * math.cos(theta)) * speed


def tangent_angle(vec, frame: TangentFrame) -> float:
    """Angle of a tangent vector in ``(e1, e2)``, in ``(-pi, pi]``."""
    return math.atan2(float(vec @ frame.e2), float(vec @ frame.e1))


def lift_angle(angle: float, reference: float) -> float:
    """Shift ``angle`` by a multiple of 2pi so it lies nearest ``reference``."""
    return angle + TWO_PI * round((reference - angle) / TWO_PI)


@dataclass(frozen=True)
class TurningAngleState:
    """Cumulative turning angle and travelled arc length."""

    theta: float
    arc_length: float = 0.0

    @classmethod
    def from_velocity(cls, gamma, gamma_dot) -> "TurningAngleState":
        frame = frame_at(gamma)
        if np.linalg.norm(gamma_dot) <= EPS_REG:
            raise IrregularCurveError("cannot initialise turning angle at rest")
        return cls(tangent_angle(gamma_dot, frame))

    def advance(self, gamma, gamma_dot, rate: float, dt: float) -> "TurningAngleState":
        """Propagate by ``rate * dt`` and re-anchor on the measured heading.

        The prediction only selects the 2pi branch; the returned angle is the
        measured heading on that branch.  Below the regularity guard the angle
        is frozen.
        """
        speed = float(np.linalg.norm(gamma_dot))
        if speed <= EPS_REG:
            return self
        predicted = self.theta + rate * dt
        measured = tangent_angle(gamma_dot, frame_at(gamma))
        return TurningAngleState(lift_angle(measured, predicted), self.arc_length + speed * dt)


def _unit_check(*vecs) -> None:
    for x in vecs:
        if abs(float(x @ x) - 1.0) > _UNIT_TOL:
            raise DomainError("expected a unit vector")


def geodesic_distance(p, q) -> float:
    _unit_check(p, q)
    return math.acos(max(-1.0, min(1.0, float(p @ q))))


def geodesic_vector(p, q) -> np.ndarray:
    """Unit tangent at ``p`` pointing along the geodesic towards ``q``."""
    if np.linalg.norm(cross3(p, q)) < EPS_ANTIPODAL:
        raise UndefinedDirectionError("geodesic direction undefined for p = +-q")
    y = q - (q @ p) * p
    return y / np.linalg.norm(y)


def _rodrigues(axis: np.ndarray, angle: float) -> np.ndarray:
    kx, ky, kz = axis
    k = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def rotate_along_geodesic(p, q) -> np.ndarray:
    """Rotation about ``p x q`` mapping ``p`` onto ``q``.

    Its transpose carries tangent vectors at ``q`` to the tangent plane at ``p``.
    """
    axis = cross3(p, q)
    n = np.linalg.norm(axis)
    if n < EPS_ANTIPODAL:
        raise UndefinedDirectionError("rotation axis undefined for p = +-q")
    return _rodrigues(axis / n, math.atan2(n, float(p @ q)))


def transport_to(p, q, vec) -> np.ndarray:
    """Apply ``R^T`` (``R`` rotating ``p`` to ``q``) to a tangent vector at ``q``.

    Coincident points give the identity; antipodal points raise.
    """
    axis = cross3(p, q)
    n = np.linalg.norm(axis)
    if n < EPS_ANTIPODAL:
        if p @ q > 0.0:
            return np.array(vec, dtype=float)
        raise UndefinedDirectionError("transport undefined for antipodal points")
    return _rodrigues(axis / n, math.atan2(n, float(p @ q))).T @ vec


def geodesic_distance_rate(p, p_dot, q, q_dot) -> float:
    """Time derivative of ``geodesic_distance(p(t), q(t))``."""
    rot = rotate_along_geodesic(p, q)
    return -float((p_dot - rot.T @ q_dot) @ geodesic_vector(p, q))
