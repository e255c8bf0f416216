"""Why the latitude circles bend by tan(w).

The turning angle is measured against the horizontal field e1, whose
integral curves are the latitude circles. For the angle to stay consistent
with the heading, its rate must subtract the geodesic curvature of those
circles. A circle at elevation w has radius cos(w) and its curvature vector
has length 1/cos(w), tilted by w against the sphere's normal. Its tangential
(geodesic) part is therefore sin(w)/cos(w) = tan(w).

This script integrates the turning angle along a smooth closed path twice:
once with tan(w) and once with sin(w) as the coordinate-curve term. It then
compares both against the heading read directly from the velocity.
"""
import math

import numpy as np

from kitetrack.oracles import analytic_path
from kitetrack.sphere import geodesic_curvature, tangent_angle, turning_angle_rate
from kitetrack.trajectory import project_kinematics


def heading(t):
    pk = project_kinematics(*analytic_path(t))
    return tangent_angle(pk.gamma_dot, pk.frame)


def rate(t, theta, kg):
    pk = project_kinematics(*analytic_path(t))
    kappa = geodesic_curvature(pk.xy_dot, pk.xy_ddot)
    return turning_angle_rate(theta, kappa, kg(pk.gamma[2]), pk.speed)


def worst_gap(kg, duration=60.0, dt=0.01):
    theta = heading(0.0)
    worst = 0.0
    for k in range(int(duration / dt)):
        t = k * dt
        k1 = rate(t, theta, kg)
        k2 = rate(t + dt / 2, theta + dt / 2 * k1, kg)
        k3 = rate(t + dt / 2, theta + dt / 2 * k2, kg)
        k4 = rate(t + dt, theta + dt * k3, kg)
        theta += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        gap = (theta - heading(t + dt) + math.pi) % (2 * math.pi) - math.pi
        worst = max(worst, abs(gap))
    return worst


tan_term = worst_gap(lambda z: z / math.sqrt(1 - z * z))
sin_term = worst_gap(lambda z: z)
print(f"coordinate-curve term tan(w): worst heading gap {tan_term:.2e} rad")
print(f"coordinate-curve term sin(w): worst heading gap {sin_term:.2e} rad")

# The same conclusion from the embedding: unit-speed latitude circle at w = 0.5
w = 0.5
v = np.linspace(0.0, 2 * math.pi, 5)[:-1]
for vv in v:
    p = np.array([math.cos(w) * math.cos(vv), math.cos(w) * math.sin(vv), math.sin(w)])
    tangent = np.array([-math.sin(vv), math.cos(vv), 0.0])
    accel = -np.array([math.cos(vv), math.sin(vv), 0.0]) / math.cos(w)
    print(f"v = {vv:.2f}: geodesic curvature {accel @ np.cross(p, tangent):.6f}, "
          f"tan(w) = {math.tan(w):.6f}, sin(w) = {math.sin(w):.6f}")
