"""Geodesics of the conformal metric w |dz|^2.

The geodesic equation for a curve gamma parameterized proportionally to
arc length reads

    gamma'' + (1/w)(dw/dz)(gamma) [gamma']^2 = 0,

a second-order complex ODE integrated here with classic fixed-step RK4.
Along an exact solution the metric speed w(gamma)|gamma'|^2 is constant.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import DomainError

DEFAULT_STEP = 1e-3

#: shooting halts when the path reaches |z| > 1 - BOUNDARY_MARGIN * step
BOUNDARY_MARGIN = 10.0


@dataclass(frozen=True)
class GeodesicPath:
    """Polyline with per-node velocity and metric speed."""

    times: np.ndarray
    points: np.ndarray  # complex positions
    velocities: np.ndarray  # complex gamma'
    metric_speed: np.ndarray  # w(gamma) |gamma'|^2
    step: float
    weight: str
    truncated: bool = field(default=False)

    def __len__(self):
        return len(self.points)


def _acceleration(w, z, v):
    return -(w.d_z(z) / w.value(z)) * v * v


def shoot(w, start, direction, length, step=DEFAULT_STEP):
    """Integrate the geodesic from ``start`` with unit Euclidean speed.

    Returns the path up to parameter ``length``; if the path approaches the
    unit circle the integration stops early and the path is flagged
    truncated.
    """
    start = complex(start)
    if abs(start) >= 1.0:
        raise DomainError("geodesic start must be interior")
    direction = complex(direction)
    if direction == 0:
        raise DomainError("direction must be nonzero")
    direction /= abs(direction)

    n_steps = max(1, int(round(length / step)))
    points = np.empty(n_steps + 1, dtype=complex)
    velocities = np.empty(n_steps + 1, dtype=complex)
    z, v = start, direction
    points[0], velocities[0] = z, v
    cutoff = 1.0 - BOUNDARY_MARGIN * step
    truncated = False
    k = 0
    for k in range(1, n_steps + 1):
        k1z, k1v = v, _acceleration(w, z, v)
        k2z, k2v = v + 0.5 * step * k1v, _acceleration(
            w, z + 0.5 * step * k1z, v + 0.5 * step * k1v
        )
        k3z, k3v = v + 0.5 * step * k2v, _acceleration(
            w, z + 0.5 * step * k2z, v + 0.5 * step * k2v
        )
        k4z, k4v = v + step * k3v, _acceleration(w, z + step * k3z, v + step * k3v)
        z = z + (step / 6.0) * (k1z + 2 * k2z + 2 * k3z + k4z)
        v = v + (step / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        points[k], velocities[k] = z, v
        if abs(z) > cutoff:
            truncated = True
            break
    n = k + 1
    points, velocities = points[:n], velocities[:n]
    speed = np.real(w.value(points)) * np.abs(velocities) ** 2
    return GeodesicPath(
        times=step * np.arange(n),
        points=points,
        velocities=velocities,
        metric_speed=speed,
        step=step,
        weight=w.describe(),
        truncated=truncated,
    )


def geodesic_residual(w, path):
    """Max norm of the geodesic equation over interior nodes of a path,
    with gamma'' from centered second differences."""
    if len(path) < 3:
        raise DomainError("residual needs a path with at least 3 nodes")
    p = path.points
    h = path.step
    second = (p[2:] - 2.0 * p[1:-1] + p[:-2]) / h ** 2
    first = (p[2:] - p[:-2]) / (2.0 * h)
    mid = p[1:-1]
    res = second + (w.d_z(mid) / w.value(mid)) * first ** 2
    return float(np.max(np.abs(res)))


def circle_residual(w, rho):
    """Analytic geodesic-equation residual of the circle |z| = rho.

    For radial w the circle parameterization reduces the equation to
    rho |1 + w0'(rho^2) rho^2 / w0(rho^2)|, which vanishes exactly at the
    radii reported by the geodesic-circle root finder.
    """
    if not w.is_radial:
        raise DomainError("circle residual requires a radial weight")
    u = rho ** 2
    w0, w0p, _ = w.profile(np.asarray(u, dtype=float))
    return float(rho * np.abs(1.0 + w0p * u / w0))


def radial_distance(w, r):
    """Metric length of the radial segment [0, r]: int_0^r sqrt(w0(s^2)) ds.

    For radial metrics this is the geodesic distance from the origin.
    """
    if not w.is_radial:
        raise DomainError("radial_distance requires a radial weight")
    if not 0.0 <= r < 1.0:
        raise DomainError("r must lie in [0, 1)")
    if r == 0.0:
        return 0.0
    val, _ = quad(lambda s: np.sqrt(float(w.value(s))), 0.0, r, limit=200)
    return float(val)
