"""Exponential-map chart built from nested flow boundaries.

The chart realizes the map Phi sending the circle of radius r about the
origin onto the boundary of the flow domain of mass t = r^2, and radial
rays onto their orthogonal trajectories.  Trajectories are advanced from
one boundary to the next along the Euclidean normal (conformality makes
metric and Euclidean orthogonality agree), landing at the intersection of
the normal ray with the next boundary polyline; a transversal ray crossing
inherits the polyline's geometric accuracy, whereas nearest-point
projection can slide tangentially by a cell width.

For a basepoint z0 != 0 the construction runs on the pulled-back weight,
so the flow is always injected at the origin; points are mapped back
through the disk involution.  Near z0 the map satisfies
Phi(zeta) = z0 + O(1) zeta with |Phi'(0)| = w(z0)^{-1/2}.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ChartBuildError, DomainError
from .flow import run_flow
from .report import VerificationReport
from .surface import mobius_pullback

#: arclength half-window (in grid cells) for smoothed polyline tangents
TANGENT_WINDOW_CELLS = 3.0

#: minimum half-window as a fraction of the loop length; keeps tangent
#: fits on small loops (few cells across) from chasing vertex jitter
TANGENT_WINDOW_FRACTION = 0.05


def _loop_window(loop, h):
    return max(TANGENT_WINDOW_CELLS * h, TANGENT_WINDOW_FRACTION * loop.total)

ORTHOGONALITY_TOL_DEG = 1.0
DIRECTION_TOL_DEG = 1.0
SLOPE_TOL = 0.05


class _Loop:
    """Closed polyline with arclength parameterization."""

    def __init__(self, xy):
        pts = xy[:, 0] + 1j * xy[:, 1]
        if abs(pts[0] - pts[-1]) < 1e-14:
            pts = pts[:-1]
        keep = np.abs(np.diff(np.concatenate([pts, pts[:1]]))) > 1e-14
        self.pts = pts[keep]
        if len(self.pts) < 3:
            raise DomainError("degenerate boundary loop")
        seg = np.roll(self.pts, -1) - self.pts
        self.seg = seg
        self.lens = np.abs(seg)
        self.cum = np.concatenate([[0.0], np.cumsum(self.lens)])
        self.total = self.cum[-1]
        self.centroid = complex(np.mean(self.pts))

    def project(self, q):
        """Nearest point on the polyline: (point, arclength, distance)."""
        a, seg = self.pts, self.seg
        t = np.clip(((q - a) * np.conj(seg)).real / (self.lens ** 2), 0.0, 1.0)
        cand = a + t * seg
        k = int(np.argmin(np.abs(q - cand)))
        s = self.cum[k] + t[k] * self.lens[k]
        return complex(cand[k]), float(s), float(abs(q - cand[k]))

    def intersect_ray(self, origin, direction):
        """First intersection of the ray origin + tau*direction (tau > 0)
        with the polyline: (point, arclength, tau), or None if the ray
        misses.  A transversal intersection locates the landing point to
        the geometric accuracy of the polyline, whereas nearest-point
        projection of a point already on the curve can slide tangentially
        by a cell width."""
        rel = self.pts - origin
        den = (np.conj(direction) * self.seg).imag
        ok = np.abs(den) > 1e-14
        safe = np.where(ok, den, 1.0)
        frac = np.where(ok, -(np.conj(direction) * rel).imag / safe, np.nan)
        tau = np.where(ok, -(np.conj(self.seg) * rel).imag / safe, np.nan)
        hit = ok & (frac >= 0.0) & (frac < 1.0) & (tau > 0.0)
        if not np.any(hit):
            return None
        k = int(np.nanargmin(np.where(hit, tau, np.inf)))
        point = self.pts[k] + frac[k] * self.seg[k]
        s = self.cum[k] + frac[k] * self.lens[k]
        return complex(point), float(s), float(tau[k])

    def point_at(self, s):
        s = s % self.total
        k = int(np.searchsorted(self.cum, s, side="right") - 1)
        k = min(k, len(self.pts) - 1)
        frac = (s - self.cum[k]) / self.lens[k]
        return complex(self.pts[k] + frac * self.seg[k])

    def tangent_at(self, s, window, samples=9):
        """Principal direction of the polyline over [s-w, s+w].

        An orientation fit over several interpolated samples averages out
        the cell-scale jitter of marching-squares vertices, which a plain
        two-point chord would pass straight through to the angle checks.
        """
        offs = np.linspace(-window, window, samples)
        pts = np.array([self.point_at(s + o) for o in offs])
        q = pts - pts.mean()
        orient = np.sum(q * q)
        chord = pts[-1] - pts[0]
        if abs(chord) < 1e-14 or abs(orient) < 1e-28:
            raise DomainError("tangent window collapsed")
        tau = np.exp(0.5j * np.angle(orient))
        if (tau * np.conj(chord)).real < 0:
            tau = -tau
        return complex(tau)

    def outward_normal_at(self, s, window):
        tau = self.tangent_at(s, window)
        nrm = 1j * tau
        anchor = self.point_at(s) - self.centroid
        if (nrm * np.conj(anchor)).real < 0:
            nrm = -nrm
        return nrm


@dataclass
class ExpMapChart:
    """Image points of the polar grid r_i e^{i theta_j} under the chart."""

    z0: complex
    radii: np.ndarray
    angles: np.ndarray
    points: np.ndarray  # (n_r, n_theta) complex, ambient coordinates
    points_working: np.ndarray  # same, in the pulled-back frame
    boundaries: list  # _Loop per ring, pulled-back frame
    n: int
    h: float
    weight: str
    checks: VerificationReport = field(default_factory=VerificationReport)

    def to_json_dict(self):
        return {
            "z0": [self.z0.real, self.z0.imag],
            "radii": [float(r) for r in self.radii],
            "angles": [float(a) for a in self.angles],
            "points": [
                [float(p.real), float(p.imag)] for p in self.points.ravel()
            ],
            "checks": self.checks.to_json_list(),
        }


def build_chart(w, z0, r_max, n_r, n_theta, n, method="active_set"):
    """Construct the chart on radii r_i = r_max i / n_r, i = 1..n_r."""
    z0 = complex(z0)
    if abs(z0) >= 1.0:
        raise DomainError("basepoint must be interior")
    if n_r < 2 or n_theta < 4:
        raise DomainError("need n_r >= 2 and n_theta >= 4")
    if not 0.0 < r_max < 1.0:
        raise DomainError("r_max must lie in (0, 1)")

    wt = mobius_pullback(w, z0) if z0 != 0 else w
    radii = r_max * np.arange(1, n_r + 1) / n_r
    snapshots = run_flow(wt, radii ** 2, n, method=method)
    loops = [_Loop(s.boundary) for s in snapshots]
    h = snapshots[0].h

    angles = 2.0 * np.pi * np.arange(n_theta) / n_theta
    pts = np.empty((n_r, n_theta), dtype=complex)
    for j, th in enumerate(angles):
        hit = loops[0].intersect_ray(0.0, np.exp(1j * th))
        if hit is None:
            raise ChartBuildError(
                f"innermost boundary misses the ray at angle {th:.4f}",
                ring=0,
                angle=float(th),
            )
        pts[0, j] = hit[0]
    for i in range(n_r - 1):
        for j in range(n_theta):
            p = pts[i, j]
            _, s, _ = loops[i].project(p)
            nrm = loops[i].outward_normal_at(s, _loop_window(loops[i], h))
            _, _, gap = loops[i + 1].project(p)
            hit = loops[i + 1].intersect_ray(p, nrm)
            if hit is None or hit[2] > gap + max(2.0 * h, 0.6 * gap):
                raise ChartBuildError(
                    f"trajectory lost between rings {i + 1} and {i + 2} "
                    f"at angle {angles[j]:.4f}",
                    ring=i + 1,
                    angle=float(angles[j]),
                )
            pts[i + 1, j] = hit[0]

    if z0 != 0:
        ambient = (z0 - pts) / (1.0 - np.conj(z0) * pts)
    else:
        ambient = pts.copy()
    return ExpMapChart(
        z0=z0,
        radii=radii,
        angles=angles,
        points=ambient,
        points_working=pts,
        boundaries=loops,
        n=n,
        h=h,
        weight=w.describe(),
    )


def _wrap_deg(a):
    return (np.asarray(a) + 180.0) % 360.0 - 180.0


def orthogonality_angles(chart):
    """Trajectory/boundary angles (degrees) at interior ring nodes."""
    pts = chart.points_working
    n_r = pts.shape[0]
    out = []
    for i in range(1, n_r - 1):
        loop = chart.boundaries[i]
        window = _loop_window(loop, chart.h)
        for j in range(pts.shape[1]):
            _, s, _ = loop.project(pts[i, j])
            tau = loop.tangent_at(s, window)
            step = pts[i + 1, j] - pts[i - 1, j]
            ang = np.degrees(np.angle(step / tau))
            out.append(abs(abs(_wrap_deg(ang)) - 90.0))
    return np.asarray(out)


def crossing_violations(chart):
    """0 when the angular order of trajectories is preserved on every ring
    and no two image points coincide."""
    bad = 0
    for i in range(chart.points_working.shape[0]):
        ring = chart.points_working[i]
        args = np.angle(ring)
        order = np.argsort(args)
        rolled = np.roll(order, -int(np.argmin(order)))
        if not np.array_equal(rolled, np.arange(len(ring))):
            bad += 1
        d = np.abs(ring[:, None] - ring[None, :])
        np.fill_diagonal(d, np.inf)
        if np.min(d) <= 0.0:
            bad += 1
    return bad


def chart_checks(chart, w, slope_tol=SLOPE_TOL):
    """Verification report for the chart's defining properties."""
    report = VerificationReport()
    n, h = chart.n, chart.h

    dists = [
        chart.boundaries[i].project(p)[2]
        for i in range(chart.points_working.shape[0])
        for p in chart.points_working[i]
    ]
    report.add_bound("ring-on-boundary", float(np.max(dists)), 2.0 * h, n=n, h=h)

    ortho = orthogonality_angles(chart)
    if len(ortho):
        report.add_bound(
            "orthogonality", float(np.max(ortho)), ORTHOGONALITY_TOL_DEG, n=n, h=h
        )

    # linear fit over the two smallest rings, ambient frame
    zeta = (chart.radii[:2, None] * np.exp(1j * chart.angles)[None, :]).ravel()
    target = np.column_stack([np.ones_like(zeta), zeta])
    coef, *_ = np.linalg.lstsq(target, chart.points[:2].ravel(), rcond=None)
    intercept, slope = coef
    slope_ref = 1.0 / math.sqrt(float(np.real(w.value(chart.z0))))
    report.add_bound(
        "slope", abs(abs(slope) - slope_ref) / slope_ref, slope_tol, n=n, h=h
    )
    report.add_bound("intercept", abs(intercept - chart.z0), 2.0 * h, n=n, h=h)

    dev = _wrap_deg(np.degrees(np.angle(chart.points_working[0])) -
                    np.degrees(chart.angles))
    report.add_bound(
        "initial-direction", float(np.max(np.abs(dev))), DIRECTION_TOL_DEG, n=n, h=h
    )

    report.add_bound(
        "no-crossings", float(crossing_violations(chart)), 0.0, n=n, h=h
    )

    if w.is_radial and chart.z0 == 0:
        variances = [
            float(np.var(np.abs(ring))) for ring in chart.points_working
        ]
        report.add_bound(
            "circle-image", max(variances), (2.0 * h) ** 2, n=n, h=h
        )
    chart.checks = report
    return report


def refinement_gain(w, z0, r_max, n_r, n_theta, n):
    """Ratio of chart changes under two successive ring-count doublings;
    first-order stepping makes it >= ~2.

    Meaningful when the trajectories are genuinely curved (non-radial
    working frame): for a radial weight the image points are exact up to
    grid noise and the ratio compares noise with noise."""
    charts = [
        build_chart(w, z0, r_max, k, n_theta, n) for k in (n_r, 2 * n_r, 4 * n_r)
    ]
    base = charts[0].points_working
    mid = charts[1].points_working[1::2]
    fine = charts[2].points_working[3::4]
    e1 = float(np.max(np.abs(base - mid)))
    e2 = float(np.max(np.abs(mid - fine)))
    return e1 / e2
