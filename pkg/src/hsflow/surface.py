"""Conformal weights on the unit disk and their differential geometry.

A weight w > 0 defines the metric ds^2 = w(z) |dz|^2.  Each family exposes
the value, the Wirtinger derivative dw/dz, and Delta log w in closed form
(tables fall back to spline derivatives), which is what the curvature,
the log-subharmonicity margins, and the geodesic integrator need.

Laplacian convention: Delta = d^2/(dz dzbar) = (1/4)(d_xx + d_yy).
"""

import csv

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.optimize import brentq

from .errors import DomainError, InvalidWeightError

ROOT_SCAN_PANELS = 10_000
ROOT_TOL = 1e-10


class ConformalWeight:
    """Base class; subclasses are immutable after construction."""

    name = "weight"
    is_radial = False

    def value(self, z):
        raise NotImplementedError

    def d_z(self, z):
        """Wirtinger derivative dw/dz."""
        raise NotImplementedError

    def lap_log(self, z):
        """Delta log w."""
        raise NotImplementedError

    def __call__(self, z):
        return self.value(z)

    def params(self):
        return {}

    def describe(self):
        items = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{self.name}({items})"


class RadialWeight(ConformalWeight):
    """Weight of the form w(z) = w0(|z|^2) with a smooth radial profile.

    Subclasses supply profile(u) -> (w0, w0', w0'') for u = |z|^2.
    """

    is_radial = True

    def profile(self, u):
        raise NotImplementedError

    def value(self, z):
        u = np.abs(np.asarray(z, dtype=complex)) ** 2
        w0, _, _ = self.profile(u)
        return w0 if np.ndim(w0) else float(w0)

    def d_z(self, z):
        z = np.asarray(z, dtype=complex)
        u = np.abs(z) ** 2
        _, w0p, _ = self.profile(u)
        val = w0p * np.conj(z)
        return val if val.ndim else complex(val)

    def lap_log(self, z):
        # Delta log w = (w Delta w - |dw/dz|^2) / w^2 with, for radial w,
        # Delta w = w0'' u + w0' and |dw/dz|^2 = w0'^2 u.
        u = np.abs(np.asarray(z, dtype=complex)) ** 2
        w0, w0p, w0pp = self.profile(u)
        val = ((w0pp * u + w0p) * w0 - w0p ** 2 * u) / w0 ** 2
        return val if np.ndim(val) else float(val)


class FlatWeight(RadialWeight):
    """w = c (the Euclidean metric scaled by c)."""

    name = "flat"

    def __init__(self, c=1.0):
        if c <= 0:
            raise InvalidWeightError("flat weight requires c > 0")
        self.c = float(c)

    def profile(self, u):
        u = np.asarray(u, dtype=float)
        return (
            np.full_like(u, self.c),
            np.zeros_like(u),
            np.zeros_like(u),
        )

    def params(self):
        return {"c": self.c}


class PoincareWeight(RadialWeight):
    """w = c / (1-|z|^2)^2; constant curvature -4/c."""

    name = "poincare"

    def __init__(self, c=4.0):
        if c <= 0:
            raise InvalidWeightError("poincare weight requires c > 0")
        self.c = float(c)

    def profile(self, u):
        one = 1.0 - np.asarray(u, dtype=float)
        return (
            self.c / one ** 2,
            2.0 * self.c / one ** 3,
            6.0 * self.c / one ** 4,
        )

    def params(self):
        return {"c": self.c}


class PowerWeight(RadialWeight):
    """w = scale * (1-|z|^2)^(2 alpha); alpha may be negative."""

    name = "power"

    def __init__(self, alpha, scale=1.0):
        if scale <= 0:
            raise InvalidWeightError("power weight requires scale > 0")
        self.alpha = float(alpha)
        self.scale = float(scale)

    def profile(self, u):
        one = 1.0 - np.asarray(u, dtype=float)
        a, s = self.alpha, self.scale

        def term(coeff, expo):
            if coeff == 0.0:
                return np.zeros_like(one)
            with np.errstate(divide="ignore"):
                return coeff * one ** expo

        return (
            term(s, 2 * a),
            term(-2.0 * a * s, 2 * a - 1),
            term(2.0 * a * (2 * a - 1) * s, 2 * a - 2),
        )

    def params(self):
        return {"alpha": self.alpha, "scale": self.scale}


class Example7Weight(RadialWeight):
    """w = c/(1-|z|^2)^2 + (1-|z|^2)^(2 alpha): complete, and for small c
    it carries circles that are geodesics."""

    name = "example7"

    def __init__(self, c, alpha):
        if c <= 0 or alpha <= 0:
            raise InvalidWeightError("example7 weight requires c > 0, alpha > 0")
        self.c = float(c)
        self.alpha = float(alpha)

    def profile(self, u):
        one = 1.0 - np.asarray(u, dtype=float)
        c, a = self.c, self.alpha
        w0 = c / one ** 2 + one ** (2 * a)
        w0p = 2.0 * c / one ** 3 - 2.0 * a * one ** (2 * a - 1)
        w0pp = 6.0 * c / one ** 4 + 2.0 * a * (2 * a - 1) * one ** (2 * a - 2)
        return w0, w0p, w0pp

    def params(self):
        return {"c": self.c, "alpha": self.alpha}


class TableWeight(ConformalWeight):
    """Weight sampled on a uniform grid over [-1,1]^2 (NaN outside the disk),
    evaluated by bicubic interpolation.

    Derivative access comes from the spline, so curvature and geodesics work
    but with lower accuracy than the analytic families, especially near the
    mask edge where samples are extrapolated from the nearest valid node.
    """

    name = "table"

    def __init__(self, samples):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 2:
            raise InvalidWeightError("table weight requires a 2-D sample grid")
        finite = np.isfinite(samples)
        if not finite.any():
            raise InvalidWeightError("table weight has no finite samples")
        if np.any(samples[finite] <= 0):
            raise InvalidWeightError("table weight samples must be positive")
        filled = _fill_nearest(samples)
        nx, ny = samples.shape
        xs = np.linspace(-1.0, 1.0, nx)
        ys = np.linspace(-1.0, 1.0, ny)
        self._spline = RectBivariateSpline(xs, ys, filled, kx=3, ky=3)
        self.shape = samples.shape

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header = [v for v in rows[0] if v.strip()]
        nx, ny = int(header[0]), int(header[1])
        flat = [float(v) for row in rows[1:] for v in row if v.strip()]
        if len(flat) != nx * ny:
            raise InvalidWeightError(
                f"table weight CSV promises {nx}x{ny} samples, got {len(flat)}"
            )
        return cls(np.array(flat).reshape(nx, ny))

    def _eval(self, z, dx=0, dy=0):
        z = np.asarray(z, dtype=complex)
        vals = self._spline(z.real.ravel(), z.imag.ravel(), dx=dx, dy=dy, grid=False)
        return vals.reshape(z.shape)

    def value(self, z):
        val = self._eval(z)
        if np.any(val <= 0):
            raise InvalidWeightError("interpolated table weight is nonpositive")
        return val if val.ndim else float(val)

    def d_z(self, z):
        val = 0.5 * (self._eval(z, dx=1) - 1j * self._eval(z, dy=1))
        return val if val.ndim else complex(val)

    def lap_log(self, z):
        w = self._eval(z)
        wx = self._eval(z, dx=1)
        wy = self._eval(z, dy=1)
        lap_w = 0.25 * (self._eval(z, dx=2) + self._eval(z, dy=2))
        val = (lap_w * w - 0.25 * (wx ** 2 + wy ** 2)) / w ** 2
        return val if np.ndim(val) else float(val)


class PullbackWeight(ConformalWeight):
    """Pull-back of a weight through the disk involution
    phi(z) = (z0 - z)/(1 - conj(z0) z): w~(z) = w(phi(z)) |phi'(z)|^2.

    Curvature is preserved pointwise: kappa~(z) = kappa(phi(z)).
    """

    name = "pullback"

    def __init__(self, base, z0):
        z0 = complex(z0)
        if abs(z0) >= 1.0:
            raise DomainError("pullback basepoint must be interior")
        self.base = base
        self.z0 = z0
        self.is_radial = base.is_radial and z0 == 0

    def map_point(self, z):
        z = np.asarray(z, dtype=complex)
        val = (self.z0 - z) / (1.0 - np.conj(self.z0) * z)
        return val if val.ndim else complex(val)

    def _dphi(self, z):
        return (abs(self.z0) ** 2 - 1.0) / (1.0 - np.conj(self.z0) * z) ** 2

    def _ddphi(self, z):
        return (
            2.0
            * np.conj(self.z0)
            * (abs(self.z0) ** 2 - 1.0)
            / (1.0 - np.conj(self.z0) * z) ** 3
        )

    def value(self, z):
        z = np.asarray(z, dtype=complex)
        val = self.base.value(self.map_point(z)) * np.abs(self._dphi(z)) ** 2
        return val if np.ndim(val) else float(val)

    def d_z(self, z):
        z = np.asarray(z, dtype=complex)
        phi = self.map_point(z)
        dphi = self._dphi(z)
        val = self.base.d_z(phi) * dphi * np.abs(dphi) ** 2 + self.base.value(
            phi
        ) * self._ddphi(z) * np.conj(dphi)
        return val if np.ndim(val) else complex(val)

    def lap_log(self, z):
        # log |phi'|^2 is harmonic, so only the composed term survives.
        z = np.asarray(z, dtype=complex)
        val = np.abs(self._dphi(z)) ** 2 * self.base.lap_log(self.map_point(z))
        return val if np.ndim(val) else float(val)

    def params(self):
        return {"base": self.base.describe(), "z0": self.z0}


def _fill_nearest(samples):
    """Replace NaN samples by the nearest finite one (mask-edge fallback)."""
    from scipy.ndimage import distance_transform_edt

    filled = samples.copy()
    invalid = ~np.isfinite(samples)
    if invalid.any():
        _, idx = distance_transform_edt(invalid, return_indices=True)
        filled[invalid] = samples[tuple(i[invalid] for i in idx)]
    return filled


_FAMILIES = {
    "flat": lambda p: FlatWeight(p.get("c", 1.0)),
    "poincare": lambda p: PoincareWeight(p.get("c", 4.0)),
    "power": lambda p: PowerWeight(p["alpha"], p.get("scale", 1.0)),
    "example7": lambda p: Example7Weight(p["c"], p["alpha"]),
    "table": lambda p: TableWeight.from_csv(p["path"]),
}


def make_weight(family, **params):
    """Construct a weight by family name; used by the CLI and configs."""
    try:
        builder = _FAMILIES[family]
    except KeyError:
        raise InvalidWeightError(f"unknown weight family {family!r}") from None
    return builder(params)


def eval_weight(w, z):
    """Evaluate the weight; raises InvalidWeightError on nonpositive values."""
    val = w.value(z)
    if np.any(np.asarray(val) <= 0):
        raise InvalidWeightError("weight must be positive")
    return val


def curvature(w, z):
    """Gaussian curvature kappa = -(2/w) Delta log w."""
    return -2.0 * w.lap_log(z) / w.value(z)


def hyperbolicity_margin(w, alpha, z):
    """Delta log [w / (1-|z|^2)^(2 alpha)].

    Nonnegative exactly where the curvature condition
    K + alpha K_hyperbolic <= 0 holds.
    """
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    eval_weight(w, z)
    u = np.abs(np.asarray(z, dtype=complex)) ** 2
    val = w.lap_log(z) + 2.0 * alpha / (1.0 - u) ** 2
    return val if np.ndim(val) else float(val)


def geodesic_circle_expression(c, alpha, r):
    """w0(r) + r w0'(r) for the example7(c, alpha) profile, in closed form:
    c (1+r)/(1-r)^3 + (1-r)^(2 alpha - 1) (1 - (1+2 alpha) r).

    Zero exactly where the circle of Euclidean radius sqrt(r) is a geodesic
    of the example7(c, alpha) metric (the variable is r = |z|^2).
    """
    r = np.asarray(r, dtype=float)
    one = 1.0 - r
    val = c * (1.0 + r) / one ** 3 + one ** (2 * alpha - 1) * (
        1.0 - (1.0 + 2.0 * alpha) * r
    )
    return val if val.ndim else float(val)


def geodesic_circle_radii(c, alpha):
    """All roots r* in (0,1) of the geodesic-circle expression.

    Sign-change scan over ROOT_SCAN_PANELS panels followed by bisection to
    ROOT_TOL.  The geodesic circle has Euclidean radius sqrt(r*).
    """
    if c <= 0 or alpha <= 0:
        raise DomainError("geodesic_circle_radii requires c > 0, alpha > 0")
    rs = np.linspace(0.0, 1.0, ROOT_SCAN_PANELS + 1)[1:-1]
    vals = geodesic_circle_expression(c, alpha, rs)
    roots = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        root = brentq(
            lambda r: geodesic_circle_expression(c, alpha, r),
            rs[i],
            rs[i + 1],
            xtol=ROOT_TOL,
        )
        roots.append(float(root))
    return roots


def mobius_pullback(w, z0):
    """Pull the weight back so the construction at z0 runs at the origin."""
    return PullbackWeight(w, z0)
