"""Growth quantities of the internally tangent disk family D(r, 1-r).

F(r) is the exponential of the normalized mass of log(1/(1-|z|^2)) on the
disk of radius 1-r centered at r (tangent to the unit circle at z = 1);
it grows like (1-r)^(-4/pi) as r -> 1.  From it derives the constant

    c_{p,alpha} = { int_0^1 [(1-r^2) F(r)]^(2 alpha p/(1-p)) dr }^(1-p),

finite exactly for p < pi/(pi + 2 alpha (4-pi)), which bounds radial
p-lengths of weights with the corresponding curvature property and yields
the containment D(t) in the metric ball of radius c_{1/2,alpha} sqrt(t).
"""

import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DomainError
from .geodesics import radial_distance
from .report import VerificationReport

#: exponent of (1-r^2) F(r) as r -> 1
GROWTH_EXPONENT = 1.0 - 4.0 / math.pi

#: endpoint window replaced by its analytic power-law tail
TAIL_DELTA = 1e-4

#: boundary margin (in grid cells) allowed by the containment check
CONTAINMENT_MARGIN_CELLS = 2.0

#: the containment constant is defined for alpha below this threshold
ALPHA_MAX = math.pi / (8.0 - 2.0 * math.pi)


def _check_r(r):
    if not 0.0 < r < 1.0:
        raise DomainError("r must lie in (0, 1)")


def log_big_f_polar(r):
    """log F(r) via the polar arc-length formula.

    The circle |z| = s meets D(r, 1-r) in the arc |theta| <= theta*(s) with
    cos theta*(s) = (s^2 + r^2 - (1-r)^2)/(2 r s), so the disk integral
    reduces to a 1-D integral of 2 theta*(s) s log(1/(1-s^2)) / pi.
    """
    _check_r(r)

    def integrand(s):
        c = (s * s + r * r - (1.0 - r) ** 2) / (2.0 * r * s)
        theta = math.acos(min(1.0, max(-1.0, c)))
        return -2.0 * theta * s * math.log1p(-s * s) / math.pi

    lo = max(0.0, 2.0 * r - 1.0)
    val, _ = quad(integrand, lo, 1.0, limit=400, points=[lo, 1.0])
    return val / (1.0 - r) ** 2


def log_big_f_disk(r):
    """log F(r) via polar coordinates about the center r.

    The angular mean of log(1/(1-|r + rho e^{i phi}|^2)) has the closed form
    -log[(a + sqrt(a^2-b^2))/2] with a = 1 - r^2 - rho^2, b = 2 r rho,
    leaving an adaptive 1-D radial integral.  Independent of the polar
    route above, which makes the two mutual cross-checks.
    """
    _check_r(r)

    def integrand(rho):
        a = 1.0 - r * r - rho * rho
        # a^2 - b^2 = (1-(r+rho)^2)(1-(r-rho)^2)
        q = math.sqrt(max(0.0, (1.0 - (r + rho) ** 2) * (1.0 - (r - rho) ** 2)))
        return -2.0 * rho * math.log(0.5 * (a + q))

    val, _ = quad(integrand, 0.0, 1.0 - r, limit=400, points=[1.0 - r])
    return val / (1.0 - r) ** 2


def big_f(r, method="auto"):
    """F(r) = exp{(1-r)^{-2} int_{D(r,1-r)} log(1/(1-|z|^2)) dSigma}."""
    _check_r(r)
    if method == "auto":
        method = "polar" if r > 0.5 else "disk"
    if method == "polar":
        return math.exp(log_big_f_polar(r))
    if method == "disk":
        return math.exp(log_big_f_disk(r))
    raise ValueError(f"unknown method {method!r}")


def log_ratio(r):
    """log F(r) / log(1/(1-r)); bounded by 4/pi + eps for r near 1."""
    _check_r(r)
    return log_big_f_polar(r) / math.log(1.0 / (1.0 - r))


def divergence_threshold(alpha):
    """Largest p for which c_{p, alpha} is finite: pi/(pi + 2 alpha(4-pi))."""
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    return math.pi / (math.pi + 2.0 * alpha * (4.0 - math.pi))


def c_p_alpha(p, alpha):
    """The constant c_{p, alpha}; math.inf when the integral diverges.

    The integrand [(1-r^2) F(r)]^beta with beta = 2 alpha p / (1-p) behaves
    like (1-r)^(beta (1 - 4/pi)) at the endpoint; the window (1-delta, 1)
    is integrated analytically from that power law, and the integral is
    flagged divergent when the endpoint exponent is <= -1.
    """
    if not 0.0 < p < 1.0:
        raise DomainError("p must lie in (0, 1)")
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    if alpha == 0.0:
        return 1.0
    beta = 2.0 * alpha * p / (1.0 - p)
    exponent = beta * GROWTH_EXPONENT
    if exponent <= -1.0:
        return math.inf

    def integrand(r):
        return ((1.0 - r * r) * big_f(r)) ** beta

    edge = 1.0 - TAIL_DELTA
    body = quad(integrand, 0.0, edge, limit=400, points=[0.5, edge],
                full_output=1)[0]
    tail = integrand(edge) * TAIL_DELTA / (exponent + 1.0)
    return (body + tail) ** (1.0 - p)


def radial_p_length(w, p):
    """int_0^1 w(r)^p dr along the radius; math.inf when it diverges.

    Divergence is detected from the local power-law exponent of w(r)^p at
    r -> 1 (Richardson-style endpoint extrapolation); a convergent endpoint
    gets an analytic power-law tail on the last 10^-6 window.
    """
    if not 0.0 < p <= 1.0:
        raise DomainError("p must lie in (0, 1]")

    def f(r):
        return float(w.value(r)) ** p

    eps = np.array([1e-4, 1e-5, 1e-6])
    vals = np.array([f(1.0 - e) for e in eps])
    # local exponent q with f(1-e) ~ e^(-q)
    qs = np.log(vals[1:] / vals[:-1]) / np.log(eps[:-1] / eps[1:])
    q = float(qs[-1])
    # the extrapolated exponent of a borderline-divergent integrand sits
    # O(eps) below 1, so leave the threshold some slack
    if q >= 0.999:
        return math.inf
    delta = eps[-1]
    body, _ = quad(f, 0.0, 1.0 - delta, limit=400, points=[1.0 - delta])
    tail = f(1.0 - delta) * delta / (1.0 - q) if q > 0 else f(1.0 - delta) * delta
    return float(body + tail)


def containment_radius(w, alpha, t):
    """Euclidean radius rho* with metric distance d(0, rho*) = c sqrt(t),
    c = c_{1/2, alpha}; returns 1.0 if the target exceeds the radial length."""
    target = c_p_alpha(0.5, alpha) * math.sqrt(t)
    hi = 1.0 - 1e-9
    if radial_distance(w, hi) <= target:
        return 1.0
    return float(brentq(lambda r: radial_distance(w, r) - target, 0.0, hi))


def containment_check(snapshot, w, alpha):
    """Check that the flow domain stays inside the metric ball of radius
    c_{1/2, alpha} sqrt(t) about the origin (Euclidean disk for radial w).

    Not applicable for non-radial weights, for alpha outside
    [0, pi/(8-2 pi)), or when the weight fails the curvature condition.
    """
    report = VerificationReport()
    name = "containment"
    if not w.is_radial:
        report.add(name, "not-applicable")
        return report
    if not 0.0 <= alpha < ALPHA_MAX:
        report.add(name, "not-applicable")
        return report
    from .surface import hyperbolicity_margin

    rs = np.linspace(0.0, 1.0 - 1e-6, 512)
    margin = float(np.min(hyperbolicity_margin(w, alpha, rs)))
    if margin < -1e-8:
        report.add(name, "not-applicable")
        return report
    rho_star = containment_radius(w, alpha, snapshot.t)
    radius = float(np.max(np.hypot(snapshot.boundary[:, 0], snapshot.boundary[:, 1])))
    tol = CONTAINMENT_MARGIN_CELLS * snapshot.h
    report.add_bound(
        name, radius - rho_star, tol, n=snapshot.n, h=snapshot.h
    )
    return report


def tangent_disk_switch_radius(z, tol=1e-12):
    """Largest r with z in D(r, 1-r), located by bisection on membership.

    Membership of z in D(r, 1-r) is monotone decreasing in r, so the
    indicator integral int_0^1 (1-r)^{-2} chi_{D(r,1-r)}(z) dr equals
    r*/(1 - r*) with r* this switch radius.
    """
    z = complex(z)
    if abs(z) >= 1.0:
        raise DomainError("z must be interior")

    def member(r):
        return abs(z - r) < 1.0 - r

    if not member(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if member(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def tangent_disk_density(z):
    """Closed form of the indicator integral: (1-|z|^2)/|1-z|^2."""
    z = complex(z)
    return (1.0 - abs(z) ** 2) / abs(1.0 - z) ** 2


def balayage_integral(w):
    """int w(z) (1-|z|^2)/|1-z|^2 dSigma for a radial weight.

    The angular mean of 1/|1 - s e^{i theta}|^2 is 1/(1-s^2) exactly, so
    the integral collapses to int_0^1 2 s w(s) ds; it equals 1 for weights
    reproducing at the origin.
    """
    if not w.is_radial:
        raise DomainError("balayage_integral requires a radial weight")
    val, _ = quad(lambda s: 2.0 * s * float(w.value(s)), 0.0, 1.0, limit=200)
    return float(val)
