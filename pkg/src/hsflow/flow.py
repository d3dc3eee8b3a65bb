"""Flow orchestration and verification of the computed domains.

Checks cover the mean-value identity of the injection flow, inclusion
monotonicity, the discrete proxies for simple connectedness and boundary
regularity, the superharmonic-majorant bound for reproducing weights, the
reproducing inequality against the extremal weight 2(1-|z|^2), and the
boundary-density dichotomy.
"""

import numpy as np
from scipy.ndimage import label

from .errors import DomainError, EmptyDomainError, SolverFailureError
from .obstacle import extract_domain, grid_geometry, poisson_solve, sample_weight
from .quadrature import disk_nodes
from .report import VerificationReport
from .surface import eval_weight

#: threshold (degrees) for the per-vertex turning-angle cusp proxy
TURNING_ANGLE_LIMIT = 150.0

#: built-in subharmonic test functions for the reproducing inequality
TEST_FUNCTIONS = {
    "abs2": lambda z: np.abs(z) ** 2,
    "abs4": lambda z: np.abs(z) ** 4,
    "exp_re": lambda z: np.exp(z.real),
    "cauchy": lambda z: 1.0 / np.abs(1.0 - 0.5 * z),
    "re": lambda z: z.real,
}

#: nodewise hypothesis margin allowed when checking subharmonicity
SUBHARMONIC_SLACK = 1e-8

#: max mean-value residual (harmonic monomials to degree 6) for a weight
#: to count as reproducing at the origin
REPRODUCING_TOL = 1e-4

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


def run_flow(w, ts, n, method="active_set"):
    """Compute the snapshot sequence for strictly increasing times ``ts``.

    Each solve warm-starts from the previous domain (the domains are
    inclusion-monotone); solver failures are annotated with the time.
    """
    ts = [float(t) for t in ts]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise DomainError("ts must be strictly increasing")
    snapshots = []
    warm = None
    for t in ts:
        try:
            snap = extract_domain(w, t, n, warm_membership=warm, method=method)
        except (SolverFailureError, EmptyDomainError) as exc:
            raise type(exc)(f"at t={t}: {exc}") from exc
        snapshots.append(snap)
        warm = snap.membership
    return snapshots


def inclusion_monotone(snapshots):
    """Number of membership nodes lost between consecutive snapshots
    (0 means the sequence is inclusion-monotone)."""
    lost = 0
    for a, b in zip(snapshots, snapshots[1:]):
        lost += int(np.count_nonzero(a.membership & ~b.membership))
    return lost


def mean_value_residuals(snapshot, w, degree):
    """Residuals |int_{D(t)} h w dSigma - t h(0)| for h in {1} and the
    harmonic monomials Re z^k, Im z^k, 1 <= k <= degree, by masked grid
    quadrature."""
    geom = grid_geometry(snapshot.n)
    zs = geom.Z[snapshot.membership]
    wv = eval_weight(w, zs)
    cell = snapshot.h ** 2 / np.pi
    residuals = [abs(float(np.sum(wv)) * cell - snapshot.t)]
    for k in range(1, degree + 1):
        zk = zs ** k
        residuals.append(abs(float(np.sum(wv * zk.real)) * cell))
        residuals.append(abs(float(np.sum(wv * zk.imag)) * cell))
    return residuals


def _turning_angles_deg(loop):
    pts = loop
    if np.allclose(pts[0], pts[-1]):
        pts = pts[:-1]
    seg = np.diff(np.vstack([pts, pts[:1]]), axis=0)
    # drop zero-length segments (marching squares can emit duplicates)
    seg = seg[np.hypot(seg[:, 0], seg[:, 1]) > 1e-14]
    d = seg[:, 0] + 1j * seg[:, 1]
    turn = np.angle(np.roll(d, -1) / d)
    return np.degrees(np.abs(turn))


def verify_snapshot(snapshot):
    """Discrete proxies for the expected domain structure: (a) 4-connected
    membership, (b) no holes, (c) a single boundary loop, (d) bounded
    turning angles along the boundary polyline."""
    report = VerificationReport()
    n, h = snapshot.n, snapshot.h
    geom = grid_geometry(n)
    member = snapshot.membership

    _, n_comp = label(member, structure=FOUR_CONNECTED)
    report.add_bound("membership-connected", float(n_comp - 1), 0.0, n=n, h=h)

    complement = geom.mask & ~member
    _, n_comp = label(complement, structure=EIGHT_CONNECTED)
    report.add_bound("no-holes", float(n_comp - 1), 0.0, n=n, h=h)

    report.add_bound(
        "single-boundary-loop", float(len(snapshot.loops) - 1), 0.0, n=n, h=h
    )

    angles = _turning_angles_deg(snapshot.boundary)
    report.add_bound(
        "turning-angle", float(np.max(angles)), TURNING_ANGLE_LIMIT, n=n, h=h
    )
    return report


def _laplacian_fd(nu, z, step=1e-4):
    """Delta f by the 5-point stencil (Delta = d^2/dz dzbar convention)."""
    z = np.asarray(z, dtype=complex)
    total = (
        nu.value(z + step)
        + nu.value(z - step)
        + nu.value(z + 1j * step)
        + nu.value(z - 1j * step)
        - 4.0 * nu.value(z)
    )
    return np.real(total) / (4.0 * step * step)


def subharmonic_margin(nu, radius=0.998, n_radial=64, n_angular=64):
    """min of Delta [nu / (1-|z|^2)] over a sample grid; >= 0 is the
    hypothesis behind the W-estimate and the reproducing inequality."""

    class _Ratio:
        def value(self, z):
            z = np.asarray(z, dtype=complex)
            return np.real(nu.value(z)) / (1.0 - np.abs(z) ** 2)

    rs = np.linspace(0.0, radius, n_radial)
    th = np.linspace(0.0, 2.0 * np.pi, n_angular, endpoint=False)
    zs = rs[:, None] * np.exp(1j * th)[None, :]
    return float(np.min(_laplacian_fd(_Ratio(), zs)))


def reproducing_residual(nu, degree=6, n_radial=128, n_angular=256):
    """Max residual of the origin mean-value identity for nu against
    harmonic monomials up to ``degree`` (plus h = 1)."""
    z, wts = disk_nodes(n_radial, n_angular)
    nv = np.real(nu.value(z)) * wts
    worst = abs(float(np.sum(nv)) - 1.0)
    for k in range(1, degree + 1):
        zk = z ** k
        worst = max(worst, abs(float(np.sum(nv * zk.real))))
        worst = max(worst, abs(float(np.sum(nv * zk.imag))))
    return worst


def w_estimate_check(nu, n):
    """Bound on W = log|z|^2 - (potential of nu): when nu/(1-|z|^2) is
    subharmonic, W <= log|z|^2 + 3/2 - 2|z|^2 + |z|^4/2 at every node.

    The logarithms cancel, so the check compares the grid potential of nu
    with the polynomial directly; tolerance 10 h^2 (the extremal weight
    2(1-|z|^2) attains equality in the continuum).
    """
    report = VerificationReport()
    geom = grid_geometry(n)
    h = geom.h
    margin = subharmonic_margin(nu)
    if margin < -SUBHARMONIC_SLACK:
        report.add("w-estimate", "not-applicable")
        return report
    report.add_bound(
        "subharmonic-hypothesis", -margin, SUBHARMONIC_SLACK, n=n, h=h
    )
    u_nu = poisson_solve(sample_weight(nu, n))
    uu = geom.X ** 2 + geom.Y ** 2
    # W - bound = -u_nu - 3/2 + 2|z|^2 - |z|^4/2 on the mask
    diff = -u_nu.values - 1.5 + 2.0 * uu - 0.5 * uu ** 2
    residual = float(np.max(diff[geom.inside]))
    report.add_bound("w-estimate", residual, 10.0 * h * h, n=n, h=h)
    return report


def reproducing_inequality(nu, u="abs2", n_radial=128, n_angular=256):
    """For subharmonic test functions u, int u 2(1-|z|^2) dSigma is the
    smallest among weights reproducing at the origin; checks
    LHS <= int u nu dSigma + quadrature slack."""
    report = VerificationReport()
    margin = subharmonic_margin(nu)
    repro = reproducing_residual(nu)
    if margin < -SUBHARMONIC_SLACK or repro > REPRODUCING_TOL:
        report.add("reproducing-inequality", "not-applicable")
        return report
    try:
        func = TEST_FUNCTIONS[u] if isinstance(u, str) else u
    except KeyError:
        raise DomainError(f"unknown test function {u!r}") from None
    z, wts = disk_nodes(n_radial, n_angular)
    uv = func(z)
    lhs = float(np.sum(uv * 2.0 * (1.0 - np.abs(z) ** 2) * wts))
    rhs = float(np.sum(uv * np.real(nu.value(z)) * wts))
    report.add_bound(
        f"reproducing-inequality[{u if isinstance(u, str) else 'custom'}]",
        lhs - rhs,
        1e-8,
    )
    return report


def boundary_density_check(nu, n_angles=720, zero_tol=1e-8):
    """Dichotomy on the unit circle for a reproducing weight: at each
    angle either nu > 0, or nu vanishes with strictly positive
    inward-normal derivative."""
    report = VerificationReport()
    theta = 2.0 * np.pi * np.arange(n_angles) / n_angles
    zb = np.exp(1j * theta)
    try:
        vals = np.real(np.asarray(nu.value(zb), dtype=complex))
        # radial derivative 2 Re(e^{i theta} d nu/dz); inward flips the sign
        inward = -2.0 * np.real(zb * np.asarray(nu.d_z(zb), dtype=complex))
    except (ValueError, FloatingPointError, ZeroDivisionError):
        report.add("boundary-density", "not-applicable")
        return report
    if not np.all(np.isfinite(vals)) or not np.all(np.isfinite(inward)):
        report.add("boundary-density", "not-applicable")
        return report
    margin = np.where(vals > zero_tol, vals, inward)
    report.add_bound("boundary-density", -float(np.min(margin)), 0.0)
    return report
