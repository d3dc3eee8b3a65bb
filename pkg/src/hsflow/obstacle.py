"""Obstacle-problem construction of the flow domains.

The injection potential V_t = t G(.,0) - int G(.,zeta) w(zeta) dSigma is
sampled on a uniform Cartesian grid masked to the unit disk (the integral
term is obtained as the Dirichlet solution of Delta u = w, which avoids
singular quadrature).  The smallest superharmonic majorant of V_t is then
computed as the solution of the discrete linear complementarity problem

    s >= V_t,   -Delta_h s >= 0,   (s - V_t) . (-Delta_h s) = 0,

and the flow domain D(t) is the detachment set {s - V_t > eps_detach}.

Delta_h is the 5-point stencil scaled by 1/4 (so that Delta |z|^2 = 1),
with Shortley-Weller shortened arms at the circular boundary, which keeps
the scheme second-order accurate up to the boundary.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.ndimage import binary_dilation
from scipy.optimize import brentq
from scipy.sparse.linalg import splu
from skimage.measure import find_contours

from .errors import EmptyDomainError, SolverFailureError
from .surface import eval_weight

#: default convergence threshold: max nodewise update per sweep, relative
#: to the obstacle scale
PSOR_TOL = 1e-12

PSOR_MAX_SWEEPS = 1_000_000

ACTIVE_SET_MAX_ITER = 400

#: coarsest level of the cascadic warm start
CASCADE_MIN_N = 65


@dataclass
class GridField:
    """Scalar field on the n x n grid over [-1,1]^2, masked to the disk."""

    n: int
    values: np.ndarray
    mask: np.ndarray

    @property
    def h(self):
        return 2.0 / (self.n - 1)


@dataclass
class FlowSnapshot:
    """One flow domain: membership mask, boundary polyline, diagnostics."""

    t: float
    n: int
    h: float
    eps_detach: float
    membership: np.ndarray
    boundary: np.ndarray  # (m, 2) closed polyline, x-y columns
    loops: list  # all extracted contour loops
    area_omega: float  # int_{D(t)} w dSigma
    detach_gap: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def to_json_dict(self):
        """Serialization schema; field names are a public contract."""
        return {
            "t": self.t,
            "n": self.n,
            "h": self.h,
            "eps_detach": self.eps_detach,
            "boundary": [[float(x), float(y)] for x, y in self.boundary],
            "area_omega": self.area_omega,
            "diagnostics": {
                "sweeps": self.diagnostics.get("sweeps", 0),
                "residual": self.diagnostics.get("residual", 0.0),
            },
        }


class _Geometry:
    """Masked grid geometry and the assembled operator L = -Delta_h."""

    def __init__(self, n):
        if n < 5:
            raise ValueError("grid needs at least 5 nodes per side")
        self.n = n
        h = 2.0 / (n - 1)
        self.h = h
        xs = np.linspace(-1.0, 1.0, n)
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        self.X, self.Y = X, Y
        self.Z = X + 1j * Y
        r2 = X ** 2 + Y ** 2
        self.mask = r2 <= 1.0 + 1e-12
        self.inside = r2 < 1.0 - 1e-12

        # arm-length fractions toward the 4 neighbors (1 on uniform arms)
        cross_x = np.sqrt(np.clip(1.0 - Y ** 2, 0.0, None))
        cross_y = np.sqrt(np.clip(1.0 - X ** 2, 0.0, None))
        theta = {}
        nbr_inside = {}
        shifts = {"E": (1, 0), "W": (-1, 0), "N": (0, 1), "S": (0, -1)}
        full_arm = {
            "E": (cross_x - X) / h,
            "W": (cross_x + X) / h,
            "N": (cross_y - Y) / h,
            "S": (cross_y + Y) / h,
        }
        for d, (di, dj) in shifts.items():
            nb = np.zeros_like(self.inside)
            src = self.inside
            if di == 1:
                nb[:-1, :] = src[1:, :]
            elif di == -1:
                nb[1:, :] = src[:-1, :]
            elif dj == 1:
                nb[:, :-1] = src[:, 1:]
            else:
                nb[:, 1:] = src[:, :-1]
            nbr_inside[d] = nb
            th = np.where(nb, 1.0, np.clip(full_arm[d], 1e-6, 1.0))
            theta[d] = th
        self.nbr_inside = nbr_inside

        # L = -Delta_h coefficients; Delta = (1/4)(d_xx + d_yy)
        scale = 1.0 / (4.0 * h * h)
        tE, tW, tN, tS = theta["E"], theta["W"], theta["N"], theta["S"]
        self.cE = np.where(nbr_inside["E"], 2.0 * scale / (tE * (tE + tW)), 0.0)
        self.cW = np.where(nbr_inside["W"], 2.0 * scale / (tW * (tE + tW)), 0.0)
        self.cN = np.where(nbr_inside["N"], 2.0 * scale / (tN * (tN + tS)), 0.0)
        self.cS = np.where(nbr_inside["S"], 2.0 * scale / (tS * (tN + tS)), 0.0)
        self.cP = 2.0 * scale / (tE * tW) + 2.0 * scale / (tN * tS)
        for arr in (self.cE, self.cW, self.cN, self.cS, self.cP):
            arr[~self.inside] = 0.0
        self.cP[~self.inside] = 1.0  # avoid division by zero in sweeps

        self.ids = -np.ones((n, n), dtype=np.int64)
        ii, jj = np.nonzero(self.inside)
        self.ids[ii, jj] = np.arange(len(ii))
        self.points = (ii, jj)
        self.n_unknown = len(ii)
        self.red = ((ii + jj) % 2 == 0)

        rows, cols, vals = [], [], []
        pid = self.ids[ii, jj]
        rows.append(pid)
        cols.append(pid)
        vals.append(self.cP[ii, jj])
        for d, (di, dj), carr in [
            ("E", (1, 0), self.cE),
            ("W", (-1, 0), self.cW),
            ("N", (0, 1), self.cN),
            ("S", (0, -1), self.cS),
        ]:
            has = nbr_inside[d][ii, jj]
            rows.append(pid[has])
            cols.append(self.ids[ii[has] + di, jj[has] + dj])
            vals.append(carr[ii, jj][has])
            # neighbor coefficients enter with a minus sign
            vals[-1] = -vals[-1]
        self.L = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_unknown, self.n_unknown),
        )
        self._lu = None

    @property
    def lu(self):
        if self._lu is None:
            self._lu = splu(self.L.tocsc())
        return self._lu

    def to_vector(self, grid):
        ii, jj = self.points
        return np.asarray(grid)[ii, jj]

    def to_grid(self, vec, fill=0.0):
        out = np.full((self.n, self.n), fill)
        ii, jj = self.points
        out[ii, jj] = vec
        return out


@lru_cache(maxsize=8)
def grid_geometry(n):
    return _Geometry(n)


def poisson_solve(rhs):
    """Solve Delta_h u = rhs on the masked disk with u = 0 on the circle.

    Direct sparse factorization (cached per grid size); raises
    SolverFailureError if the residual exceeds 1e-10 * max|rhs|.
    """
    geom = grid_geometry(rhs.n)
    b = -geom.to_vector(rhs.values)  # L = -Delta_h
    if not np.all(np.isfinite(b)):
        raise ValueError("poisson_solve requires finite rhs on the mask")
    u = geom.lu.solve(b)
    res = np.max(np.abs(geom.L @ u - b))
    tol = 1e-10 * max(np.max(np.abs(b)), 1.0)
    if res > tol:
        u = u + geom.lu.solve(b - geom.L @ u)
        res = np.max(np.abs(geom.L @ u - b))
        if res > tol:
            raise SolverFailureError(
                f"poisson_solve residual {res:.3e} above tolerance", residual=res
            )
    return GridField(n=rhs.n, values=geom.to_grid(u), mask=geom.mask.copy())


def sample_weight(w, n):
    """Sample a weight on the grid (zero outside the open disk)."""
    geom = grid_geometry(n)
    vals = np.zeros((n, n))
    vals[geom.inside] = eval_weight(w, geom.Z[geom.inside])
    return GridField(n=n, values=vals, mask=geom.mask.copy())


def build_vt(w, t, n):
    """Sample V_t = t log|z|^2 - u_w, where Delta u_w = w, u_w = 0 on the
    circle.  The origin node carries -inf (logarithmic injection point)."""
    if t <= 0:
        raise ValueError("t must be positive")
    geom = grid_geometry(n)
    u_w = poisson_solve(sample_weight(w, n))
    with np.errstate(divide="ignore"):
        log_term = np.log(geom.X ** 2 + geom.Y ** 2)
    vals = np.where(geom.mask, t * log_term - u_w.values, 0.0)
    vals[~geom.mask] = 0.0
    return GridField(n=n, values=vals, mask=geom.mask.copy())


def _psor(geom, s, phi, relax, tol, max_sweeps):
    if relax is None:
        # near-optimal SOR factor for the disk Dirichlet problem
        relax = 2.0 / (1.0 + 1.7 * geom.h)
    scale = max(1.0, np.max(np.abs(phi[np.isfinite(phi)])))
    inside = geom.inside
    red_grid = np.zeros_like(inside)
    ii, jj = geom.points
    red_grid[ii[geom.red], jj[geom.red]] = True
    colors = [inside & red_grid, inside & ~red_grid]
    cE, cW, cN, cS, cP = geom.cE, geom.cW, geom.cN, geom.cS, geom.cP
    for sweep in range(1, max_sweeps + 1):
        delta = 0.0
        for color in colors:
            nb = np.zeros_like(s)
            nb[:-1, :] += cE[:-1, :] * s[1:, :]
            nb[1:, :] += cW[1:, :] * s[:-1, :]
            nb[:, :-1] += cN[:, :-1] * s[:, 1:]
            nb[:, 1:] += cS[:, 1:] * s[:, :-1]
            new = np.maximum(phi, s + relax * (nb / cP - s))
            step = np.max(np.abs(np.where(color, new - s, 0.0)))
            delta = max(delta, float(step))
            s = np.where(color, new, s)
        if delta <= tol * scale:
            return s, sweep
    raise SolverFailureError(
        f"projected SOR did not converge in {max_sweeps} sweeps", residual=delta
    )


def _active_set(geom, phi_vec, constrained, inactive0):
    """Primal active-set solve of the complementarity problem.

    Each iteration solves the harmonic equation exactly on the current
    detached set; violated constraints are re-activated and nodes with
    negative multiplier are released.  For the M-matrix operator this
    terminates; detachment grows by at most one node ring per iteration,
    so callers should seed ``inactive0`` with a decent guess.
    """
    L = geom.L
    phi_fill = np.where(constrained, phi_vec, 0.0)
    scale = max(1.0, float(np.max(np.abs(phi_fill))))
    inactive = inactive0 | ~constrained
    s = phi_fill.copy()
    for it in range(1, ACTIVE_SET_MAX_ITER + 1):
        idx_i = np.flatnonzero(inactive)
        idx_a = np.flatnonzero(~inactive)
        L_ii = L[idx_i][:, idx_i]
        rhs = np.zeros(len(idx_i))
        if len(idx_a):
            rhs = -(L[idx_i][:, idx_a] @ phi_fill[idx_a])
        s = phi_fill.copy()
        s[idx_i] = splu(L_ii.tocsc()).solve(rhs)
        lam = L @ s
        lam_scale = max(1.0, float(np.max(np.abs(lam))))
        violations = inactive & constrained & (s < phi_vec - 1e-12 * scale)
        releases = ~inactive & (lam < -1e-12 * lam_scale)
        if not violations.any() and not releases.any():
            comp = np.where(
                constrained, np.minimum(np.abs(s - phi_vec), np.abs(lam)), 0.0
            )
            return s, it, float(np.max(comp))
        inactive = (inactive & ~violations) | releases
    raise SolverFailureError(
        f"active-set solver did not settle in {ACTIVE_SET_MAX_ITER} iterations",
        residual=float(violations.sum() + releases.sum()),
    )


def superharmonic_majorant(
    obstacle,
    method="active_set",
    relax=None,
    tol=PSOR_TOL,
    max_sweeps=PSOR_MAX_SWEEPS,
    warm_membership=None,
):
    """Smallest grid function s with s >= obstacle and -Delta_h s >= 0.

    Nodes where the obstacle is -inf (the injection node) are exempt from
    the constraint.  ``warm_membership`` seeds the detached set.
    Returns (GridField, diagnostics dict).
    """
    geom = grid_geometry(obstacle.n)
    phi_vec = geom.to_vector(obstacle.values)
    constrained = np.isfinite(phi_vec)
    if np.any(np.isposinf(phi_vec)):
        raise ValueError("obstacle must be bounded above")

    if warm_membership is not None:
        seed = binary_dilation(warm_membership, iterations=2)
        inactive0 = geom.to_vector(seed).astype(bool)
    else:
        inactive0 = np.zeros(geom.n_unknown, dtype=bool)

    if method == "active_set":
        s_vec, iters, comp = _active_set(geom, phi_vec, constrained, inactive0)
        diagnostics = {"sweeps": iters, "residual": comp, "method": method}
        values = geom.to_grid(s_vec)
        return GridField(obstacle.n, values, geom.mask.copy()), diagnostics
    if method == "psor":
        phi_grid = np.where(geom.inside, obstacle.values, -np.inf)
        s0 = np.where(geom.inside, np.maximum(obstacle.values, 0.0), 0.0)
        s0[~np.isfinite(s0)] = 0.0
        s, sweeps = _psor(geom, s0, phi_grid, relax, tol, max_sweeps)
        s_vec = geom.to_vector(s)
        lam = geom.L @ s_vec
        comp = float(
            np.max(
                np.where(
                    constrained,
                    np.minimum(np.abs(s_vec - phi_vec), np.abs(lam)),
                    0.0,
                )
            )
        )
        diagnostics = {"sweeps": sweeps, "residual": comp, "method": method}
        return GridField(obstacle.n, s, geom.mask.copy()), diagnostics
    raise ValueError(f"unknown majorant method {method!r}")


def _coarse_level(n):
    if n <= CASCADE_MIN_N or (n - 1) % 2:
        return None
    return (n - 1) // 2 + 1


def _membership_from_gap(geom, gap, eps):
    member = (gap > eps) & geom.inside
    # the injection node and nodes where the obstacle is -inf always detach
    member |= ~np.isfinite(gap) & geom.inside
    return member


def _upscale_membership(coarse, n):
    nc = coarse.shape[0]
    idx = np.round(np.arange(n) * (nc - 1) / (n - 1)).astype(int)
    return coarse[np.ix_(idx, idx)]


def _solve_gap(w, t, n, warm_membership, method):
    """Detachment gap and membership on the n-grid (cascadic warm start)."""
    geom = grid_geometry(n)
    if method == "active_set":
        # seed from a coarse solve even when a warm start is supplied: the
        # active-set iteration shrinks an oversized detached set in a few
        # steps but grows an undersized one only one node ring at a time
        nc = _coarse_level(n)
        if nc is not None:
            try:
                _, coarse_member, _ = _solve_gap(w, t, nc, None, method)
            except EmptyDomainError:
                coarse_member = None
            if coarse_member is not None:
                seed = _upscale_membership(coarse_member, n)
                if warm_membership is not None:
                    seed |= warm_membership
                warm_membership = seed

    obstacle = build_vt(w, t, n)
    majorant, diagnostics = superharmonic_majorant(
        obstacle, method=method, warm_membership=warm_membership
    )
    gap = np.where(geom.mask, majorant.values - obstacle.values, 0.0)
    membership = _membership_from_gap(geom, gap, geom.h ** 2)
    if not membership.any():
        raise EmptyDomainError(
            f"no detachment at t={t} on an n={n} grid; "
            "increase t or refine the grid"
        )
    return gap, membership, diagnostics


def extract_domain(w, t, n, warm_membership=None, method="active_set"):
    """Compute the flow domain D(t) as a FlowSnapshot.

    Membership is the detachment set {majorant - V_t > eps_detach} with
    eps_detach = h^2; the boundary polyline comes from marching squares on
    the detachment gap.  Without a warm start the detached set is seeded
    from a coarser grid (cascadic warm start).
    """
    geom = grid_geometry(n)
    gap, membership, diagnostics = _solve_gap(w, t, n, warm_membership, method)
    h = geom.h
    eps = h * h
    finite_gap = np.where(np.isfinite(gap), gap, np.nanmax(gap[np.isfinite(gap)]))
    loops = [
        np.column_stack((-1.0 + c[:, 0] * h, -1.0 + c[:, 1] * h))
        for c in find_contours(finite_gap, eps)
    ]
    if not loops:
        raise EmptyDomainError(f"no boundary contour at level {eps} for t={t}")
    boundary = max(loops, key=_loop_length)
    zs = geom.Z[membership]
    area_omega = float(np.sum(eval_weight(w, zs)) * h * h / np.pi)
    # the detachment set stops h / sqrt(2 w) short of the free boundary
    # (the gap grows like 2 w d^2 off it); add the missing strip mass
    for loop in loops:
        pts = loop[:, 0] + 1j * loop[:, 1]
        seg = np.abs(np.diff(pts))
        mid = 0.5 * (pts[1:] + pts[:-1])
        # interpolated contour vertices may overshoot the rim by a cell
        r_mid = np.abs(mid)
        mid = np.where(r_mid > 1.0 - 1e-9, mid * (1.0 - 1e-9) / r_mid, mid)
        area_omega += float(
            np.sum(np.sqrt(np.real(eval_weight(w, mid)) / 2.0) * seg) * h / np.pi
        )
    diagnostics = dict(diagnostics)
    diagnostics["n_loops"] = len(loops)
    return FlowSnapshot(
        t=float(t),
        n=n,
        h=h,
        eps_detach=eps,
        membership=membership,
        boundary=boundary,
        loops=loops,
        area_omega=area_omega,
        detach_gap=gap,
        diagnostics=diagnostics,
    )


def _loop_length(loop):
    return float(np.sum(np.hypot(*np.diff(loop, axis=0).T)))


def grid_mass(w, n):
    """Total weighted area of the masked grid, int w dSigma."""
    geom = grid_geometry(n)
    h = geom.h
    return float(np.sum(eval_weight(w, geom.Z[geom.inside])) * h * h / np.pi)


def termination_time(w, n, t_max=1e3, rtol=1e-3):
    """Estimate the termination time T of the flow.

    Bisection (Brent) over t on the measured gap between the extracted
    boundary and the unit circle; the marching-squares boundary sits
    h / sqrt(2 w) inside the true free boundary (the detachment gap grows
    quadratically off it), so the root is taken at that offset rather than
    at zero.  Returns math.inf if D(t) keeps a margin of more than 2h up
    to t_max.
    """
    geom = grid_geometry(n)
    h = geom.h
    warm = {"member": None, "t": 0.0}

    def distance(t):
        try:
            snap = extract_domain(w, t, n, warm_membership=warm["member"])
        except EmptyDomainError:
            return 1.0, 1.0
        if t > warm["t"]:
            warm["member"], warm["t"] = snap.membership, t
        radius = float(np.max(np.hypot(snap.boundary[:, 0], snap.boundary[:, 1])))
        edge = min(0.99, radius)
        offset = h / math.sqrt(2.0 * float(eval_weight(w, edge)))
        return 1.0 - radius, offset

    t0 = min(t_max, grid_mass(w, n)) / 64.0
    t_prev, d_prev = None, None
    t = t0
    while True:
        d, offset = distance(t)
        if d <= offset:
            break
        t_prev, d_prev = t, d
        if t >= t_max:
            if d > 2.0 * h:
                return math.inf
            break
        t = min(2.0 * t, t_max)
    if t_prev is None:
        # already touching at the smallest probe
        t_prev = t0 / 64.0
    root = brentq(
        lambda tt: distance(tt)[0] - offset,
        t_prev,
        t,
        rtol=rtol,
        xtol=rtol * max(t_prev, 1e-12),
    )
    return float(root)
