"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Tolerances are stated inline; reference constants were derived from the
closed forms independently of the implementation.
"""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from hsflow import expmap, flow, geodesics, kernels, korenblum, obstacle
from hsflow.quadrature import circle_mean
from hsflow.surface import (
    geodesic_circle_radii,
    hyperbolicity_margin,
    make_weight,
    mobius_pullback,
)


def _conclude(k, ok, detail):
    line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'} — {detail}"
    print(line)
    assert ok, line


def _disk_sample(rng, m, rmax=0.999):
    return np.sqrt(rng.uniform(0, rmax ** 2, m)) * np.exp(
        1j * rng.uniform(0, 2 * np.pi, m)
    )


def test_criterion_01_kernel_identities(rng):
    z, zeta = _disk_sample(rng, 100_000), _disk_sample(rng, 100_000)
    ok = np.abs(z - zeta) > 1e-6
    min_g = float(np.min(kernels.gamma1(z[ok], zeta[ok])))
    min_h = float(np.min(kernels.compensator(z[ok], zeta[ok])))

    z, zeta = _disk_sample(rng, 1500, 0.7), _disk_sample(rng, 1500, 0.7)
    keep = np.abs(z - zeta) > 0.15
    z, zeta = z[keep][:1000], zeta[keep][:1000]
    step = 1e-4
    fd = (
        kernels.gamma1(z + step, zeta)
        + kernels.gamma1(z - step, zeta)
        + kernels.gamma1(z + 1j * step, zeta)
        + kernels.gamma1(z - 1j * step, zeta)
        - 4.0 * kernels.gamma1(z, zeta)
    ) / (4.0 * step ** 2)
    exact = kernels.lap_gamma1(z, zeta)
    rel = float(np.max(np.abs(fd - exact) / np.maximum(np.abs(exact), 1.0)))

    zeta = _disk_sample(rng, 1000, 0.99)
    u = np.abs(zeta) ** 2
    slice_dev = float(
        np.max(np.abs(kernels.lap_gamma1(0.0, zeta) - (np.log(u) + 1.5 - 2 * u + 0.5 * u ** 2)))
    )
    ok = min_g > 0 and min_h > 0 and rel <= 1e-4 and slice_dev <= 1e-12
    _conclude(
        1, ok,
        f"min gamma1 {min_g:.2e}, min compensator {min_h:.2e}, "
        f"FD rel {rel:.2e} (tol 1e-4), origin slice {slice_dev:.2e} (tol 1e-12)",
    )


def test_criterion_02_boundary_mean_identity(rng):
    worst = 0.0
    for zeta in _disk_sample(rng, 100, 0.97):
        u = abs(zeta) ** 2
        mean = circle_mean(lambda z: kernels.compensator(z, zeta), 4096)
        worst = max(worst, abs(mean - (1.5 - 2.0 * u + 0.5 * u ** 2)))
    _conclude(2, worst <= 1e-6, f"worst boundary-mean deviation {worst:.2e} (tol 1e-6)")


def test_criterion_03_flat_flow_exactness(flat_flow_513, flat_weight):
    worst_hausdorff, worst_area, details = 0.0, 0.0, []
    for snap in flat_flow_513:
        r = math.sqrt(snap.t)
        pts = snap.boundary[:, 0] + 1j * snap.boundary[:, 1]
        d1 = float(np.max(np.abs(np.abs(pts) - r)))
        circle = r * np.exp(1j * np.linspace(0, 2 * np.pi, 2048, endpoint=False))
        d2 = float(np.max(np.min(np.abs(circle[:, None] - pts[None, :]), axis=1)))
        hausdorff = max(d1, d2)
        area_err = abs(snap.area_omega - snap.t)
        worst_hausdorff = max(worst_hausdorff, hausdorff / (2 * snap.h))
        worst_area = max(worst_area, area_err / (5 * snap.h * snap.t))
        details.append(f"t={snap.t}: dH={hausdorff:.2e}, dA={area_err:.2e}")
    T = obstacle.termination_time(flat_weight, 257, t_max=4.0)
    ok = worst_hausdorff <= 1.0 and worst_area <= 1.0 and abs(T - 1.0) <= 1e-2
    _conclude(
        3, ok,
        f"{'; '.join(details)}; Hausdorff <= 2h and area <= 5ht everywhere, "
        f"termination T={T:.5f} (tol 1e-2)",
    )


def test_criterion_04_mean_value_refinement(
    flat_flow_513, flat_flow_257, quad_flow_513, flat_weight, quad_weight
):
    quad_257 = flow.run_flow(quad_weight, [0.16], 257)[0]
    pairs = [
        ("flat", flat_weight, flat_flow_257[0], flat_flow_513[1]),
        ("2(1-u)", quad_weight, quad_257, quad_flow_513[1]),
    ]
    ok, details = True, []
    for name, w, coarse, fine in pairs:
        rc = max(flow.mean_value_residuals(coarse, w, 6))
        rf = max(flow.mean_value_residuals(fine, w, 6))
        within = rc <= 5 * coarse.h * coarse.t and rf <= 5 * fine.h * fine.t
        gain = rc / rf
        ok = ok and within and gain >= 1.8
        details.append(f"{name}: res {rc:.2e}->{rf:.2e} (tol 5ht), gain {gain:.2f}")
    _conclude(4, ok, "; ".join(details) + " (gain tol 1.8)")


def test_criterion_05_structure_checks(quad_flow_513, inv_flow_513):
    ok, worst = True, ""
    for name, snaps in (("2(1-u)", quad_flow_513), ("(1-u)^-1", inv_flow_513)):
        for snap in snaps:
            report = flow.verify_snapshot(snap)
            if not report.passed:
                ok, worst = False, f"{name} t={snap.t}: {report.table()}"
    _conclude(
        5, ok,
        worst or "all snapshots 4-connected, hole-free, single smooth loop at n=513",
    )


def test_criterion_06_w_estimate_extremal(quad_weight):
    report = flow.w_estimate_check(quad_weight, 513)
    row = next(r for r in report.results if r.check == "w-estimate")
    _conclude(
        6, report.passed,
        f"W-estimate deviation {row.residual:.2e} (tol 10h^2 = {row.tolerance:.2e})",
    )


def test_criterion_07_korenblum_suite(rng):
    f0 = abs(korenblum.big_f(1e-6) - math.e)
    routes = max(
        abs(korenblum.log_big_f_polar(r) - korenblum.log_big_f_disk(r))
        for r in np.linspace(0.51, 0.98, 20)
    )
    ratio = max(korenblum.log_ratio(r) for r in np.linspace(0.99, 0.999, 10))
    ratio_ok = ratio <= 4.0 / math.pi + 0.05

    lo, hi = 0.3, 0.9  # c_{p,1} finite at 0.3, divergent at 0.9
    while hi - lo > 1e-4:
        mid = 0.5 * (lo + hi)
        if math.isinf(korenblum.c_p_alpha(mid, 1.0)):
            hi = mid
        else:
            lo = mid
    threshold_err = abs(0.5 * (lo + hi) - math.pi / (math.pi + 2 * (4 - math.pi)))

    pk = 0.0
    for z in _disk_sample(rng, 100, 0.95):
        r_star = korenblum.tangent_disk_switch_radius(z)
        lhs = r_star / (1.0 - r_star)
        pk = max(pk, abs(lhs - korenblum.tangent_disk_density(z)))

    ok = f0 <= 1e-4 and routes <= 1e-6 and ratio_ok and threshold_err <= 1e-3 and pk <= 1e-6
    _conclude(
        7, ok,
        f"|F(0+)-e|={f0:.2e} (1e-4), routes {routes:.2e} (1e-6), "
        f"log-ratio {ratio:.4f} (<= 4/pi+0.05), threshold err {threshold_err:.2e} (1e-3), "
        f"tangent-disk identity {pk:.2e} (1e-6)",
    )


def test_criterion_08_containment(flat_flow_513, flat_weight, quad_weight):
    snap = flat_flow_513[1]  # t = 0.16, equality case for alpha = 0
    radius = float(np.max(np.hypot(snap.boundary[:, 0], snap.boundary[:, 1])))
    rho = korenblum.containment_radius(flat_weight, 0.0, snap.t)
    flat_dev = abs(radius - rho)

    snap_q = obstacle.extract_domain(quad_weight, 0.1, 257)
    radius_q = float(np.max(np.hypot(snap_q.boundary[:, 0], snap_q.boundary[:, 1])))
    rho_q = korenblum.containment_radius(quad_weight, 0.5, 0.1)
    margin = rho_q - radius_q
    report = korenblum.containment_check(snap_q, quad_weight, 0.5)

    ok = flat_dev <= 2 * snap.h and margin > 0 and report.passed
    _conclude(
        8, ok,
        f"flat equality |radius - rho*| = {flat_dev:.2e} (tol 2h = {2 * snap.h:.2e}); "
        f"2(1-u) at t=0.1: margin {margin:.3f} > 0",
    )


def test_criterion_09_geodesic_circles():
    c, alpha = 0.01, 1.0
    w = make_weight("example7", c=c, alpha=alpha)
    roots = geodesic_circle_radii(c, alpha)
    windows_ok = (
        len(roots) == 2 and 0.35 < roots[0] < 0.45 and 0.5 < roots[1] < 0.7
    )
    res_on = max(geodesics.circle_residual(w, math.sqrt(r)) for r in roots)
    res_off = min(geodesics.circle_residual(w, 0.9 * math.sqrt(r)) for r in roots)

    rho = math.sqrt(roots[1])
    path = geodesics.shoot(w, rho, 1j, 2.2 * math.pi * rho, step=1e-4)
    dev = float(np.max(np.abs(np.abs(path.points) - rho)))

    rs = np.sqrt(np.linspace(0.0, 1.0 - 1e-6, 512))
    margin = float(np.min(hyperbolicity_margin(w, alpha, rs)))

    ok = windows_ok and res_on <= 1e-8 and res_off > 1e-2 and dev <= 1e-3 and margin >= 0
    _conclude(
        9, ok,
        f"roots {roots[0]:.8f}, {roots[1]:.8f} in windows; circle residual "
        f"{res_on:.1e} (<=1e-8) vs off-circle {res_off:.1e} (>1e-2); "
        f"tangential shot deviation {dev:.1e} (<=1e-3); margin {margin:.3f} >= 0",
    )


def test_criterion_10_chart_properties(flat_weight, quad_weight):
    cases = [
        ("flat", flat_weight, 1.0, 0.05),
        ("flat(4)", make_weight("flat", c=4.0), 0.5, 0.025),
        ("2(1-u)", quad_weight, 2 ** -0.5, 0.05),
    ]
    ok, details = True, []
    for name, w, target, tol in cases:
        chart = expmap.build_chart(w, 0.0, 0.7, 4, 16, 257)
        report = expmap.chart_checks(chart, w)
        rows = {r.check: r.residual for r in report.results}
        slope_err = rows["slope"] * target  # residual is relative
        ortho = rows["orthogonality"]
        crossings = rows["no-crossings"]
        ok = ok and slope_err <= tol * target and ortho <= 1.0 and crossings == 0
        details.append(f"{name}: slope err {rows['slope']*100:.2f}%, ortho {ortho:.2f} deg")
    wp = mobius_pullback(make_weight("power", alpha=0.5, scale=2.0), 0.35)
    gain = expmap.refinement_gain(wp, 0.0, 0.5, 4, 16, 257)
    ok = ok and gain >= 1.8
    _conclude(10, ok, "; ".join(details) + f"; ring-doubling gain {gain:.2f} (>= 1.8)")


def test_criterion_11_determinism(tmp_path):
    outs = []
    for tag in ("a", "b"):
        base = tmp_path / tag
        for cmd in (
            ["kernels", "--samples", "5000", "--out", str(base / "k")],
            ["flow", "--weight", "flat", "--n", "129", "--t", "0.16", "--out", str(base / "f")],
            ["expmap", "--weight", "flat", "--n", "129", "--r-max", "0.5",
             "--out", str(base / "e")],
        ):
            code = subprocess.run(
                [sys.executable, "-m", "hsflow.cli"] + cmd,
                capture_output=True,
            ).returncode
            assert code == 0, f"subcommand {cmd[0]} exited {code}"
        outs.append(base)
    identical = True
    for rel in ("k/kernels_report.json", "f/snapshot_000.json",
                "f/flow_report.json", "e/chart.json"):
        a = (outs[0] / rel).read_bytes()
        b = (outs[1] / rel).read_bytes()
        identical = identical and a == b
        json.loads(a)  # artifacts must be valid JSON as well
    _conclude(11, identical, "repeated seeded runs produce byte-identical JSON artifacts")
