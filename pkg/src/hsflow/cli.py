"""Command-line interface: config parsing, dispatch, artifacts, figures.

Artifacts are deterministic: JSON is written with sorted keys and no
timestamps, SVG figures carry no date metadata, and all randomness flows
from the --seed flag.  The environment variable HS_LAB_THREADS caps the
worker count of the underlying numeric libraries.
"""

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from . import expmap, flow, geodesics, kernels, korenblum, obstacle, plots, surface
from .quadrature import circle_nodes
from .report import VerificationReport

DEFAULT_N = 513
DEFAULT_ALPHA = 0.5

#: weight families whose construction consumes the ``alpha`` key; for all
#: other families ``alpha`` configures the curvature-condition checks
ALPHA_FAMILIES = ("power", "example7")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    weight: str = "flat"
    c: float = None
    alpha: float = None
    scale: float = None
    table: str = None
    n: int = DEFAULT_N
    t: list = field(default_factory=lambda: [0.25])
    t_max: float = 1000.0
    method: str = "active_set"
    out: str = "runs/out"
    seed: int = 0
    checks: list = field(default_factory=lambda: ["all"])
    z0: complex = 0j
    r_max: float = 0.8
    n_r: int = 4
    n_theta: int = 16
    start: complex = 0j
    direction: complex = 1 + 0j
    length: float = 0.5
    step: float = 1e-3
    p: float = 0.5
    samples: int = 100_000

    def make_weight(self):
        params = {}
        if self.weight in ("flat", "poincare", "example7") and self.c is not None:
            params["c"] = self.c
        if self.weight in ALPHA_FAMILIES:
            if self.alpha is None:
                raise ConfigError(f"weight {self.weight!r} requires alpha")
            params["alpha"] = self.alpha
        if self.weight == "power" and self.scale is not None:
            params["scale"] = self.scale
        if self.weight == "example7" and self.c is None:
            raise ConfigError("weight 'example7' requires c")
        if self.weight == "table":
            if self.table is None:
                raise ConfigError("weight 'table' requires table = <csv path>")
            params["path"] = self.table
        return surface.make_weight(self.weight, **params)

    @property
    def check_alpha(self):
        """alpha for the curvature-condition checks (the ``alpha`` key when
        the weight family does not consume it)."""
        if self.weight in ALPHA_FAMILIES or self.alpha is None:
            return DEFAULT_ALPHA
        return self.alpha


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_value(key, raw, lineno):
    raw = raw.strip().strip('"').strip("'")
    kind = _FIELD_TYPES[key]
    try:
        if kind is list:
            return [float(v) for v in raw.replace("[", "").replace("]", "").split(",") if v.strip()]
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is complex:
            return complex(raw.replace(" ", ""))
        return raw
    except ValueError:
        raise ConfigError(f"line {lineno}: bad value for {key!r}: {raw!r}") from None


def parse_config(text):
    """Parse a flat key-value document (with optional [sections]).

    Unknown keys and malformed or out-of-range values raise ConfigError
    with the offending line number.
    """
    cfg = RunConfig()
    t_line = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body or body.startswith(";"):
            continue
        if body.startswith("[") and body.endswith("]"):
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key = value, got {body!r}")
        key, raw = body.split("=", 1)
        key = key.strip().replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        value = _parse_value(key, raw, lineno)
        if key == "t":
            t_line = lineno
        if key == "checks":
            value = [v.strip() for v in raw.split(",") if v.strip()]
        setattr(cfg, key, value)
    _validate(cfg, t_line)
    return cfg


def _validate(cfg, t_line=None):
    where = f"line {t_line}: " if t_line else ""
    if any(b <= a for a, b in zip(cfg.t, cfg.t[1:])):
        raise ConfigError(where + "t schedule must be strictly increasing")
    if any(tv <= 0 for tv in cfg.t):
        raise ConfigError(where + "t values must be positive")
    if cfg.n < 5:
        raise ConfigError("n must be at least 5")
    if cfg.method not in ("active_set", "psor"):
        raise ConfigError(f"unknown method {cfg.method!r}")


def _load_config(args):
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    else:
        cfg = RunConfig()
    for name in _FIELD_TYPES:
        flag = getattr(args, name, None)
        if flag is not None:
            if name == "t":
                flag = [float(v) for v in str(flag).split(",")]
            elif name == "checks":
                flag = [v.strip() for v in str(flag).split(",")]
            setattr(cfg, name, flag)
    _validate(cfg)
    return cfg


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _finish(report, out, name):
    _write_json(os.path.join(out, name), report.to_json_list())
    print(report.table())
    return 0 if report.passed else 1


def _jsonable(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return x


def cmd_kernels(args):
    cfg = _load_config(args)
    os.makedirs(cfg.out, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    report = VerificationReport()

    def sample(m, rmax=0.999):
        return np.sqrt(rng.uniform(0, rmax ** 2, m)) * np.exp(
            1j * rng.uniform(0, 2 * np.pi, m)
        )

    z, zeta = sample(cfg.samples), sample(cfg.samples)
    ok = np.abs(z - zeta) > 1e-6
    g1 = kernels.gamma1(z[ok], zeta[ok])
    hc = kernels.compensator(z[ok], zeta[ok])
    report.add_bound("gamma1-positive", float(-np.min(g1)), 0.0)
    report.add_bound("compensator-positive", float(-np.min(hc)), 0.0)

    z, zeta = sample(1000, 0.7), sample(1000, 0.7)
    # keep the pairs well separated: the 4th derivative entering the FD
    # error grows like |z - zeta|^-4 near the logarithmic diagonal
    keep = np.abs(z - zeta) > 0.15
    z, zeta = z[keep], zeta[keep]
    step = 1e-4
    fd = (
        kernels.gamma1(z + step, zeta)
        + kernels.gamma1(z - step, zeta)
        + kernels.gamma1(z + 1j * step, zeta)
        + kernels.gamma1(z - 1j * step, zeta)
        - 4.0 * kernels.gamma1(z, zeta)
    ) / (4.0 * step * step)
    exact = kernels.lap_gamma1(z, zeta)
    # guard the denominator: the kernel is O(1) but crosses zero
    rel = np.max(np.abs(fd - exact) / np.maximum(np.abs(exact), 1.0))
    report.add_bound("laplacian-identity-fd", float(rel), 1e-4)

    zeta = sample(1000, 0.99)
    u = np.abs(zeta) ** 2
    bound = np.log(u) + 1.5 - 2.0 * u + 0.5 * u ** 2
    dev = np.max(np.abs(kernels.lap_gamma1(0.0, zeta) - bound))
    report.add_bound("origin-slice-identity", float(dev), 1e-12)

    tz = circle_nodes(4096)
    worst = 0.0
    for z0 in sample(100, 0.97):
        mean = float(np.mean(kernels.compensator(tz, z0)))
        b = abs(z0) ** 2
        worst = max(worst, abs(mean - (1.5 - 2.0 * b + 0.5 * b ** 2)))
    report.add_bound("boundary-mean-identity", worst, 1e-6)
    return _finish(report, cfg.out, "kernels_report.json")


def cmd_flow(args):
    cfg = _load_config(args)
    os.makedirs(cfg.out, exist_ok=True)
    w = cfg.make_weight()
    snaps = flow.run_flow(w, cfg.t, cfg.n, method=cfg.method)
    report = VerificationReport()
    for k, snap in enumerate(snaps):
        _write_json(
            os.path.join(cfg.out, f"snapshot_{k:03d}.json"), snap.to_json_dict()
        )
        sub = flow.verify_snapshot(snap)
        for r in sub:
            report.add(f"t={snap.t:g}:{r.check}", r.status, r.residual,
                       r.tolerance, r.n, r.h)
        res = flow.mean_value_residuals(snap, w, 0)[0]
        report.add_bound(
            f"t={snap.t:g}:mean-value", res, 5.0 * snap.h * snap.t,
            n=snap.n, h=snap.h,
        )
    report.add_bound("inclusion-monotone", float(flow.inclusion_monotone(snaps)),
                     0.0, n=cfg.n)
    plots.nested_contours(
        snaps, os.path.join(cfg.out, "flow_domains.svg"),
        title=f"flow domains, {w.describe()}",
    )
    return _finish(report, cfg.out, "flow_report.json")


def cmd_expmap(args):
    cfg = _load_config(args)
    os.makedirs(cfg.out, exist_ok=True)
    w = cfg.make_weight()
    chart = expmap.build_chart(
        w, cfg.z0, cfg.r_max, cfg.n_r, cfg.n_theta, cfg.n, method=cfg.method
    )
    report = expmap.chart_checks(chart, w)
    _write_json(os.path.join(cfg.out, "chart.json"), chart.to_json_dict())
    plots.chart_figure(chart, os.path.join(cfg.out, "chart.svg"))
    return _finish(report, cfg.out, "expmap_report.json")


def cmd_geodesic(args):
    cfg = _load_config(args)
    os.makedirs(cfg.out, exist_ok=True)
    w = cfg.make_weight()
    path = geodesics.shoot(w, cfg.start, cfg.direction, cfg.length, cfg.step)
    _write_csv(
        os.path.join(cfg.out, "geodesic.csv"),
        ("t", "x", "y", "speed"),
        [
            (f"{t:.9e}", f"{p.real:.12e}", f"{p.imag:.12e}", f"{s:.12e}")
            for t, p, s in zip(path.times, path.points, path.metric_speed)
        ],
    )
    plots.geodesic_figure([path], os.path.join(cfg.out, "geodesic.svg"))
    report = VerificationReport()
    drift = float(
        (np.max(path.metric_speed) - np.min(path.metric_speed))
        / path.metric_speed[0]
    )
    span = max(float(path.times[-1]), cfg.step)
    report.add_bound("metric-speed-drift", drift / span, 1e-6)
    report.add_bound("equation-residual", geodesics.geodesic_residual(w, path),
                     10.0 * cfg.step)
    if path.truncated:
        report.add("truncated-at-boundary", "not-applicable")
    return _finish(report, cfg.out, "geodesic_report.json")


def cmd_korenblum(args):
    cfg = _load_config(args)
    os.makedirs(cfg.out, exist_ok=True)
    rs = np.concatenate([np.linspace(0.02, 0.98, 49), [0.99, 0.995, 0.999]])
    f_vals = [korenblum.big_f(r) for r in rs]
    ratios = [korenblum.log_ratio(r) for r in rs]
    _write_csv(
        os.path.join(cfg.out, "korenblum.csv"),
        ("r", "F", "log_ratio"),
        [
            (f"{r:.6f}", f"{fv:.12e}", f"{lr:.12e}")
            for r, fv, lr in zip(rs, f_vals, ratios)
        ],
    )
    plots.korenblum_figure(rs, f_vals, ratios, os.path.join(cfg.out, "korenblum.svg"))
    table = []
    for alpha in (0.5, 1.0, 1.5):
        thresh = korenblum.divergence_threshold(alpha)
        for p in np.linspace(0.1, 0.9, 9):
            table.append(
                {
                    "p": round(float(p), 6),
                    "alpha": alpha,
                    "c": _jsonable(korenblum.c_p_alpha(float(p), alpha)),
                    "threshold": thresh,
                }
            )
    _write_json(os.path.join(cfg.out, "c_p_alpha.json"), table)
    report = VerificationReport()
    report.add_bound("F-at-least-1", float(1.0 - min(f_vals)), 0.0)
    dev = max(
        abs(korenblum.log_big_f_polar(r) - korenblum.log_big_f_disk(r))
        for r in (0.55, 0.6, 0.75, 0.9)
    )
    report.add_bound("quadrature-routes-agree", dev, 1e-6)
    window = [korenblum.log_ratio(r) for r in (0.99, 0.995, 0.999)]
    report.add_bound("growth-ratio-bound", max(window) - 4.0 / math.pi, 0.05)
    return _finish(report, cfg.out, "korenblum_report.json")


def cmd_example7(args):
    cfg = _load_config(args)
    os.makedirs(cfg.out, exist_ok=True)
    c = cfg.c if cfg.c is not None else 0.01
    alpha = cfg.alpha if cfg.alpha is not None else 1.0
    w = surface.make_weight("example7", c=c, alpha=alpha)
    roots = surface.geodesic_circle_radii(c, alpha)
    print(f"geodesic-circle roots (in r = |z|^2): "
          + ", ".join(f"{r:.10f}" for r in roots))
    report = VerificationReport()
    report.add_bound("two-roots", float(abs(len(roots) - 2)), 0.0)
    shots = []
    for k, root in enumerate(roots):
        rho = math.sqrt(root)
        res = geodesics.circle_residual(w, rho)
        print(f"circle residual at rho = {rho:.10f}: {res:.3e}")
        report.add_bound(f"circle-residual-{k}", res, 1e-8)
        report.add_bound(
            f"off-circle-residual-{k}",
            1e-2 - geodesics.circle_residual(w, 0.9 * rho),
            0.0,
        )
    if roots:
        rho = math.sqrt(roots[-1])
        # the outer circle is an unstable geodesic: shooting errors grow
        # exponentially along it, so the integrator step must stay fine
        step = min(cfg.step, 1e-4)
        path = geodesics.shoot(w, rho, 1j, 2.2 * math.pi * rho, step=step)
        dev = float(np.max(np.abs(np.abs(path.points) - rho)))
        report.add_bound("tangential-shot-on-circle", dev, 1e-3)
        shots.append(path)
        plots.geodesic_figure(shots, os.path.join(cfg.out, "example7.svg"))
    rs = np.sqrt(np.linspace(0.0, 1.0 - 1e-6, 512))
    margin = float(np.min(surface.hyperbolicity_margin(w, alpha, rs)))
    report.add_bound("hyperbolicity-margin", -margin, 1e-8)
    return _finish(report, cfg.out, "example7_report.json")


def cmd_verify(args):
    cfg = _load_config(args)
    os.makedirs(cfg.out, exist_ok=True)
    w = cfg.make_weight()
    wanted = set(cfg.checks)
    everything = "all" in wanted
    report = VerificationReport()
    if everything or "w-estimate" in wanted:
        report.extend(flow.w_estimate_check(w, cfg.n))
    if everything or "reproducing" in wanted:
        for name in ("abs2", "abs4", "exp_re", "cauchy"):
            report.extend(flow.reproducing_inequality(w, name))
    if everything or "boundary-density" in wanted:
        report.extend(flow.boundary_density_check(w))
    if everything or "containment" in wanted:
        snap = obstacle.extract_domain(w, cfg.t[-1], cfg.n, method=cfg.method)
        report.extend(korenblum.containment_check(snap, w, cfg.check_alpha))
    return _finish(report, cfg.out, "verify_report.json")


def _add_common(sub):
    sub.add_argument("--config", help="key-value config file")
    sub.add_argument("--weight", help="weight family")
    sub.add_argument("--c", type=float)
    sub.add_argument("--alpha", type=float)
    sub.add_argument("--scale", type=float)
    sub.add_argument("--table", help="CSV sample grid for the table weight")
    sub.add_argument("--n", type=int, help=f"grid nodes per side (default {DEFAULT_N})")
    sub.add_argument("--t", help="comma-separated t schedule")
    sub.add_argument("--t-max", dest="t_max", type=float)
    sub.add_argument("--method", choices=("active_set", "psor"))
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--seed", type=int)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hsflow",
        description="Numerical laboratory for weighted Hele-Shaw flow on the unit disk.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("kernels", help="kernel identity and positivity suite")
    _add_common(sub)
    sub.add_argument("--check", default="all")
    sub.add_argument("--samples", type=int)
    sub.set_defaults(func=cmd_kernels)

    sub = subs.add_parser("flow", help="run the flow and verify the domains")
    _add_common(sub)
    sub.set_defaults(func=cmd_flow)

    sub = subs.add_parser("expmap", help="build and check the exponential-map chart")
    _add_common(sub)
    sub.add_argument("--z0", type=complex)
    sub.add_argument("--r-max", dest="r_max", type=float)
    sub.add_argument("--n-r", dest="n_r", type=int)
    sub.add_argument("--n-theta", dest="n_theta", type=int)
    sub.set_defaults(func=cmd_expmap)

    sub = subs.add_parser("geodesic", help="shoot a geodesic and verify conservation")
    _add_common(sub)
    sub.add_argument("--start", type=complex)
    sub.add_argument("--direction", type=complex)
    sub.add_argument("--length", type=float)
    sub.add_argument("--step", type=float)
    sub.set_defaults(func=cmd_geodesic)

    sub = subs.add_parser("korenblum", help="growth-constant tables and checks")
    _add_common(sub)
    sub.add_argument("--p", type=float)
    sub.set_defaults(func=cmd_korenblum)

    sub = subs.add_parser("example7", help="geodesic-circle demonstration")
    _add_common(sub)
    sub.add_argument("--step", type=float)
    sub.set_defaults(func=cmd_example7)

    sub = subs.add_parser("verify", help="run the configured verification checks")
    _add_common(sub)
    sub.add_argument("--checks", help="comma-separated check names")
    sub.set_defaults(func=cmd_verify)
    return parser


def _cap_threads():
    cap = os.environ.get("HS_LAB_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, cap)
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(int(cap))
    except ImportError:
        pass


def main(argv=None):
    _cap_threads()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
