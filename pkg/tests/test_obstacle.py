"""Discrete obstacle problem: Poisson solve, majorant, domain extraction."""

import math

import numpy as np
import pytest

from hsflow import obstacle
from hsflow.errors import EmptyDomainError
from hsflow.surface import make_weight


def test_poisson_solve_flat_rhs():
    # Delta u = 1 with zero boundary data has u = |z|^2 - 1
    n = 129
    geom = obstacle.grid_geometry(n)
    u = obstacle.poisson_solve(obstacle.sample_weight(make_weight("flat"), n))
    expected = geom.X ** 2 + geom.Y ** 2 - 1.0
    err = np.max(np.abs((u.values - expected)[geom.inside]))
    assert err < 5e-4  # second-order stencil at h = 2/128


def test_poisson_solve_quadratic_rhs():
    # Delta u = 2(1-|z|^2) has u = 2|z|^2 - |z|^4/2 - 3/2
    n = 129
    geom = obstacle.grid_geometry(n)
    w = make_weight("power", alpha=0.5, scale=2.0)
    u = obstacle.poisson_solve(obstacle.sample_weight(w, n))
    uu = geom.X ** 2 + geom.Y ** 2
    expected = 2.0 * uu - 0.5 * uu ** 2 - 1.5
    assert np.max(np.abs((u.values - expected)[geom.inside])) < 5e-4


def test_majorant_dominates_and_is_superharmonic():
    n = 129
    w = make_weight("flat")
    phi = obstacle.build_vt(w, 0.2, n)
    s, diag = obstacle.superharmonic_majorant(phi)
    geom = obstacle.grid_geometry(n)
    gap = s.values - phi.values
    assert np.min(gap[geom.inside & np.isfinite(phi.values)]) >= -1e-12
    lam = geom.L @ geom.to_vector(s.values)
    assert np.min(lam) > -1e-9  # -Delta_h s >= 0
    assert diag["residual"] < 1e-10


def test_psor_agrees_with_active_set():
    n = 97
    w = make_weight("power", alpha=0.5, scale=2.0)
    phi = obstacle.build_vt(w, 0.1, n)
    sa, _ = obstacle.superharmonic_majorant(phi, method="active_set")
    sp, _ = obstacle.superharmonic_majorant(phi, method="psor")
    assert np.max(np.abs(sa.values - sp.values)) < 1e-9


def test_flat_domain_is_a_centered_circle():
    n = 257
    snap = obstacle.extract_domain(make_weight("flat"), 0.16, n)
    radii = np.hypot(snap.boundary[:, 0], snap.boundary[:, 1])
    assert np.max(np.abs(radii - 0.4)) <= 2.0 * snap.h
    assert snap.area_omega == pytest.approx(0.16, abs=5 * snap.h * 0.16)
    assert len(snap.loops) == 1


def test_extract_domain_empty_for_tiny_mass():
    with pytest.raises(EmptyDomainError):
        obstacle.extract_domain(make_weight("flat"), 1e-9, 65)


def test_snapshot_json_schema():
    snap = obstacle.extract_domain(make_weight("flat"), 0.09, 129)
    doc = snap.to_json_dict()
    assert set(doc) == {
        "t", "n", "h", "eps_detach", "boundary", "area_omega", "diagnostics",
    }
    assert set(doc["diagnostics"]) == {"sweeps", "residual"}
    assert doc["n"] == 129
    assert doc["eps_detach"] == pytest.approx(snap.h ** 2)
    assert all(len(p) == 2 for p in doc["boundary"])


def test_grid_mass_flat_is_one():
    assert obstacle.grid_mass(make_weight("flat"), 257) == pytest.approx(1.0, abs=1e-3)


def test_warm_start_matches_cold_start():
    n = 129
    w = make_weight("flat")
    cold = obstacle.extract_domain(w, 0.25, n)
    small = obstacle.extract_domain(w, 0.16, n)
    warm = obstacle.extract_domain(w, 0.25, n, warm_membership=small.membership)
    assert np.array_equal(cold.membership, warm.membership)


def test_termination_time_flat_coarse():
    T = obstacle.termination_time(make_weight("flat"), 129, t_max=4.0)
    assert T == pytest.approx(1.0, abs=2e-2)


def test_termination_time_infinite_mass():
    # the weight 4/(1-|z|^2)^2 has infinite mass: the flow never fills the disk
    T = obstacle.termination_time(make_weight("poincare"), 129, t_max=20.0)
    assert math.isinf(T)
