"""Closed-form kernel identities.

Reference values used below were derived independently from the closed
forms (origin slice, diagonal value, boundary means) before the module was
written, and are frozen here.
"""

import numpy as np
import pytest

from hsflow import kernels
from hsflow.errors import DomainError, SingularInputError
from hsflow.quadrature import circle_mean


def _interior_pairs(rng, m):
    def draw():
        z = rng.uniform(-1, 1, 2 * m).view(complex)
        return z[np.abs(z) < 0.98][:m]

    z, zeta = draw(), draw()
    k = min(len(z), len(zeta))
    return z[:k], zeta[:k]


def test_green_nonpositive_and_boundary_zero(rng):
    z, zeta = _interior_pairs(rng, 500)
    assert np.all(kernels.green(z, zeta) <= 0)
    zb = np.exp(1j * rng.uniform(0, 2 * np.pi, 100))
    assert np.max(np.abs(kernels.green(zb, 0.3 + 0.1j))) < 1e-12


def test_green_singular_on_diagonal():
    with pytest.raises(SingularInputError):
        kernels.green(0.25, 0.25)


def test_green_requires_interior_pole():
    with pytest.raises(DomainError):
        kernels.green(0.5, 1.0)


def test_gamma1_origin_diagonal_value():
    # gamma1(0, 0) = 5/8 from the closed form
    assert kernels.gamma1(0.0, 0.0) == pytest.approx(0.625, abs=1e-15)


def test_gamma1_symmetry(rng):
    z, zeta = _interior_pairs(rng, 300)
    assert np.max(np.abs(kernels.gamma1(z, zeta) - kernels.gamma1(zeta, z))) < 1e-13


def test_gamma1_zero_on_boundary(rng):
    zb = np.exp(1j * rng.uniform(0, 2 * np.pi, 200))
    assert np.max(np.abs(kernels.gamma1(zb, 0.4 - 0.2j))) < 1e-12


def test_gamma1_positive_interior(rng):
    z, zeta = _interior_pairs(rng, 2000)
    assert np.min(kernels.gamma1(z, zeta)) > 0


def test_compensator_positive_and_harmonic(rng):
    z, zeta = _interior_pairs(rng, 1000)
    assert np.min(kernels.compensator(z, zeta)) > 0
    # harmonicity in z by 5-point finite differences
    step = 1e-4
    pts = np.array([0.1 + 0.2j, -0.4j, 0.55 - 0.3j])
    for zeta0 in (0.3, -0.2 + 0.5j):
        lap = (
            kernels.compensator(pts + step, zeta0)
            + kernels.compensator(pts - step, zeta0)
            + kernels.compensator(pts + 1j * step, zeta0)
            + kernels.compensator(pts - 1j * step, zeta0)
            - 4.0 * kernels.compensator(pts, zeta0)
        ) / (4.0 * step * step)
        assert np.max(np.abs(lap)) < 1e-4


def test_compensator_singular_at_coincident_boundary():
    with pytest.raises(SingularInputError):
        kernels.compensator(1.0, 1.0)


def test_lap_gamma1_origin_slice(rng):
    # at z = 0: (1-|z|^2)(G + H) = log|zeta|^2 + 3/2 - 2|zeta|^2 + |zeta|^4/2
    zeta = rng.uniform(-1, 1, 400).view(complex)
    zeta = zeta[(np.abs(zeta) < 0.98) & (np.abs(zeta) > 1e-3)]
    u = np.abs(zeta) ** 2
    expected = np.log(u) + 1.5 - 2.0 * u + 0.5 * u ** 2
    assert np.max(np.abs(kernels.lap_gamma1(0.0, zeta) - expected)) < 1e-12


def test_lap_gamma1_matches_fd(rng):
    z, zeta = _interior_pairs(rng, 50)
    keep = np.abs(z - zeta) > 0.15
    z, zeta = z[keep], zeta[keep]
    step = 1e-4
    lap = (
        kernels.gamma1(z + step, zeta)
        + kernels.gamma1(z - step, zeta)
        + kernels.gamma1(z + 1j * step, zeta)
        + kernels.gamma1(z - 1j * step, zeta)
        - 4.0 * kernels.gamma1(z, zeta)
    ) / (4.0 * step * step)
    ref = kernels.lap_gamma1(z, zeta)
    assert np.max(np.abs(lap - ref) / np.maximum(np.abs(ref), 1.0)) < 1e-4


def test_compensator_circle_mean_identity():
    # mean of H(., zeta) over the unit circle = 3/2 - 2|zeta|^2 + |zeta|^4/2
    for zeta in (0.0, 0.3, 0.5 - 0.4j, 0.85j):
        u = abs(zeta) ** 2
        mean = circle_mean(lambda z: kernels.compensator(z, zeta))
        assert mean == pytest.approx(1.5 - 2.0 * u + 0.5 * u ** 2, abs=1e-10)


def test_bergman_value_and_validation():
    assert kernels.bergman(0.0, 0.0, 0.5) == pytest.approx(1.0)
    val = kernels.bergman(1.0, 0.2, 0.3)
    assert val == pytest.approx((1.0 - 0.2 * 0.3) ** -3.0)
    with pytest.raises(DomainError):
        kernels.bergman(-0.5, 0.1, 0.1)
    with pytest.raises(DomainError):
        kernels.bergman(0.0, 1.0, 0.1)
