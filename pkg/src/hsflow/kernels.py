"""Closed-form kernels on the unit disk.

Provides the Green function of the Laplacian, the Green function of the
weighted biharmonic operator Delta (1-|z|^2)^{-1} Delta with Dirichlet
data, the associated harmonic boundary kernel (``compensator``), and the
standard weighted Bergman kernels.  The Laplacian convention throughout is
Delta = d^2/(dz dzbar), i.e. one quarter of the usual one.

All functions accept complex scalars or arrays and broadcast.
"""

import numpy as np

from .errors import DomainError, SingularInputError

#: points closer than this to the diagonal are treated as coincident
DIAGONAL_TOL = 1e-8

#: slack allowed when checking membership in the closed disk
BOUNDARY_TOL = 1e-12


def _as_complex(z):
    return np.asarray(z, dtype=complex)


def _check_closed_disk(z, name="z"):
    if np.any(np.abs(z) > 1.0 + BOUNDARY_TOL):
        raise DomainError(f"{name} must lie in the closed unit disk")


def _check_interior(z, name="zeta"):
    if np.any(np.abs(z) >= 1.0 - BOUNDARY_TOL):
        raise DomainError(f"{name} must lie strictly inside the unit disk")


def green(z, zeta):
    """Green function for the Laplacian: log |(z-zeta)/(1 - conj(zeta) z)|^2.

    Symmetric, nonpositive on the closed disk, zero for |z| = 1.
    """
    z = _as_complex(z)
    zeta = _as_complex(zeta)
    _check_closed_disk(z)
    _check_interior(zeta)
    if np.any(np.abs(z - zeta) < DIAGONAL_TOL):
        raise SingularInputError("green is singular on the diagonal z == zeta")
    val = np.log(np.abs((z - zeta) / (1.0 - np.conj(zeta) * z)) ** 2)
    return val if val.ndim else float(val)


def gamma1(z, zeta):
    """Green function of Delta (1-|z|^2)^{-1} Delta with Dirichlet data.

    Positive for interior pairs and zero (with vanishing gradient) on
    |z| = 1.  On the diagonal the logarithmic term is evaluated as its
    limit 0 (removable: r^2 log r^2 -> 0).
    """
    z = _as_complex(z)
    zeta = _as_complex(zeta)
    _check_closed_disk(z)
    _check_interior(zeta)
    az2 = np.abs(z) ** 2
    bz2 = np.abs(zeta) ** 2
    d2 = np.abs(z - zeta) ** 2
    coeff = d2 - 0.25 * np.abs(z ** 2 - zeta ** 2) ** 2
    diagonal = d2 < DIAGONAL_TOL ** 2
    ratio2 = np.abs((z - zeta) / (1.0 - np.conj(zeta) * z)) ** 2
    g = np.log(np.where(diagonal, 1.0, ratio2))
    log_term = np.where(diagonal, 0.0, coeff * g)
    cross = np.abs(1.0 - z * np.conj(zeta)) ** 2
    bracket = (
        7.0
        - az2
        - bz2
        - az2 * bz2
        - 4.0 * np.real(z * np.conj(zeta))
        - 2.0 * (1.0 - az2) * (1.0 - bz2) * (1.0 - az2 * bz2) / cross
    )
    val = log_term + 0.125 * (1.0 - az2) * (1.0 - bz2) * bracket
    return val if val.ndim else float(val)


def compensator(z, zeta):
    """Harmonic compensator H(z, zeta).

    Harmonic in z for fixed zeta, positive on the closed bidisk away from
    coincident boundary points.
    """
    z = _as_complex(z)
    zeta = _as_complex(zeta)
    _check_closed_disk(z)
    _check_closed_disk(zeta, name="zeta")
    prod = 1.0 - z * np.conj(zeta)
    if np.any(np.abs(prod) < DIAGONAL_TOL):
        raise SingularInputError(
            "compensator is singular at coincident boundary points"
        )
    az2 = np.abs(z) ** 2
    bz2 = np.abs(zeta) ** 2
    val = (1.0 - bz2) * (
        0.5 * (3.0 - bz2) * (1.0 - az2 * bz2) / np.abs(prod) ** 2
        + (1.0 - bz2) * np.real(z * np.conj(zeta) / prod ** 2)
    )
    return val if val.ndim else float(val)


def lap_gamma1(z, zeta):
    """Laplacian in z of gamma1: (1-|z|^2) (G(z,zeta) + H(z,zeta))."""
    z = _as_complex(z)
    val = (1.0 - np.abs(z) ** 2) * (green(z, zeta) + compensator(z, zeta))
    return val if np.ndim(val) else float(val)


def bergman(alpha, z, zeta):
    """Weighted Bergman kernel (1 - z conj(zeta))^{-(2+alpha)}.

    Principal branch; Hermitian in (z, zeta).
    """
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    z = _as_complex(z)
    zeta = _as_complex(zeta)
    _check_interior(z, name="z")
    _check_interior(zeta)
    val = (1.0 - z * np.conj(zeta)) ** (-(2.0 + alpha))
    return val if val.ndim else complex(val)
