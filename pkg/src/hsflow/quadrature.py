"""Quadrature rules on the unit disk and circle.

All integrals use the normalized measures dSigma = dx dy / pi on the disk
and dsigma = |dz| / (2 pi) on the circle, so that both have total mass 1.
"""

import numpy as np

DEFAULT_CIRCLE_NODES = 2048


def disk_nodes(n_radial=96, n_angular=256):
    """Tensor nodes/weights (z, w) with sum(w * f(z)) ~ integral f dSigma.

    Gauss-Legendre in radius, trapezoid in angle (spectrally accurate for
    smooth periodic integrands).
    """
    x, wx = np.polynomial.legendre.leggauss(n_radial)
    rho = 0.5 * (x + 1.0)
    w_rho = 0.5 * wx
    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    z = rho[:, None] * np.exp(1j * theta)[None, :]
    # integral f dSigma = 2 * int_0^1 rho * mean_theta(f) drho
    w = np.broadcast_to((2.0 * rho * w_rho)[:, None] / n_angular, z.shape)
    return z.ravel(), w.ravel().copy()


def disk_integral(f, n_radial=96, n_angular=256):
    """Integrate a vectorized callable over the unit disk against dSigma."""
    z, w = disk_nodes(n_radial, n_angular)
    return float(np.sum(w * f(z)))


def circle_nodes(n=DEFAULT_CIRCLE_NODES):
    """Equispaced nodes on the unit circle; the weight of each is 1/n."""
    theta = 2.0 * np.pi * np.arange(n) / n
    return np.exp(1j * theta)


def circle_mean(f, n=DEFAULT_CIRCLE_NODES):
    """Integrate a vectorized callable over the circle against dsigma."""
    return float(np.mean(f(circle_nodes(n))))
