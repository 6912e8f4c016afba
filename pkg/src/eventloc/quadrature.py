"""Quadrature rules used throughout the package.

Policy: Gauss-Legendre wherever the integrand is smooth on a finite window
(mass and rapidity windows, sphere polar angle, rapidity integrals for boost
matrix elements); trapezoid only on uniform grids where the integrand is
smooth and decays inside the window, which makes the rule spectrally
accurate by Poisson summation (energy grids, spacetime grids).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss


def gauss_legendre(a: float, b: float, n: int):
    """Nodes and weights of the n-point Gauss-Legendre rule on [a, b]."""
    if n < 1:
        raise ValueError("need at least one node")
    t, w = leggauss(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * t, half * w


def uniform_grid(a: float, b: float, n: int):
    """Endpoint-inclusive uniform nodes with their trapezoid weights."""
    if n < 2:
        raise ValueError("need at least two nodes")
    x = np.linspace(a, b, n)
    w = np.full(n, x[1] - x[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    return x, w


@dataclass(frozen=True)
class SphereRule:
    """Product quadrature on the unit sphere, exact for band-limited functions.

    Gauss-Legendre in cos(theta) times a uniform phi grid: exact for any
    integrand whose harmonic content has degree l <= band in theta and
    azimuthal order |m| <= band, provided the node counts below.
    """

    theta: np.ndarray   # (n_nodes,) flattened polar angles
    phi: np.ndarray     # (n_nodes,)
    weights: np.ndarray  # (n_nodes,), sums to 4 pi

    @property
    def n_nodes(self) -> int:
        return self.theta.size

    def unit_vectors(self) -> np.ndarray:
        """Cartesian unit vectors, shape (n_nodes, 3)."""
        st = np.sin(self.theta)
        return np.stack(
            [st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)],
            axis=1,
        )


def sphere_rule(band: int) -> SphereRule:
    """Sphere rule integrating products of harmonics up to total degree `band`.

    n_theta Gauss nodes integrate cos(theta)-polynomials up to degree
    2 n_theta - 1 >= band; n_phi uniform nodes kill all e^{i m phi} with
    0 < |m| <= n_phi - 1 >= band.
    """
    if band < 0:
        raise ValueError("band must be nonnegative")
    n_theta = band // 2 + 1
    n_phi = band + 1
    ct, wt = leggauss(n_theta)
    ph = 2.0 * np.pi * np.arange(n_phi) / n_phi
    wp = 2.0 * np.pi / n_phi
    theta = np.repeat(np.arccos(ct), n_phi)
    phi = np.tile(ph, n_theta)
    weights = np.repeat(wt * wp, n_phi)
    return SphereRule(theta=theta, phi=phi, weights=weights)
