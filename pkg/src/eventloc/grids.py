"""Discretized positive-mass shells for d in {1, 2, 4}.

The continuous direct integral over masses is replaced by a finite
quadrature grid; at least two mass nodes are required so no single
irreducible representation is picked out (the finite stand-in for a purely
continuous mass spectrum).  All energies and masses are strictly positive:
only positive-energy representations enter.

Shell coordinates and measures:

* d=1: nodes are energies E with weights for dE.
* d=2: nodes are (mass, rapidity) products, k = (mu cosh z, mu sinh z),
  measure mu dmu dz.
* d=4: nodes are (mass, rapidity >= 0) products with the angular part kept
  in partial waves up to the grid's l_max; radial measure
  mu^3 sinh^2(z) dmu dz, with the sphere handled exactly elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import gauss_legendre, uniform_grid


@dataclass(frozen=True)
class MassShellGrid:
    dim: int
    masses: np.ndarray          # energies for d=1
    mass_weights: np.ndarray
    rapidities: np.ndarray | None = None
    rapidity_weights: np.ndarray | None = None
    l_max: int | None = None    # field angular truncation, d=4 only

    def __post_init__(self):
        if self.dim not in (1, 2, 4):
            raise ValueError("dim must be 1, 2 or 4")
        m = np.asarray(self.masses, dtype=float)
        w = np.asarray(self.mass_weights, dtype=float)
        if m.ndim != 1 or m.size < 2:
            raise ValueError("need at least 2 mass/energy nodes (continuous-spectrum surrogate)")
        if np.any(m <= 0.0):
            raise ValueError("masses/energies must be strictly positive")
        if np.any(np.diff(m) <= 0.0):
            raise ValueError("mass/energy nodes must be strictly increasing")
        if w.shape != m.shape or np.any(w <= 0.0):
            raise ValueError("mass weights must be positive, one per node")
        object.__setattr__(self, "masses", _frozen(m))
        object.__setattr__(self, "mass_weights", _frozen(w))
        if self.dim == 1:
            if self.rapidities is not None or self.l_max is not None:
                raise ValueError("d=1 grids carry no rapidity axis or l_max")
            return
        z = np.asarray(self.rapidities, dtype=float)
        wz = np.asarray(self.rapidity_weights, dtype=float)
        if z.ndim != 1 or z.size < 2 or np.any(np.diff(z) <= 0.0):
            raise ValueError("rapidity nodes must be an increasing vector with >= 2 entries")
        if wz.shape != z.shape or np.any(wz <= 0.0):
            raise ValueError("rapidity weights must be positive, one per node")
        object.__setattr__(self, "rapidities", _frozen(z))
        object.__setattr__(self, "rapidity_weights", _frozen(wz))
        if self.dim == 2:
            if self.l_max is not None:
                raise ValueError("l_max is a d=4 field")
        else:
            if np.any(z < 0.0):
                raise ValueError("d=4 rapidities must be nonnegative")
            if self.l_max is None or self.l_max < 0:
                raise ValueError("d=4 grids need l_max >= 0")

    # -- sizes ------------------------------------------------------------

    @property
    def n_mass(self) -> int:
        return self.masses.size

    @property
    def n_rapidity(self) -> int:
        return 0 if self.rapidities is None else self.rapidities.size

    @property
    def energies(self) -> np.ndarray:
        if self.dim != 1:
            raise ValueError("energies are the d=1 axis")
        return self.masses

    # -- node products -----------------------------------------------------

    def k_values(self):
        """On-shell momentum components at the nodes.

        d=1: (E,) arrays; d>=2: (k0, k_spatial_magnitude) arrays of shape
        (n_mass, n_rapidity).
        """
        if self.dim == 1:
            return (self.masses,)
        mu = self.masses[:, None]
        z = self.rapidities[None, :]
        return mu * np.cosh(z), mu * np.sinh(z)

    def measure_weights(self) -> np.ndarray:
        """Quadrature weights of the invariant measure at the nodes."""
        if self.dim == 1:
            return self.mass_weights
        mu = self.masses[:, None]
        wprod = self.mass_weights[:, None] * self.rapidity_weights[None, :]
        if self.dim == 2:
            return mu * wprod
        return mu ** 3 * np.sinh(self.rapidities[None, :]) ** 2 * wprod

    def uniform_energy_spacing(self) -> float | None:
        """Spacing of the d=1 energy grid if it is uniform, else None."""
        if self.dim != 1:
            return None
        return self.uniform_mass_spacing()

    def uniform_mass_spacing(self) -> float | None:
        """Spacing of the mass nodes if they are equispaced, else None."""
        d = np.diff(self.masses)
        h = d[0]
        if np.allclose(d, h, rtol=1e-12, atol=0.0):
            return float(h)
        return None

    def matches(self, other: "MassShellGrid") -> bool:
        """Node-for-node equality; kernels use this to reject foreign states."""
        if self.dim != other.dim or self.l_max != other.l_max:
            return False
        if not np.array_equal(self.masses, other.masses):
            return False
        if not np.array_equal(self.mass_weights, other.mass_weights):
            return False
        if self.rapidities is None:
            return other.rapidities is None
        if other.rapidities is None:
            return False
        return np.array_equal(self.rapidities, other.rapidities) and np.array_equal(
            self.rapidity_weights, other.rapidity_weights
        )


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def energy_grid_1d(e_min: float, e_max: float, n: int, rule: str = "uniform") -> MassShellGrid:
    """d=1 grid on [e_min, e_max].

    `uniform` nodes carry trapezoid weights — spectrally accurate for
    smooth states decaying inside the window, and the fast-transform field
    path needs the even spacing.  `gauss` is available when the state is
    treated as a plain quadrature problem.
    """
    if rule == "uniform":
        x, w = uniform_grid(e_min, e_max, n)
    elif rule == "gauss":
        x, w = gauss_legendre(e_min, e_max, n)
    else:
        raise ValueError(f"unknown rule {rule!r}")
    return MassShellGrid(dim=1, masses=x, mass_weights=w)


def _trapezoid_nodes(lo: float, hi: float, n: int):
    x = np.linspace(lo, hi, n)
    w = np.full(n, (hi - lo) / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return x, w


def shell_grid_2d(
    mass_window, n_mass: int, zeta_half_width: float, n_zeta: int, rule: str = "gauss"
) -> MassShellGrid:
    """d=2 grid: mass window times rapidity window [-Z, Z].

    rule "gauss" uses Gauss-Legendre nodes on both axes.  rule "uniform"
    uses equispaced nodes with trapezoid weights; for states that decay
    inside the windows this is spectrally accurate and keeps the mass axis
    evenly spaced, which the chirp-transform evaluation path requires.
    """
    if rule == "gauss":
        m, wm = gauss_legendre(mass_window[0], mass_window[1], n_mass)
        z, wz = gauss_legendre(-zeta_half_width, zeta_half_width, n_zeta)
    elif rule == "uniform":
        m, wm = _trapezoid_nodes(mass_window[0], mass_window[1], n_mass)
        z, wz = _trapezoid_nodes(-zeta_half_width, zeta_half_width, n_zeta)
    else:
        raise ValueError(f"unknown rule {rule!r}")
    return MassShellGrid(dim=2, masses=m, mass_weights=wm, rapidities=z, rapidity_weights=wz)


def shell_grid_4d(mass_window, n_mass: int, zeta_max: float, n_zeta: int, l_max: int) -> MassShellGrid:
    """d=4 grid: Gauss-Legendre in mass and in rapidity on [0, zeta_max]."""
    m, wm = gauss_legendre(mass_window[0], mass_window[1], n_mass)
    z, wz = gauss_legendre(0.0, zeta_max, n_zeta)
    return MassShellGrid(dim=4, masses=m, mass_weights=wm, rapidities=z,
                         rapidity_weights=wz, l_max=l_max)
