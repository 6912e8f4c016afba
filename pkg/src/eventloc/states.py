"""Momentum-space states on a mass-shell grid and the Poincare actions.

Sample layouts (always complex128):

    d=1: samples[sigma, iE]
    d=2: samples[sigma, imass, irapidity]
    d=4: samples[sigma, i_lm, imass, irapidity], i_lm = l(l+1)+n packed

For d=4 the packed angular band of a state may exceed the grid's field
truncation l_max: exact spatial translations enlarge the band (a plane-wave
phase is not band-limited), and the engine accepts any state band.

Conventions: metric (+,-,-,-), hbar = 1.  A translation by x multiplies
momentum samples by exp(i k.x) with k.x = k^0 x^0 - k_vec.x_vec, so the
position-space density moves to +x.  Rotations (d=4) act per l block by the
Wigner matrix; z-boosts (d=2) shift the rapidity argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .grids import MassShellGrid
from .harmonics import n_packed, pack_lm, ylm_matrix
from .lorentz import wigner_block_packed
from .quadrature import sphere_rule


@dataclass(frozen=True)
class Channel:
    """Multiplicity channel sigma; spin j is fixed to 0 for d=4 (scalar scope)."""
    label: str
    spin: int = 0


@dataclass(frozen=True)
class WaveFunction:
    grid: MassShellGrid
    channels: tuple
    samples: np.ndarray

    def __post_init__(self):
        if not self.channels:
            raise ValueError("need at least one channel")
        object.__setattr__(self, "channels", tuple(self.channels))
        s = np.ascontiguousarray(self.samples, dtype=np.complex128)
        d = self.grid.dim
        n_sigma = len(self.channels)
        if d == 1:
            want = (n_sigma, self.grid.n_mass)
        elif d == 2:
            want = (n_sigma, self.grid.n_mass, self.grid.n_rapidity)
        else:
            if any(ch.spin != 0 for ch in self.channels):
                raise ValueError("d=4 scope is scalar channels (spin 0)")
            if s.ndim != 4:
                raise ValueError("d=4 samples must be (sigma, lm, mass, rapidity)")
            band = int(round(math.sqrt(s.shape[1]))) - 1
            if n_packed(band) != s.shape[1]:
                raise ValueError("lm axis length must be a perfect square")
            want = (n_sigma, s.shape[1], self.grid.n_mass, self.grid.n_rapidity)
        if s.shape != want:
            raise ValueError(f"samples shape {s.shape} does not match grid ({want})")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def angular_band(self) -> int:
        """Largest l carried by the packed axis (d=4)."""
        if self.dim != 4:
            raise ValueError("angular band is a d=4 notion")
        return int(round(math.sqrt(self.samples.shape[1]))) - 1

    def with_samples(self, samples: np.ndarray) -> "WaveFunction":
        return WaveFunction(grid=self.grid, channels=self.channels, samples=samples)


def norm_squared(psi: WaveFunction) -> float:
    """Quadrature of sum_sigma |psi|^2 with the invariant shell measure."""
    w = psi.grid.measure_weights()
    a2 = np.abs(psi.samples) ** 2
    if psi.dim == 1:
        return float(np.sum(a2 * w[None, :]))
    if psi.dim == 2:
        return float(np.sum(a2 * w[None, :, :]))
    return float(np.sum(a2 * w[None, None, :, :]))


def inner_product(phi: WaveFunction, psi: WaveFunction) -> complex:
    """<phi, psi> with the same measure as norm_squared."""
    if phi.grid is not psi.grid and not phi.grid.matches(psi.grid):
        raise ValueError("states live on different grids")
    if phi.samples.shape != psi.samples.shape:
        raise ValueError("states have different channel or band structure")
    w = psi.grid.measure_weights()
    prod = np.conj(phi.samples) * psi.samples
    if psi.dim == 1:
        return complex(np.sum(prod * w[None, :]))
    if psi.dim == 2:
        return complex(np.sum(prod * w[None, :, :]))
    return complex(np.sum(prod * w[None, None, :, :]))


# ---------------------------------------------------------------------------
# Poincare actions


def apply_translation(psi: WaveFunction, x, band_tol: float = 1e-17) -> WaveFunction:
    """U(x) psi: multiply by exp(i k.x); exact unitary in every dimension.

    For d=4 with a spatial component the plane-wave phase couples partial
    waves, so the state is synthesized on a sphere rule, multiplied
    pointwise, and reprojected onto an enlarged angular band chosen so the
    discarded Bessel tail is below band_tol of the state.  The default keeps
    the result exact to machine precision; a looser band_tol trades that for
    a smaller output band, which matters when the translated state feeds a
    whole-grid evaluation.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = psi.dim
    if x.shape != (d,):
        raise ValueError(f"translation vector must have {d} components")
    if d == 1:
        phase = np.exp(1j * psi.grid.energies * x[0])
        return psi.with_samples(psi.samples * phase[None, :])
    k0, kap = psi.grid.k_values()
    if d == 2:
        phase = np.exp(1j * (k0 * x[0] - kap * x[1]))
        return psi.with_samples(psi.samples * phase[None, :, :])
    return _translate_4d(psi, x, k0, kap, band_tol)


def _bessel_band_margin(arg: float, tol: float = 1e-17) -> int:
    # smallest extra band D with arg^D / (2D+1)!! below tol; the spherical
    # Bessel bound |j_D(x)| <= x^D/(2D+1)!! controls the discarded tail
    if arg <= 0.0:
        return 0
    extra = 0
    while True:
        ln = extra * math.log(arg) if arg > 0 else -math.inf
        ln -= math.lgamma(2 * extra + 2) - extra * math.log(2.0) - math.lgamma(extra + 1)
        if ln < math.log(tol):
            return extra
        extra += 1
        if extra > 120:
            raise ValueError("translation too large for the angular representation")


def _translate_4d(psi: WaveFunction, x, k0, kap, band_tol: float) -> WaveFunction:
    samples = psi.samples * np.exp(1j * k0 * x[0])[None, None, :, :]
    a_sp = x[1:]
    a_len = float(np.linalg.norm(a_sp))
    if a_len == 0.0:
        return psi.with_samples(samples)
    band = psi.angular_band
    kap_max = float(np.max(kap))
    new_band = band + _bessel_band_margin(kap_max * a_len, band_tol)
    rule = sphere_rule(2 * new_band + 4)
    y_old = ylm_matrix(band, rule.theta, rule.phi)         # (n_lm_old, n_nodes)
    y_new = y_old if new_band == band else ylm_matrix(new_band, rule.theta, rule.phi)
    khat = rule.unit_vectors()                             # (n_nodes, 3)
    # pointwise phase exp(-i kappa khat.a) per (mass, rapidity) node
    ang = khat @ a_sp                                      # (n_nodes,)
    phase = np.exp(-1j * np.multiply.outer(kap, ang))      # (n_mass, n_z, n_nodes)
    # synthesize, multiply, reproject: psi'_{lm} = sum_s w_s conj(Y_lm) phase psi(s)
    n_sigma = samples.shape[0]
    out = np.empty((n_sigma, (new_band + 1) ** 2, samples.shape[2], samples.shape[3]),
                   dtype=np.complex128)
    proj = y_new.conj() * rule.weights[None, :]            # (n_lm_new, n_nodes)
    for s in range(n_sigma):
        f = np.tensordot(samples[s], y_old, axes=([0], [0]))   # (mass, z, nodes)
        f = f * phase
        out[s] = np.moveaxis(np.tensordot(f, proj, axes=([2], [1])), 2, 0)
    return psi.with_samples(out)


def apply_rotation(psi: WaveFunction, u: np.ndarray) -> WaveFunction:
    """Rotate a d=4 state: psi'(khat) = psi(R(u)^{-1} khat), per l block."""
    if psi.dim != 4:
        raise ValueError("rotations act on d=4 states")
    band = psi.angular_band
    out = np.empty_like(psi.samples)
    for l in range(band + 1):
        lo, hi = pack_lm(l, -l), pack_lm(l, l) + 1
        block = wigner_block_packed(l, u)
        out[:, lo:hi] = np.einsum("nm,smab->snab", block, psi.samples[:, lo:hi])
    return psi.with_samples(out)


def apply_boost_1p1(psi: WaveFunction, zeta0: float, support_tol: float = 1e-10) -> WaveFunction:
    """Boost a d=2 state: psi'(mu, z) = psi(mu, z - zeta0), cubic in z.

    The rapidity grid must be wide enough that the support which leaves the
    window is below `support_tol` (relative to the state's peak), else the
    shift is refused.
    """
    if psi.dim != 2:
        raise ValueError("rapidity boosts act on d=2 states")
    z = psi.grid.rapidities
    if zeta0 == 0.0:
        return psi
    peak = np.max(np.abs(psi.samples))
    if peak == 0.0:
        return psi
    # samples at arguments z - zeta0 outside [z_min, z_max] are unknown;
    # demand the state is negligible there
    if zeta0 > 0:
        escaping = z > z[-1] - zeta0 + 1e-15
    else:
        escaping = z < z[0] - zeta0 - 1e-15
    if np.any(escaping):
        esc = np.max(np.abs(psi.samples[:, :, escaping])) if np.any(escaping) else 0.0
        if esc > support_tol * peak:
            raise ValueError(
                f"boost by {zeta0} pushes support off the rapidity grid "
                f"(edge amplitude {esc / peak:.2e} of peak)")
    out = np.empty_like(psi.samples)
    target = z - zeta0
    inside = (target >= z[0]) & (target <= z[-1])
    for s in range(psi.n_channels):
        spline = CubicSpline(z, psi.samples[s], axis=1)
        vals = spline(target[inside])
        out[s][:, inside] = vals
        out[s][:, ~inside] = 0.0
    return psi.with_samples(out)


# ---------------------------------------------------------------------------
# Built-in state families


def _gauss(x, center, width):
    return np.exp(-((x - center) ** 2) / (2.0 * width ** 2))


def make_test_state(grid: MassShellGrid, recipe: dict) -> WaveFunction:
    """Construct a normalized state from a recipe dictionary.

    Families:
      d=1  {"family": "gaussian", "center": E0, "width": s,
            "channel_weights": [complex, ...]}
      d=2  {"family": "gaussian", "center": [mu0, z0], "width": [wm, wz],
            "channel_weights": [...]}
      d=4  {"family": "gaussian_lm", "components": [{"l": int, "n": int,
            "center": [mu0, z0], "width": [wm, wz], "weight": complex}, ...],
            "channel_weights": [...]}
      any  {"family": "random", "seed": int, "channels": int, ...}
            smooth seeded random state (envelope times random coefficients).

    The result is normalized to 1 within 1e-10 (exact arithmetic then one
    division).  Channel weights split the norm as |w_sigma|^2 / sum |w|^2.
    """
    fam = recipe.get("family")
    if fam == "gaussian" and grid.dim in (1, 2):
        weights = np.asarray(recipe.get("channel_weights", [1.0]), dtype=complex)
        if grid.dim == 1:
            env = _gauss(grid.energies, recipe["center"], recipe["width"])
            raw = weights[:, None] * env[None, :]
        else:
            c, w = recipe["center"], recipe["width"]
            env = (_gauss(grid.masses, c[0], w[0])[:, None]
                   * _gauss(grid.rapidities, c[1], w[1])[None, :])
            raw = weights[:, None, None] * env[None, :, :]
    elif fam == "gaussian_lm" and grid.dim == 4:
        weights = np.asarray(recipe.get("channel_weights", [1.0]), dtype=complex)
        band = max(int(comp["l"]) for comp in recipe["components"])
        raw = np.zeros((weights.size, n_packed(band), grid.n_mass, grid.n_rapidity),
                       dtype=complex)
        for comp in recipe["components"]:
            c, w = comp["center"], comp["width"]
            env = (_gauss(grid.masses, c[0], w[0])[:, None]
                   * _gauss(grid.rapidities, c[1], w[1])[None, :])
            raw[:, pack_lm(comp["l"], comp["n"])] += complex(comp.get("weight", 1.0)) * env
        raw *= weights[:, None, None, None]
    elif fam == "random":
        raw = _random_state_samples(grid, recipe)
    else:
        raise ValueError(f"unsupported state family {fam!r} for d={grid.dim}")
    channels = tuple(Channel(label=f"ch{i}") for i in range(raw.shape[0]))
    psi = WaveFunction(grid=grid, channels=channels, samples=raw)
    n2 = norm_squared(psi)
    if n2 <= 0.0:
        raise ValueError("recipe produced the zero state")
    return psi.with_samples(psi.samples / math.sqrt(n2))


def _random_state_samples(grid: MassShellGrid, recipe: dict) -> np.ndarray:
    rng = np.random.default_rng(recipe.get("seed", 0))
    n_sigma = int(recipe.get("channels", 1))
    if grid.dim == 1:
        e = grid.energies
        env = _gauss(e, 0.5 * (e[0] + e[-1]), 0.18 * (e[-1] - e[0]))
        coef = rng.normal(size=(n_sigma, 3, 2)) @ np.array([1.0, 1j])
        pows = np.stack([np.ones_like(e), (e - e.mean()) / e.std(), ((e - e.mean()) / e.std()) ** 2])
        return np.einsum("sp,pe->se", coef, pows) * env[None, :]
    if grid.dim == 2:
        m, z = grid.masses, grid.rapidities
        env = (_gauss(m, 0.5 * (m[0] + m[-1]), 0.16 * (m[-1] - m[0]))[:, None]
               * _gauss(z, 0.5 * (z[0] + z[-1]), 0.16 * (z[-1] - z[0]))[None, :])
        coef = rng.normal(size=(n_sigma, 2, 2, 2)) @ np.array([1.0, 1j])
        mm = (m - m.mean()) / m.std()
        zz = (z - z.mean()) / z.std()
        pows = np.stack([np.ones((m.size, z.size)), mm[:, None] * np.ones_like(zz)[None, :],
                         np.ones_like(mm)[:, None] * zz[None, :],
                         mm[:, None] * zz[None, :]])[:4]
        modes = np.einsum("sp,pmz->smz", coef.reshape(n_sigma, 4), pows)
        return modes * env[None, :, :]
    band = int(recipe.get("band", min(1, grid.l_max)))
    m, z = grid.masses, grid.rapidities
    env = (_gauss(m, 0.5 * (m[0] + m[-1]), 0.16 * (m[-1] - m[0]))[:, None]
           * _gauss(z, 0.5 * (z[0] + z[-1]), 0.14 * (z[-1] - z[0]))[None, :])
    coef = rng.normal(size=(n_sigma, n_packed(band), 2)) @ np.array([1.0, 1j])
    return coef[:, :, None, None] * env[None, None, :, :]


def make_orthonormal_basis(grid: MassShellGrid, n: int, center, width,
                           n_channels: int = 1, channel: int = 0) -> list[WaveFunction]:
    """n orthonormal states: polynomials times a Gaussian envelope, QR'd.

    Degrees 0..n-1 in the (scaled) mass coordinate, all in one channel, so
    the family is exactly orthonormal in the momentum inner product after a
    weighted QR.  Localization properties vary across members, which is what
    region-operator spectra need.
    """
    if n < 1:
        raise ValueError("need at least one basis state")
    if not 0 <= channel < n_channels:
        raise ValueError("channel index out of range")
    mu = grid.masses
    env_mu = _gauss(mu, center, width)
    s = (mu - center) / width
    cols = np.stack([env_mu * s**k for k in range(n)], axis=-1)  # (n_mass, n)
    if grid.dim == 1:
        w = grid.measure_weights()
        raw = cols  # (nodes, n)
    else:
        z = grid.rapidities
        env_z = _gauss(z, float(z.mean()), 0.25 * (z[-1] - z[0]) if z[-1] > z[0] else 1.0)
        raw = (cols[:, None, :] * env_z[None, :, None]).reshape(-1, n)
        w = grid.measure_weights().ravel()
    sqw = np.sqrt(w)
    q, r = np.linalg.qr(sqw[:, None] * raw)
    q = q * np.sign(np.diagonal(r))[None, :]
    vecs = q / sqw[:, None]
    out = []
    channels = tuple(Channel(label=f"ch{i}") for i in range(n_channels))
    for k in range(n):
        if grid.dim == 1:
            samples = np.zeros((n_channels, grid.n_mass), dtype=complex)
            samples[channel] = vecs[:, k]
        elif grid.dim == 2:
            samples = np.zeros((n_channels, grid.n_mass, grid.n_rapidity), dtype=complex)
            samples[channel] = vecs[:, k].reshape(grid.n_mass, grid.n_rapidity)
        else:
            samples = np.zeros(
                (n_channels, 1, grid.n_mass, grid.n_rapidity), dtype=complex
            )
            samples[channel, 0] = vecs[:, k].reshape(grid.n_mass, grid.n_rapidity)
        out.append(WaveFunction(grid=grid, channels=channels, samples=samples))
    return out
