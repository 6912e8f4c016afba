"""Field evaluation: from a state and a kernel to amplitudes over spacetime.

The object computed here is the family of amplitudes

    Psi_gamma(x) = (2 pi)^{-d/2} * sum_nodes W e^{-i x.k} D_gamma(k) (F_gamma psi)(k)

with W the invariant-measure weights of the shell grid, D the homogeneous
factor (trivial for d = 1, the character e^{i q zeta} for d = 2, the
assembled matrix element for d = 4), and x.k = x^0 k^0 - x_vec . k_vec.
Densities, probabilities and moments built from these live in measures.py.

Strategies for d <= 2 rectangular grids:

  "direct"  phase summation over all (node, point) pairs via the compiled
            backend; works for any node layout.
  "fft"     d = 1 with a uniform energy grid only: the same sum arranged as
            a chirp-z transform, exact to roundoff, O(n log n).  Refused
            when no exact fast path exists (d = 2 nodes are not a lattice).
  "auto"    "fft" when admissible, else "direct".

For d = 4 fields are evaluated in a time-radial representation: for each
(t, r) the amplitude is expanded over spherical harmonics of the position
direction; coefficients come from the spherical-wave expansion of the plane
wave, which turns the angular integral into a finite coupling table.  There
is no interpolation anywhere: values at arbitrary points are fresh sums.

evaluate_field refuses kernels whose Gram check fails at 1e-8 and grids
whose spacing undersamples the bandwidth of the integrand (Nyquist).
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import czt
from scipy.special import spherical_jn

from ._accel import phase_sum
from .grids import _frozen
from .harmonics import triple_y_table, ylm_matrix
from .kernels import KernelFamily, validate_isometry, validate_subnormalization
from .lorentz import BoostElementTable
from .quadrature import gauss_legendre, uniform_grid
from .states import WaveFunction

_GATE_TOL = 1e-8
_TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# evaluation domains


@dataclass(frozen=True)
class SpacetimeGrid:
    """Uniform rectangular grid, axis 0 being time.

    Each axis is an ascending equally spaced array with at least two nodes;
    integration weights are trapezoidal, i.e. node-centered cells clipped to
    the bounds.
    """

    axes: tuple[np.ndarray, ...]

    def __post_init__(self):
        axes = []
        for a in self.axes:
            a = np.asarray(a, dtype=float)
            if a.ndim != 1 or a.size < 2:
                raise ValueError("each grid axis needs at least two nodes")
            d = np.diff(a)
            if d[0] <= 0 or not np.allclose(d, d[0], rtol=1e-12, atol=0.0):
                raise ValueError("grid axes must be ascending and uniform")
            axes.append(_frozen(a))
        if len(axes) not in (1, 2, 4):
            raise ValueError("supported spacetime dimensions are 1, 2 and 4")
        object.__setattr__(self, "axes", tuple(axes))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.axes)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(float(a[1] - a[0]) for a in self.axes)

    @property
    def bounds(self) -> tuple[tuple[float, float], ...]:
        return tuple((float(a[0]), float(a[-1])) for a in self.axes)

    def points(self) -> np.ndarray:
        """All nodes as a (n_points, dim) array, C-order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def axis_weights(self) -> tuple[np.ndarray, ...]:
        out = []
        for a, h in zip(self.axes, self.spacings):
            w = np.full(a.size, h)
            w[0] = w[-1] = 0.5 * h
            out.append(w)
        return tuple(out)

    def weights(self) -> np.ndarray:
        """Trapezoidal product weights, shaped like the grid."""
        return functools.reduce(np.multiply.outer, self.axis_weights())


def spacetime_grid(bounds, shape) -> SpacetimeGrid:
    """Grid from per-axis (lo, hi) bounds and node counts."""
    if len(bounds) != len(shape):
        raise ValueError("bounds and shape must have equal length")
    axes = [np.linspace(lo, hi, int(n)) for (lo, hi), n in zip(bounds, shape)]
    return SpacetimeGrid(tuple(axes))


@dataclass(frozen=True)
class TimeRadialGrid:
    """d = 4 evaluation domain: uniform times x Gauss-Legendre radii.

    Covers the ball r <= r_max over a finite time window.  Radial weights
    carry no r^2 factor; measures.py applies it where the volume element
    appears.
    """

    t_nodes: np.ndarray
    t_weights: np.ndarray
    r_nodes: np.ndarray
    r_weights: np.ndarray

    def __post_init__(self):
        t, wt = np.asarray(self.t_nodes, float), np.asarray(self.t_weights, float)
        r, wr = np.asarray(self.r_nodes, float), np.asarray(self.r_weights, float)
        if t.ndim != 1 or t.size < 2 or wt.shape != t.shape:
            raise ValueError("bad time axis")
        d = np.diff(t)
        if d[0] <= 0 or not np.allclose(d, d[0], rtol=1e-12, atol=0.0):
            raise ValueError("time axis must be ascending and uniform")
        if r.ndim != 1 or r.size < 2 or wr.shape != r.shape:
            raise ValueError("bad radial axis")
        if np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ValueError("radial nodes must be positive ascending")
        for name, a in (("t_nodes", t), ("t_weights", wt), ("r_nodes", r), ("r_weights", wr)):
            object.__setattr__(self, name, _frozen(a))

    @property
    def t_spacing(self) -> float:
        return float(self.t_nodes[1] - self.t_nodes[0])

    @property
    def r_max(self) -> float:
        return float(self.r_nodes[-1])


def time_radial_grid(t_min: float, t_max: float, n_t: int, r_max: float, n_r: int) -> TimeRadialGrid:
    t, wt = uniform_grid(t_min, t_max, n_t)
    r, wr = gauss_legendre(0.0, r_max, n_r)
    return TimeRadialGrid(t, wt, r, wr)


@dataclass(frozen=True)
class EventRegion:
    """Union of pairwise disjoint axis-aligned boxes.

    los/his have shape (n_box, dim).  Boxes may share faces but not
    interiors; membership uses the half-open convention [lo, hi).
    """

    los: np.ndarray
    his: np.ndarray

    def __post_init__(self):
        los = np.atleast_2d(np.asarray(self.los, dtype=float))
        his = np.atleast_2d(np.asarray(self.his, dtype=float))
        if los.shape != his.shape or los.ndim != 2 or los.shape[0] == 0:
            raise ValueError("los and his must both have shape (n_box, dim)")
        if np.any(his <= los):
            raise ValueError("each box needs hi > lo on every axis")
        n = los.shape[0]
        for i in range(n):
            for j in range(i + 1, n):
                apart = (his[i] <= los[j]) | (his[j] <= los[i])
                if not np.any(apart):
                    raise ValueError(f"boxes {i} and {j} overlap")
        object.__setattr__(self, "los", _frozen(los))
        object.__setattr__(self, "his", _frozen(his))

    @staticmethod
    def box(lo, hi) -> "EventRegion":
        return EventRegion(np.asarray(lo, float)[None, :], np.asarray(hi, float)[None, :])

    @property
    def dim(self) -> int:
        return self.los.shape[1]

    @property
    def n_boxes(self) -> int:
        return self.los.shape[0]

    def union(self, other: "EventRegion") -> "EventRegion":
        return EventRegion(np.vstack([self.los, other.los]), np.vstack([self.his, other.his]))

    def volume(self) -> float:
        return float(np.sum(np.prod(self.his - self.los, axis=1)))

    def contains(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        inside = (p[:, None, :] >= self.los[None]) & (p[:, None, :] < self.his[None])
        return np.any(np.all(inside, axis=2), axis=1)

    def complement_within(self, lo, hi) -> "EventRegion":
        """Bounding box minus this region, as disjoint slabs.

        Implemented for a single box strictly inside the bounds.
        """
        if self.n_boxes != 1:
            raise ValueError("complement is available for single-box regions")
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        b_lo, b_hi = self.los[0].copy(), self.his[0].copy()
        if np.any(b_lo < lo) or np.any(b_hi > hi):
            raise ValueError("region must lie inside the bounding box")
        pieces_lo, pieces_hi = [], []
        cur_lo, cur_hi = lo.copy(), hi.copy()
        for a in range(self.dim):
            if b_lo[a] > cur_lo[a]:
                p_lo, p_hi = cur_lo.copy(), cur_hi.copy()
                p_hi[a] = b_lo[a]
                pieces_lo.append(p_lo)
                pieces_hi.append(p_hi)
            if b_hi[a] < cur_hi[a]:
                p_lo, p_hi = cur_lo.copy(), cur_hi.copy()
                p_lo[a] = b_hi[a]
                pieces_lo.append(p_lo)
                pieces_hi.append(p_hi)
            cur_lo[a], cur_hi[a] = b_lo[a], b_hi[a]
        if not pieces_lo:
            raise ValueError("region fills the bounding box; empty complement")
        return EventRegion(np.array(pieces_lo), np.array(pieces_hi))

    def clipped(self, lo, hi) -> tuple["EventRegion | None", bool]:
        """Intersection with a bounding box, and whether anything was cut."""
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        new_lo = np.maximum(self.los, lo)
        new_hi = np.minimum(self.his, hi)
        keep = np.all(new_hi > new_lo, axis=1)
        cut = bool(np.any(new_lo != self.los) or np.any(new_hi != self.his))
        if not np.any(keep):
            return None, True
        return EventRegion(new_lo[keep], new_hi[keep]), cut

    def coverage_weights(self, grid: SpacetimeGrid) -> np.ndarray:
        """Per-node integration weights of the region, shaped like the grid.

        Node cells are the trapezoidal cells of the grid; a region boundary
        crossing a cell contributes the exact overlap fraction, so weights
        of a region and of its complement within the grid bounds add up to
        the plain trapezoidal weights.
        """
        if self.dim != grid.dim:
            raise ValueError("region and grid dimensions differ")
        total = None
        for b in range(self.n_boxes):
            factors = []
            for a in range(grid.dim):
                x = grid.axes[a]
                h = grid.spacings[a]
                cell_lo = np.maximum(x - 0.5 * h, x[0])
                cell_hi = np.minimum(x + 0.5 * h, x[-1])
                ov = np.minimum(cell_hi, self.his[b, a]) - np.maximum(cell_lo, self.los[b, a])
                factors.append(np.clip(ov, 0.0, None))
            w = functools.reduce(np.multiply.outer, factors)
            total = w if total is None else total + w
        return total


# ---------------------------------------------------------------------------
# evaluation plans


class _PlanDirect:
    """d <= 2: flattened momentum nodes with premultiplied amplitudes."""

    def __init__(self, kernel: KernelFamily, psi: WaveFunction):
        grid = psi.grid
        self.dim = grid.dim
        if grid.dim == 1:
            e = grid.energies
            k = e[:, None]
            w = grid.measure_weights()
            fpsi = np.einsum("gsn,sn->gn", kernel.F, psi.samples)
            amps = w[None, :] * fpsi / math.sqrt(_TWO_PI)
        else:
            k0, kap = grid.k_values()
            k = np.stack([k0.ravel(), kap.ravel()], axis=-1)
            w = grid.measure_weights().ravel()
            fpsi = np.einsum("gsm,smz->gmz", kernel.F, psi.samples)
            fpsi = fpsi.reshape(kernel.n_gamma, -1)
            char = np.exp(1j * np.outer(kernel.q_values, grid.rapidities))
            char = np.broadcast_to(char[:, None, :], (kernel.n_gamma, grid.n_mass, grid.n_rapidity))
            amps = w[None, :] * char.reshape(kernel.n_gamma, -1) * fpsi / _TWO_PI
        sign = np.ones(self.dim)
        sign[1:] = -1.0
        self.k = np.ascontiguousarray(k)
        self.k_lowered = np.ascontiguousarray(k * sign)
        self.amps = np.ascontiguousarray(amps)

    def k_ranges(self) -> np.ndarray:
        """Per-axis (min, max) of the momentum components, shape (dim, 2)."""
        return np.stack([self.k.min(axis=0), self.k.max(axis=0)], axis=-1)

    def values_at(self, points: np.ndarray) -> np.ndarray:
        return phase_sum(self.k_lowered, self.amps, np.ascontiguousarray(points))


class _Plan4:
    """d = 4: spherical-wave representation of the evaluation map.

    Precomputes A[gamma, ln, LM, node], the full weight of each momentum
    node in the (t, r)-coefficient

        c_{gamma ln LM}(t, r) = sum_node A * exp(-i k0 t) * j_L(kappa r),

    where A bundles the measure weight, the coupling integral of the three
    spherical harmonics, the boost matrix element d_l(zeta), the i^L and
    normalization constants, and the channel contraction F psi.
    """

    def __init__(self, kernel: KernelFamily, psi: WaveFunction):
        grid = psi.grid
        self.kernel = kernel
        self.l_field = grid.l_max
        self.band_state = psi.angular_band
        self.l_total = self.l_field + self.band_state
        n_gamma = kernel.n_gamma

        g_amp = np.einsum("gsm,spmz->gpmz", kernel.F, psi.samples)
        n_state = g_amp.shape[1]
        g_amp = g_amp.reshape(n_gamma, n_state, -1)
        n_nodes = g_amp.shape[2]

        coupling = triple_y_table(self.l_total, self.l_field, self.band_state)
        # P[g, ln, LM, node] = sum_{l'n'} coupling[LM, ln, l'n'] G[g, l'n', node]
        p = np.einsum("abc,gcq->gbaq", coupling, g_amp)

        k0, kap = grid.k_values()
        self.k0 = k0.ravel()
        self.kappa = kap.ravel()
        w = grid.measure_weights().ravel()

        zetas = grid.rapidities
        n_lnf = (self.l_field + 1) ** 2
        l_of_ln = np.array([int(math.isqrt(i)) for i in range(n_lnf)])
        self.tables: dict[complex, BoostElementTable] = {}
        d_fac = np.empty((n_gamma, n_lnf, n_nodes), dtype=complex)
        for g, lab in enumerate(kernel.gammas):
            tab = self.tables.get(lab.c)
            if tab is None:
                tab = BoostElementTable(lab.c, self.l_field, zetas)
                self.tables[lab.c] = tab
            # entries[l, zeta-index] spread over the flattened (mass, zeta) nodes
            per_node = np.repeat(tab.entries[:, None, :], grid.n_mass, axis=1)
            d_fac[g] = per_node.reshape(self.l_field + 1, n_nodes)[l_of_ln]

        n_lm = (self.l_total + 1) ** 2
        self.l_of_lm = np.array([int(math.isqrt(i)) for i in range(n_lm)])
        c_l = np.sqrt(4.0 * np.pi / (2 * l_of_ln + 1))
        i_pow = 1j ** self.l_of_lm
        norm = 4.0 * np.pi / _TWO_PI ** 2

        a = p * d_fac[:, :, None, :] * w[None, None, None, :]
        a *= norm * c_l[None, :, None, None] * i_pow[None, None, :, None]
        self.a = a

    def k_ranges(self) -> np.ndarray:
        lo = np.array([self.k0.min(), -self.kappa.max()])
        hi = np.array([self.k0.max(), self.kappa.max()])
        return np.stack([lo, hi], axis=-1)

    def _lm_slice(self, l: int) -> slice:
        return slice(l * l, (l + 1) * (l + 1))

    def coeffs_on(self, dom: TimeRadialGrid) -> np.ndarray:
        n_gamma, n_ln, n_lm, _ = self.a.shape
        n_t, n_r = dom.t_nodes.size, dom.r_nodes.size
        e_phase = np.exp(-1j * np.outer(self.k0, dom.t_nodes))
        out = np.empty((n_gamma, n_ln, n_lm, n_t, n_r), dtype=complex)
        flat = out.reshape(n_gamma * n_ln, n_lm, n_t, n_r)
        for l in range(self.l_total + 1):
            sl = self._lm_slice(l)
            width = 2 * l + 1
            bess = spherical_jn(l, np.outer(self.kappa, dom.r_nodes))
            a_l = self.a[:, :, sl, :].reshape(-1, self.k0.size)
            for j in range(n_t):
                block = (a_l * e_phase[:, j]) @ bess
                flat[:, sl, j, :] = block.reshape(n_gamma * n_ln, width, n_r)
        return out

    def values_at(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 4:
            raise ValueError("points must have shape (n, 4)")
        n_gamma, n_ln = self.a.shape[:2]
        n_pts = pts.shape[0]
        xvec = pts[:, 1:]
        r = np.linalg.norm(xvec, axis=1)
        safe = np.where(r > 0, r, 1.0)
        khat = xvec / safe[:, None]
        khat[r == 0] = (0.0, 0.0, 1.0)
        theta = np.arccos(np.clip(khat[:, 2], -1.0, 1.0))
        phi = np.arctan2(khat[:, 1], khat[:, 0])
        sph = ylm_matrix(self.l_total, theta, phi)
        e_phase = np.exp(-1j * np.outer(self.k0, pts[:, 0]))
        out = np.zeros((n_gamma, n_ln, n_pts), dtype=complex)
        for l in range(self.l_total + 1):
            sl = self._lm_slice(l)
            width = 2 * l + 1
            radial = e_phase * spherical_jn(l, np.outer(self.kappa, r))
            coeff = self.a[:, :, sl, :].reshape(-1, self.k0.size) @ radial
            coeff = coeff.reshape(n_gamma, n_ln, width, n_pts)
            out += np.einsum("gbmp,mp->gbp", coeff, sph[sl])
        return out


# ---------------------------------------------------------------------------
# the field object


@dataclass(frozen=True)
class IntertwinedField:
    """Evaluated amplitudes Psi_gamma, tagged by the evaluation domain.

    kind "grid" (d <= 2): values has shape (n_gamma, *grid.shape).
    kind "points": values has shape (n_gamma, n) for d <= 2 and
    (n_gamma, n_ln, n) for d = 4, n_ln running over field partial waves.
    kind "spherical" (d = 4): coeffs has shape
    (n_gamma, n_ln, n_LM, n_t, n_r); the amplitude at x = (t, r, xhat) is
    sum_LM coeffs * Y_LM(xhat).

    The attached plan re-evaluates the same field at arbitrary points.
    """

    kernel: KernelFamily
    kind: str
    plan: object
    values: np.ndarray | None = None
    grid: SpacetimeGrid | None = None
    points: np.ndarray | None = None
    radial: TimeRadialGrid | None = None
    coeffs: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.kernel.dim

    @property
    def l_total(self) -> int:
        if self.dim != 4:
            raise ValueError("l_total is a d = 4 notion")
        return self.plan.l_total

    def evaluate_at(self, points: np.ndarray) -> np.ndarray:
        """Amplitudes at arbitrary spacetime points; no interpolation."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != (1 if self.dim == 1 else self.dim):
            raise ValueError(f"points must have {self.dim} coordinates")
        return self.plan.values_at(pts)


def _gate_kernel(kernel: KernelFamily) -> None:
    if kernel.mode == "normalized":
        rep = validate_isometry(kernel, tol=_GATE_TOL)
    else:
        rep = validate_subnormalization(kernel, tol=_GATE_TOL)
    if not rep.passed:
        raise ValueError(f"kernel fails its Gram check: {rep.summary()}")


def _check_nyquist(spacing: float, k_lo: float, k_hi: float, axis: str) -> None:
    width = k_hi - k_lo
    if width <= 0:
        return
    limit = _TWO_PI / width
    if spacing > limit * (1.0 + 1e-12):
        raise ValueError(
            f"{axis} spacing {spacing:.6g} undersamples the field: bandwidth "
            f"{width:.6g} allows at most {limit:.6g}"
        )


def _czt_grid_2d(plan: _PlanDirect, shell, grid: SpacetimeGrid) -> np.ndarray:
    # per rapidity line the phase exp(-i mu (cosh z t - sinh z x)) is linear
    # in the equispaced mass nodes, so the x sweep is a chirp transform and
    # only the t modulation stays explicit
    mu = shell.masses
    dmu = shell.uniform_mass_spacing()
    t = grid.axes[0]
    x = grid.axes[1]
    dx = grid.spacings[1]
    n_gamma = plan.amps.shape[0]
    amps = plan.amps.reshape(n_gamma, shell.n_mass, shell.n_rapidity)
    vals = np.zeros((n_gamma, t.size, x.size), dtype=np.complex128)
    for iz, z in enumerate(shell.rapidities):
        ch, sh = math.cosh(z), math.sinh(z)
        b = amps[:, :, iz, None] * np.exp(-1j * ch * np.outer(mu, t))[None, :, :]
        w = np.exp(1j * dmu * sh * dx)
        a = np.exp(-1j * dmu * sh * x[0])
        out = czt(b, m=x.size, w=w, a=a, axis=1)
        out = out * np.exp(1j * mu[0] * sh * x)[None, :, None]
        vals += out.transpose(0, 2, 1)
    return vals


def evaluate_field(psi: WaveFunction, kernel: KernelFamily, where, strategy: str = "auto") -> IntertwinedField:
    """Evaluate the amplitudes over a grid, a radial domain, or raw points.

    `where` may be a SpacetimeGrid (d <= 2), a TimeRadialGrid (d = 4), or an
    (n, dim) point array (any d).  Raises on kernels failing their Gram
    check, on mismatched grids, and on undersampled evaluation grids.
    """
    if strategy not in ("auto", "direct", "fft"):
        raise ValueError(f"unknown strategy {strategy!r}")
    kernel.require_state(psi)
    _gate_kernel(kernel)
    dim = kernel.dim

    if isinstance(where, np.ndarray):
        pts = np.atleast_2d(np.asarray(where, dtype=float))
        want = 1 if dim == 1 else dim
        if pts.shape[1] != want:
            raise ValueError(f"points must have {want} coordinates for d = {dim}")
        plan = _Plan4(kernel, psi) if dim == 4 else _PlanDirect(kernel, psi)
        vals = plan.values_at(pts)
        return IntertwinedField(kernel, "points", plan, values=vals, points=_frozen(pts))

    if isinstance(where, TimeRadialGrid):
        if dim != 4:
            raise ValueError("TimeRadialGrid applies to d = 4 only")
        plan = _Plan4(kernel, psi)
        lo_hi = plan.k_ranges()
        _check_nyquist(where.t_spacing, lo_hi[0, 0], lo_hi[0, 1], "time axis")
        coeffs = plan.coeffs_on(where)
        return IntertwinedField(kernel, "spherical", plan, radial=where, coeffs=coeffs)

    if not isinstance(where, SpacetimeGrid):
        raise TypeError("where must be a SpacetimeGrid, TimeRadialGrid, or point array")
    if dim == 4:
        raise ValueError("d = 4 uses a TimeRadialGrid or explicit points")
    if where.dim != dim:
        raise ValueError(f"grid dimension {where.dim} does not match d = {dim}")

    plan = _PlanDirect(kernel, psi)
    ranges = plan.k_ranges()
    for a in range(dim):
        _check_nyquist(where.spacings[a], ranges[a, 0], ranges[a, 1], f"axis {a}")

    use_fft = False
    if strategy in ("auto", "fft"):
        if psi.grid.uniform_mass_spacing() is not None:
            use_fft = True
        elif strategy == "fft":
            raise ValueError(
                "no exact fast transform for this node layout; use strategy='direct'"
            )

    if use_fft and dim == 1:
        e = psi.grid.energies
        de = psi.grid.uniform_energy_spacing()
        t = where.axes[0]
        dt = where.spacings[0]
        x = plan.amps * np.exp(-1j * t[0] * (e - e[0]))[None, :]
        ratio = czt(x, m=t.size, w=np.exp(-1j * de * dt), a=1.0, axis=-1)
        vals = ratio * np.exp(-1j * t * e[0])[None, :]
    elif use_fft:
        vals = _czt_grid_2d(plan, psi.grid, where)
    else:
        vals = plan.values_at(where.points())
    vals = vals.reshape((kernel.n_gamma,) + where.shape)
    return IntertwinedField(kernel, "grid", plan, values=vals, grid=where)


# ---------------------------------------------------------------------------
# independent slow evaluation, for cross-checks


def oracle_direct_field(psi: WaveFunction, kernel: KernelFamily, points, sphere_band: int | None = None) -> np.ndarray:
    """Plain quadrature evaluation at points, sharing no transform machinery.

    d <= 2: a literal loop over points accumulating the weighted phase sum.
    d = 4: the angular integral is done by brute-force sphere quadrature of
    plane-wave phases against the assembled homogeneous factor, instead of
    the coupling-table route of the engine.  Slow on purpose.
    """
    kernel.require_state(psi)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    grid = psi.grid
    n_gamma = kernel.n_gamma

    if grid.dim == 1:
        e = grid.energies
        w = grid.measure_weights()
        fpsi = np.einsum("gsn,sn->gn", kernel.F, psi.samples)
        out = np.empty((n_gamma, pts.shape[0]), dtype=complex)
        for p, (t,) in enumerate(pts):
            out[:, p] = (fpsi * (w * np.exp(-1j * e * t))[None, :]).sum(axis=1)
        return out / math.sqrt(_TWO_PI)

    if grid.dim == 2:
        k0, kap = grid.k_values()
        w = grid.measure_weights()
        fpsi = np.einsum("gsm,smz->gmz", kernel.F, psi.samples)
        char = np.exp(1j * np.outer(kernel.q_values, grid.rapidities))
        out = np.empty((n_gamma, pts.shape[0]), dtype=complex)
        for p, (t, x1) in enumerate(pts):
            phase = np.exp(-1j * (k0 * t - kap * x1))
            out[:, p] = np.einsum("gmz,mz,gz->g", fpsi, w * phase, char)
        return out / _TWO_PI

    # d = 4
    if pts.shape[1] != 4:
        raise ValueError("points must have shape (n, 4)")
    l_field = grid.l_max
    band = psi.angular_band
    if sphere_band is None:
        r_max = float(np.max(np.linalg.norm(pts[:, 1:], axis=1)))
        kap_max = float(np.max(grid.masses)) * math.sinh(float(np.max(grid.rapidities)))
        sphere_band = l_field + band + int(math.ceil(kap_max * r_max)) + 16
    from .quadrature import sphere_rule

    rule = sphere_rule(sphere_band)
    khat = rule.unit_vectors()
    y_state = ylm_matrix(band, rule.theta, rule.phi)
    y_field = ylm_matrix(l_field, rule.theta, rule.phi)
    n_lnf = (l_field + 1) ** 2
    l_of_ln = np.array([int(math.isqrt(i)) for i in range(n_lnf)])
    c_l = np.sqrt(4.0 * np.pi / (2 * l_of_ln + 1))

    k0, kap = grid.k_values()
    w = grid.measure_weights()
    n_m, n_z = k0.shape
    zetas = grid.rapidities
    tables = {}
    for lab in kernel.gammas:
        if lab.c not in tables:
            tables[lab.c] = BoostElementTable(lab.c, l_field, zetas)

    # G_gamma(node, s) = sum_sigma F * sum_{l'n'} psi Y_{l'n'}(khat_s)
    fpsi = np.einsum("gsm,spmz->gpmz", kernel.F, psi.samples)
    g_sphere = np.einsum("gpmz,ps->gmzs", fpsi, y_state)

    out = np.zeros((n_gamma, n_lnf, pts.shape[0]), dtype=complex)
    for g, lab in enumerate(kernel.gammas):
        tab = tables[lab.c]
        for m in range(n_m):
            for z in range(n_z):
                d_vals = tab.entries[l_of_ln, z]
                assembled = c_l[:, None] * np.conj(y_field) * d_vals[:, None]
                for p in range(pts.shape[0]):
                    t = pts[p, 0]
                    phase = np.exp(-1j * (k0[m, z] * t - kap[m, z] * (khat @ pts[p, 1:])))
                    weight = rule.weights * phase * g_sphere[g, m, z]
                    out[g, :, p] += w[m, z] * (assembled @ weight)
    return out * (1.0 / _TWO_PI ** 2)
