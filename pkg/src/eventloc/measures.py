"""Densities, probabilities, coordinate moments, and region operators.

The density is rho(x) = sum_gamma omega_gamma sum_{ln} |Psi_{gamma ln}(x)|^2
(the ln sum being trivial for d <= 2).  Everything here consumes evaluated
fields from engine.py; integrals are weighted node sums on the evaluation
domain, never interpolations.

For d = 4 the density is bilinear in the partial-wave coefficients: with
Psi = sum_A c_A(t, r) Y_A(xhat), every angular integral of rho against a
band-limited weight reduces to pair sums conj(c_A) c_B against small
coupling tables (x_i couples |dl| = 1, x_i x_j couples dl in {0, 2}),
so totals and moments carry no angular discretization error at all.  The
pair sums run in time slices over the coefficient tensor; the full
(n_LM x n_LM) density matrix is never materialized.

Dual-route accounting: momentum_norm gives the same total computed entirely
in momentum space (exact for isometric kernels by construction), and
angular_truncation_deficit gives the exact probability removed by the d = 4
partial-wave cutoff, so normalization checks can itemize what a finite box
cannot see.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .engine import (
    EventRegion,
    IntertwinedField,
    SpacetimeGrid,
    TimeRadialGrid,
    evaluate_field,
)
from .harmonics import ylm_matrix
from .kernels import KernelFamily
from .lorentz import BoostElementTable
from .quadrature import sphere_rule
from .states import WaveFunction, inner_product

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DensityField:
    """Probability density over an evaluation domain.

    kind "grid": values shaped like grid.shape.
    kind "points": values (n,), no integration weights.
    kind "spherical": ang0 (n_t, n_r) holds int rho dOmega, exact for the
    band-limited density; higher angular weights are contracted on demand
    from the source field's coefficients.
    source keeps the field for re-evaluation at fresh points.
    """

    kind: str
    source: IntertwinedField | None = None
    grid: SpacetimeGrid | None = None
    points: np.ndarray | None = None
    values: np.ndarray | None = None
    radial: TimeRadialGrid | None = None
    ang0: np.ndarray | None = None
    l_total: int | None = None

    @property
    def dim(self) -> int:
        if self.kind == "spherical":
            return 4
        if self.kind == "grid":
            return self.grid.dim
        return self.points.shape[1]

    def angular_integral(self) -> np.ndarray:
        """int rho dOmega at each (t, r) node; d = 4 only."""
        if self.kind != "spherical":
            raise ValueError("angular_integral applies to spherical densities")
        return self.ang0

    def total(self) -> float:
        """Integral over the whole evaluation domain."""
        if self.kind == "grid":
            return float(np.sum(self.grid.weights() * self.values))
        if self.kind == "spherical":
            dom = self.radial
            ang = self.angular_integral()
            w = np.outer(dom.t_weights, dom.r_weights * dom.r_nodes**2)
            return float(np.sum(w * ang))
        raise ValueError("point samples carry no integration weights")


def _density_weights(kernel: KernelFamily) -> np.ndarray:
    return kernel.weights


def _time_chunk(n_states: int, n_lm: int, n_r: int) -> int:
    # time-slice length keeping the per-slice coefficient working set near
    # 64 MB complex regardless of the angular band
    per_t = n_states * n_lm * n_r
    return max(1, int(4.0e6 / max(1, per_t)))


def density(field: IntertwinedField) -> DensityField:
    """Density of an evaluated field, on the field's own domain."""
    w = _density_weights(field.kernel)
    if field.kind == "grid":
        vals = np.einsum("g,g...->...", w, np.abs(field.values) ** 2)
        return DensityField("grid", source=field, grid=field.grid, values=vals)
    if field.kind == "points":
        sq = np.abs(field.values) ** 2
        vals = np.einsum("g,g...p->p", w, sq) if sq.ndim > 2 else np.einsum("g,gp->p", w, sq)
        return DensityField("points", source=field, points=field.points, values=vals)
    # spherical: int rho dOmega = sum_{gamma, ln, A} omega |c_A|^2 by
    # orthonormality; sliced over t to keep the |c|^2 working set bounded
    c = field.coeffs
    n_gamma, n_ln, n_lm, n_t, n_r = c.shape
    ang0 = np.empty((n_t, n_r))
    step = _time_chunk(n_gamma * n_ln, n_lm, n_r)
    for lo in range(0, n_t, step):
        sl = slice(lo, min(lo + step, n_t))
        ang0[sl] = np.einsum("g,gbatr->tr", w, np.abs(c[:, :, :, sl, :]) ** 2)
    return DensityField(
        "spherical",
        source=field,
        radial=field.radial,
        ang0=ang0,
        l_total=field.l_total,
    )


def density_at(field: IntertwinedField, points: np.ndarray) -> np.ndarray:
    """rho at arbitrary points, via fresh evaluation of the source field."""
    vals = field.evaluate_at(points)
    w = _density_weights(field.kernel)
    sq = np.abs(vals) ** 2
    if sq.ndim == 3:
        return np.einsum("g,gbp->p", w, sq)
    return np.einsum("g,gp->p", w, sq)


# ---------------------------------------------------------------------------
# momentum-space totals (the dual route)


def _channel_amplitudes(kernel: KernelFamily, psi: WaveFunction) -> np.ndarray:
    """G_gamma = F psi contracted over channels, flattened momentum nodes."""
    if psi.dim == 1:
        return np.einsum("gsn,sn->gn", kernel.F, psi.samples)
    if psi.dim == 2:
        g = np.einsum("gsm,smz->gmz", kernel.F, psi.samples)
        return g.reshape(kernel.n_gamma, -1)
    g = np.einsum("gsm,spmz->gpmz", kernel.F, psi.samples)
    return g.reshape(kernel.n_gamma, g.shape[1], -1)


def momentum_norm(kernel: KernelFamily, psi: WaveFunction) -> float:
    """Total probability computed without leaving momentum space.

    Equals sum_gamma omega int |F psi|^2 dmu(k); for a normalized kernel
    this is exactly the squared state norm (isometry), for a scaled kernel
    s^2 times it.  The d = 4 value ignores the partial-wave cutoff; see
    angular_truncation_deficit for the removed share.
    """
    kernel.require_state(psi)
    g = _channel_amplitudes(kernel, psi)
    w = psi.grid.measure_weights().ravel()
    sq = np.abs(g) ** 2
    if sq.ndim == 3:
        sq = sq.sum(axis=1)
    return float(np.einsum("g,gq->", kernel.weights, sq * w[None, :]))


def angular_truncation_deficit(kernel: KernelFamily, psi: WaveFunction) -> float:
    """Probability removed by the field partial-wave cutoff l <= l_max (d = 4).

    Exact: the cutoff removes sum_{l > L} |d_l(zeta)|^2 of each momentum
    node's weight, and sum_l |d_l|^2 = 1.
    """
    if psi.dim != 4:
        raise ValueError("the partial-wave deficit is a d = 4 notion")
    kernel.require_state(psi)
    grid = psi.grid
    g = _channel_amplitudes(kernel, psi)
    sq = (np.abs(g) ** 2).sum(axis=1)  # (gamma, nodes)
    w = grid.measure_weights().ravel()
    tables = {}
    total = 0.0
    for i, lab in enumerate(kernel.gammas):
        tab = tables.get(lab.c)
        if tab is None:
            tab = BoostElementTable(lab.c, grid.l_max, grid.rapidities)
            tables[lab.c] = tab
        s_l = np.sum(np.abs(tab.entries) ** 2, axis=0)  # (n_zeta,)
        miss = np.clip(1.0 - s_l, 0.0, None)
        miss_nodes = np.broadcast_to(miss, (grid.n_mass, grid.n_rapidity)).ravel()
        total += kernel.weights[i] * float(np.sum(w * miss_nodes * sq[i]))
    return total


# ---------------------------------------------------------------------------
# probabilities


def probability(rho: DensityField, region: EventRegion, max_points: int = 300_000) -> float:
    """Probability of the event landing in the region.

    Grid densities integrate with exact cell-coverage weights; parts of the
    region outside the evaluated box are cut away with a warning.  Spherical
    (d = 4) densities integrate by sampling the source field on box-aligned
    lattices sized to the field bandwidth, capped at max_points nodes.
    """
    if rho.kind == "grid":
        lo = np.array([b[0] for b in rho.grid.bounds])
        hi = np.array([b[1] for b in rho.grid.bounds])
        clipped, cut = region.clipped(lo, hi)
        if cut:
            warnings.warn("region extends beyond the evaluated box; clipped", stacklevel=2)
        if clipped is None:
            return 0.0
        w = clipped.coverage_weights(rho.grid)
        return float(np.sum(w * rho.values))
    if rho.kind == "spherical":
        return _probability_sampled(rho, region, max_points)
    raise ValueError("probabilities need an integrable density, not point samples")


def _probability_sampled(rho: DensityField, region: EventRegion, max_points: int) -> float:
    field = rho.source
    if field is None:
        raise ValueError("spherical density lost its source field")
    ranges = field.plan.k_ranges()
    w_t = ranges[0, 1] - ranges[0, 0]
    kap_max = ranges[1, 1]
    # density bandwidth: differences of field frequencies, per axis
    bw = np.array([w_t, 2 * kap_max, 2 * kap_max, 2 * kap_max])
    total = 0.0
    for b in range(region.n_boxes):
        lo, hi = region.los[b], region.his[b]
        widths = hi - lo
        n_ax = np.maximum(2, np.ceil(widths * bw * 1.1 / _TWO_PI).astype(int) + 1)
        if np.prod(n_ax) > max_points:
            scale = (max_points / np.prod(n_ax)) ** 0.25
            n_ax = np.maximum(2, (n_ax * scale).astype(int))
            warnings.warn(
                f"box {b}: lattice capped at {int(np.prod(n_ax))} points below the "
                "alias-free size; probability carries discretization error",
                stacklevel=3,
            )
        axes = [np.linspace(lo[a], hi[a], n_ax[a]) for a in range(4)]
        wts = []
        for a in range(4):
            h = axes[a][1] - axes[a][0]
            w1 = np.full(n_ax[a], h)
            w1[0] = w1[-1] = 0.5 * h
            wts.append(w1)
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        wmesh = np.meshgrid(*wts, indexing="ij")
        wflat = np.prod(np.stack(wmesh), axis=0).ravel()
        chunk = 8192
        acc = 0.0
        for sl in range(0, pts.shape[0], chunk):
            part = pts[sl : sl + chunk]
            acc += float(np.sum(wflat[sl : sl + chunk] * density_at(field, part)))
        total += acc
    return total


# ---------------------------------------------------------------------------
# moments


@dataclass(frozen=True)
class MomentReport:
    """Total probability, mean position, and second moments of a density.

    covariance = second - outer(mean, mean); psd_floor is its smallest
    eigenvalue (slightly negative values at roundoff scale are normal).
    boundary_fraction estimates how much of the probability sits in the
    outermost cells, flagging box truncation; aliasing_margin is the ratio
    of the Nyquist-allowed spacing to the actual one for the density
    bandwidth (>= 1 means integrals are alias-free), None when unknown.
    """

    total: float
    mean: np.ndarray
    second: np.ndarray
    covariance: np.ndarray
    psd_floor: float
    boundary_fraction: float
    aliasing_margin: float | None
    notes: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "total": float(self.total),
            "mean": [float(v) for v in self.mean],
            "second": [[float(v) for v in row] for row in self.second],
            "covariance": [[float(v) for v in row] for row in self.covariance],
            "psd_floor": float(self.psd_floor),
            "boundary_fraction": float(self.boundary_fraction),
            "aliasing_margin": None if self.aliasing_margin is None else float(self.aliasing_margin),
            "notes": list(self.notes),
        }


def _aliasing_margin_grid(rho: DensityField) -> float | None:
    if rho.source is None:
        return None
    ranges = rho.source.plan.k_ranges()
    margins = []
    for a in range(rho.grid.dim):
        width = 2.0 * (ranges[a, 1] - ranges[a, 0])
        if width <= 0:
            continue
        margins.append((_TWO_PI / width) / rho.grid.spacings[a])
    return float(min(margins)) if margins else None


def coordinate_moments(rho: DensityField, psd_tol: float = 1e-9) -> MomentReport:
    """First and second coordinate moments of an integrable density."""
    if rho.kind == "grid":
        return _moments_grid(rho, psd_tol)
    if rho.kind == "spherical":
        return _moments_spherical(rho, psd_tol)
    raise ValueError("moments need an integrable density, not point samples")


def _moments_grid(rho: DensityField, psd_tol: float) -> MomentReport:
    grid = rho.grid
    d = grid.dim
    w = grid.weights()
    contrib = w * rho.values
    total = float(contrib.sum())
    mesh = np.meshgrid(*grid.axes, indexing="ij")
    mean = np.array([float((contrib * m).sum()) for m in mesh]) / total
    second = np.empty((d, d))
    for a in range(d):
        for b in range(a, d):
            second[a, b] = second[b, a] = float((contrib * mesh[a] * mesh[b]).sum()) / total
    cov = second - np.outer(mean, mean)
    edge = np.zeros(grid.shape, dtype=bool)
    for a in range(d):
        sl = [slice(None)] * d
        sl[a] = 0
        edge[tuple(sl)] = True
        sl[a] = -1
        edge[tuple(sl)] = True
    abs_contrib = np.abs(contrib)
    boundary = float(abs_contrib[edge].sum() / abs_contrib.sum())
    return _finish_report(total, mean, second, cov, boundary, _aliasing_margin_grid(rho), psd_tol)


_SYM2 = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


@functools.lru_cache(maxsize=8)
def _offset_moment_tables(l_total: int):
    """Pair tables for angular moment weights, grouped by (dl, dm) offset.

    Each record is (a1, a2, t1, t2): source and target packed (l, m) indices
    with t1[p, i] = int conj(Y_{a1}) Y_{a2} xhat_i dOmega and t2[p, q] the
    same for the symmetric products xhat_i xhat_j in _SYM2 order.  Offsets
    outside |dl| <= 2, |dm| <= 2 vanish identically and are never scanned.
    """
    rule = sphere_rule(2 * l_total + 4)
    y = ylm_matrix(l_total, rule.theta, rule.phi)
    u = rule.unit_vectors()
    u2 = np.stack([u[:, i] * u[:, j] for i, j in _SYM2], axis=1)
    ls = np.repeat(np.arange(l_total + 1), 2 * np.arange(l_total + 1) + 1)
    ms = np.concatenate([np.arange(-l, l + 1) for l in range(l_total + 1)])
    recs = []
    for dl in range(-2, 3):
        for dm in range(-2, 3):
            l2 = ls + dl
            m2 = ms + dm
            ok = (l2 >= 0) & (l2 <= l_total) & (np.abs(m2) <= l2)
            if not np.any(ok):
                continue
            a1 = np.nonzero(ok)[0]
            a2 = l2[ok] * (l2[ok] + 1) + m2[ok]
            z = np.conj(y[a1]) * y[a2] * rule.weights[None, :]
            t1 = z @ u
            t2 = z @ u2
            keep = (np.max(np.abs(t1), axis=1) > 1e-15) | (np.max(np.abs(t2), axis=1) > 1e-15)
            if not np.any(keep):
                continue
            rec = (a1[keep], a2[keep], t1[keep], t2[keep])
            for arr in rec:
                arr.setflags(write=False)
            recs.append(rec)
    return tuple(recs)


def _angular_weight_integrals(rho: DensityField):
    """ang1[i](t, r) = int rho xhat_i dOmega and ang2 for xhat_i xhat_j."""
    field = rho.source
    if field is None:
        raise ValueError("spherical density lost its source field")
    c = field.coeffs
    w = _density_weights(field.kernel)
    n_gamma, n_ln, n_lm, n_t, n_r = c.shape
    recs = _offset_moment_tables(rho.l_total)
    ang1 = np.zeros((3, n_t, n_r))
    ang2 = np.zeros((6, n_t, n_r))
    sqw = np.sqrt(w)[:, None, None, None, None]
    step = _time_chunk(n_gamma * n_ln, n_lm, n_r)
    for lo in range(0, n_t, step):
        sl = slice(lo, min(lo + step, n_t))
        cw = (c[:, :, :, sl, :] * sqw).reshape(n_gamma * n_ln, n_lm, -1)
        for a1, a2, t1, t2 in recs:
            pair = np.einsum("xan,xan->an", np.conj(cw[:, a1]), cw[:, a2])
            ang1[:, sl] += np.einsum("an,ai->in", pair, t1).real.reshape(3, -1, n_r)
            ang2[:, sl] += np.einsum("an,ai->in", pair, t2).real.reshape(6, -1, n_r)
    return ang1, ang2


def _moments_spherical(rho: DensityField, psd_tol: float) -> MomentReport:
    dom = rho.radial
    ang0 = rho.ang0
    ang1, ang2 = _angular_weight_integrals(rho)
    t = dom.t_nodes
    wt = dom.t_weights
    r = dom.r_nodes
    wr2 = dom.r_weights * r**2
    wr3 = dom.r_weights * r**3
    wr4 = dom.r_weights * r**4
    base = np.outer(wt, wr2)
    total = float(np.sum(base * ang0))
    mean = np.empty(4)
    mean[0] = float(np.sum(np.outer(wt * t, wr2) * ang0)) / total
    for i in range(3):
        mean[1 + i] = float(np.sum(np.outer(wt, wr3) * ang1[i])) / total
    second = np.empty((4, 4))
    second[0, 0] = float(np.sum(np.outer(wt * t**2, wr2) * ang0)) / total
    for i in range(3):
        s0i = float(np.sum(np.outer(wt * t, wr3) * ang1[i])) / total
        second[0, 1 + i] = second[1 + i, 0] = s0i
    for p, (i, j) in enumerate(_SYM2):
        sij = float(np.sum(np.outer(wt, wr4) * ang2[p])) / total
        second[1 + i, 1 + j] = second[1 + j, 1 + i] = sij
    cov = second - np.outer(mean, mean)
    contrib = np.abs(base * ang0)
    edge = np.zeros_like(contrib, dtype=bool)
    edge[0, :] = edge[-1, :] = True
    edge[:, -1] = True
    boundary = float(contrib[edge].sum() / contrib.sum())
    margin = None
    if rho.source is not None:
        ranges = rho.source.plan.k_ranges()
        width = 2.0 * (ranges[0, 1] - ranges[0, 0])
        if width > 0:
            margin = float((_TWO_PI / width) / dom.t_spacing)
    return _finish_report(total, mean, second, cov, boundary, margin, psd_tol)


def _finish_report(total, mean, second, cov, boundary, margin, psd_tol) -> MomentReport:
    eigs = np.linalg.eigvalsh(cov)
    floor = float(eigs[0])
    notes = []
    scale = max(1.0, float(np.max(np.abs(cov))))
    if floor < -psd_tol * scale:
        notes.append(f"covariance has a negative eigenvalue {floor:.3e}")
    if margin is not None and margin < 1.0:
        notes.append(f"density undersampled: aliasing margin {margin:.3f} < 1")
    if boundary > 1e-6:
        notes.append(f"boundary cells carry {boundary:.2e} of the probability")
    return MomentReport(
        total=total,
        mean=mean,
        second=second,
        covariance=cov,
        psd_floor=floor,
        boundary_fraction=boundary,
        aliasing_margin=margin,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# region operators


@dataclass(frozen=True)
class TauResult:
    """Galerkin block of the region operator tau(I) in a state basis.

    matrix is Hermitian; eigenvalues ascending.  For a normalized kernel
    and an orthonormal basis the eigenvalues lie in [0, 1] up to the
    numerical floor, and tau(I) + tau(complement) adds to tau(full box)
    node-exactly.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    basis_gram_deviation: float
    clipped: bool

    def as_dict(self) -> dict:
        return {
            "matrix_re": [[float(v) for v in row] for row in self.matrix.real],
            "matrix_im": [[float(v) for v in row] for row in self.matrix.imag],
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "basis_gram_deviation": float(self.basis_gram_deviation),
            "clipped": bool(self.clipped),
        }


def tau_matrix(
    kernel: KernelFamily,
    region: EventRegion,
    basis,
    grid: SpacetimeGrid,
    strategy: str = "auto",
    orthonormal_tol: float = 1e-8,
) -> TauResult:
    """Matrix elements <b_a| tau(I) |b_b> over an orthonormal state basis.

    The basis must be orthonormal within orthonormal_tol in the momentum
    inner product.  Fields are evaluated on the given grid (d = 4 uses a
    4-axis Cartesian grid here; coarse grids mean coarse integrals, which
    the eigenvalue floor will show honestly).
    """
    basis = list(basis)
    if not basis:
        raise ValueError("empty basis")
    n = len(basis)
    gram = np.empty((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            gram[a, b] = inner_product(basis[a], basis[b])
    gram_dev = float(np.max(np.abs(gram - np.eye(n))))
    if gram_dev > orthonormal_tol:
        raise ValueError(f"basis is not orthonormal: max |G - I| = {gram_dev:.3e}")

    lo = np.array([b[0] for b in grid.bounds])
    hi = np.array([b[1] for b in grid.bounds])
    clipped_region, cut = region.clipped(lo, hi)
    if cut:
        warnings.warn("region extends beyond the evaluation grid; clipped", stacklevel=2)
    if clipped_region is None:
        mat = np.zeros((n, n), dtype=complex)
        return TauResult(mat, np.zeros(n), gram_dev, True)
    covw = clipped_region.coverage_weights(grid).ravel()

    if kernel.dim == 4:
        if grid.dim != 4:
            raise ValueError("d = 4 region operators need a 4-axis grid")
        pts = grid.points()
        vals = [evaluate_field(b, kernel, pts, strategy).values for b in basis]
        stack = np.stack(vals)  # (basis, gamma, ln, nodes)
        mat = np.einsum(
            "g,n,agcn,bgcn->ab", kernel.weights, covw, np.conj(stack), stack, optimize=True
        )
    else:
        if grid.dim != kernel.dim:
            raise ValueError("grid dimension does not match the kernel")
        vals = [evaluate_field(b, kernel, grid, strategy).values for b in basis]
        stack = np.stack([v.reshape(kernel.n_gamma, -1) for v in vals])
        mat = np.einsum(
            "g,n,agn,bgn->ab", kernel.weights, covw, np.conj(stack), stack, optimize=True
        )
    mat = 0.5 * (mat + mat.conj().T)
    eigs = np.linalg.eigvalsh(mat)
    return TauResult(mat, eigs, gram_dev, cut)
