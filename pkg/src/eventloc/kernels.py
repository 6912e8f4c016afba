"""Channel-coupling kernels and their Gram diagnostics.

A kernel family is the data (Gamma, omega, F): a finite set of gamma
labels with positive weights, and for each gamma a matrix-valued function
F_{gamma sigma}(mu) sampled at the mass nodes of a fixed shell grid.  The
Gram matrix at each node,

    G_{sigma sigma'}(mu) = sum_gamma omega_gamma conj(F_{gamma sigma}(mu)) F_{gamma sigma'}(mu),

decides admissibility: G = I everywhere in normalized mode, 0 <= G <= I in
subnormalized mode.  Kernels store the grid they were sampled on and refuse
states living on a different grid; there is no independent kernel grid and
no resampling.

The scalar scope makes the spin index on F trivial, so arrays carry shape
(n_gamma, n_sigma, n_mass) in every dimension.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .grids import MassShellGrid, _frozen
from .lorentz import GammaLabel


@dataclass(frozen=True)
class GramReport:
    """Outcome of a Gram-matrix check, with the worst offender located.

    kind is "isometry" (max deviation of G from the identity) or
    "subnormalization" (largest eigenvalue of G).  node_values holds the
    per-mass-node figure of merit; worst_entry is the (sigma, sigma')
    index pair of the largest deviation for the isometry check and None
    for the eigenvalue check.
    """

    kind: str
    tol: float
    passed: bool
    node_values: np.ndarray
    worst_node: int
    worst_mass: float
    worst_value: float
    worst_entry: tuple[int, int] | None = None
    eigenvalue_floor: float | None = None

    def as_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "tol": self.tol,
            "passed": bool(self.passed),
            "node_values": [float(v) for v in self.node_values],
            "worst": {
                "node": int(self.worst_node),
                "mass": float(self.worst_mass),
                "value": float(self.worst_value),
            },
        }
        if self.worst_entry is not None:
            out["worst"]["entry"] = [int(self.worst_entry[0]), int(self.worst_entry[1])]
        if self.eigenvalue_floor is not None:
            out["eigenvalue_floor"] = float(self.eigenvalue_floor)
        return out

    def summary(self) -> str:
        status = "pass" if self.passed else "FAIL"
        loc = f"node {self.worst_node} (mass {self.worst_mass:.6g})"
        if self.worst_entry is not None:
            loc += f" entry {self.worst_entry}"
        return f"{self.kind}: {status}  worst {self.worst_value:.3e} at {loc}  (tol {self.tol:.1e})"


@dataclass(frozen=True)
class KernelFamily:
    """Sampled kernel (Gamma, omega, F) tied to a mass-shell grid.

    F has shape (n_gamma, n_sigma, n_mass); weights has shape (n_gamma,)
    and is strictly positive.  mode is "normalized" or "subnormalized".
    """

    grid: MassShellGrid
    gammas: tuple[GammaLabel, ...]
    weights: np.ndarray
    F: np.ndarray
    mode: str = "normalized"

    def __post_init__(self):
        if self.mode not in ("normalized", "subnormalized"):
            raise ValueError(f"unknown kernel mode {self.mode!r}")
        gammas = tuple(self.gammas)
        if not gammas:
            raise ValueError("kernel needs at least one gamma label")
        if len({g.nu for g in gammas}) != len(gammas):
            raise ValueError("gamma labels must carry distinct nu indices")
        if self.grid.dim == 1 and any(g.c != 0 for g in gammas):
            raise ValueError("d = 1 has a trivial homogeneous group; c must be 0")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(gammas),):
            raise ValueError("weights must have one entry per gamma label")
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise ValueError("gamma weights must be finite and positive")
        F = np.asarray(self.F, dtype=complex)
        if F.ndim != 3:
            raise ValueError("F must have shape (n_gamma, n_sigma, n_mass)")
        if F.shape[0] != len(gammas):
            raise ValueError(f"F has {F.shape[0]} gamma rows, expected {len(gammas)}")
        if F.shape[2] != self.grid.n_mass:
            raise ValueError(
                f"F sampled at {F.shape[2]} mass nodes but grid has {self.grid.n_mass}"
            )
        if not np.all(np.isfinite(F)):
            raise ValueError("F contains non-finite entries")
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "F", _frozen(F))

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def n_gamma(self) -> int:
        return len(self.gammas)

    @property
    def n_sigma(self) -> int:
        return self.F.shape[1]

    @property
    def q_values(self) -> np.ndarray:
        return np.array([g.q for g in self.gammas])

    def gram(self) -> np.ndarray:
        """Gram matrices, shape (n_mass, n_sigma, n_sigma), Hermitian PSD."""
        return np.einsum("g,gsm,gtm->mst", self.weights, np.conj(self.F), self.F)

    def scaled(self, s: float) -> "KernelFamily":
        """Kernel with F -> s F; total probability scales by s**2.

        Any s with 0 < s <= 1 keeps the Gram within [0, I]; s < 1 yields a
        properly subnormalized kernel.
        """
        s = float(s)
        if not 0.0 < s <= 1.0:
            raise ValueError("scale must lie in (0, 1]")
        mode = self.mode if s == 1.0 else "subnormalized"
        return KernelFamily(self.grid, self.gammas, self.weights, s * self.F, mode)

    def require_state(self, psi) -> None:
        """Reject states sampled on a different grid or channel count."""
        if psi.n_channels != self.n_sigma:
            raise ValueError(
                f"state has {psi.n_channels} channels, kernel couples {self.n_sigma}"
            )
        if psi.grid is not self.grid and not self.grid.matches(psi.grid):
            raise ValueError("state and kernel live on different shell grids")


def validate_isometry(kernel: KernelFamily, tol: float = 1e-10) -> GramReport:
    """Check G(mu) = I at every mass node; locate the worst entry.

    Only meaningful for normalized kernels; subnormalized ones fail by
    construction and should be checked with validate_subnormalization.
    """
    if kernel.mode != "normalized":
        raise ValueError("isometry validation applies to normalized kernels")
    gram = kernel.gram()
    dev = np.abs(gram - np.eye(kernel.n_sigma))
    node_values = dev.max(axis=(1, 2))
    worst_node = int(np.argmax(node_values))
    flat = int(np.argmax(dev[worst_node]))
    entry = np.unravel_index(flat, dev[worst_node].shape)
    worst = float(node_values[worst_node])
    return GramReport(
        kind="isometry",
        tol=float(tol),
        passed=bool(worst <= tol),
        node_values=node_values,
        worst_node=worst_node,
        worst_mass=float(kernel.grid.masses[worst_node]),
        worst_value=worst,
        worst_entry=(int(entry[0]), int(entry[1])),
    )


def validate_subnormalization(kernel: KernelFamily, tol: float = 1e-10) -> GramReport:
    """Check 0 <= G(mu) <= I at every node via eigenvalues.

    Passes iff every eigenvalue lies in [-tol, 1 + tol].  node_values holds
    the largest eigenvalue per node; eigenvalue_floor the smallest seen
    anywhere (a Gram matrix is PSD, so it should sit at roundoff).
    """
    gram = kernel.gram()
    eigs = np.linalg.eigvalsh(gram)
    node_values = eigs[:, -1]
    worst_node = int(np.argmax(node_values))
    worst = float(node_values[worst_node])
    floor = float(eigs.min())
    return GramReport(
        kind="subnormalization",
        tol=float(tol),
        passed=bool(worst <= 1.0 + tol and floor >= -tol),
        node_values=node_values,
        worst_node=worst_node,
        worst_mass=float(kernel.grid.masses[worst_node]),
        worst_value=worst,
        eigenvalue_floor=floor,
    )


def random_isometric_kernel(
    dim: int,
    n_sigma: int,
    n_gamma: int,
    grid: MassShellGrid,
    seed: int,
    weights: Sequence[float] | None = None,
    q_values: Sequence[float] | None = None,
) -> KernelFamily:
    """Seeded random kernel passing validate_isometry at 1e-12.

    Per mass node a complex Gaussian (n_gamma, n_sigma) matrix is drawn and
    orthonormalized; with weights omega the columns satisfy
    sum_gamma omega_gamma conj(F) F = I exactly up to roundoff because
    F = diag(omega^{-1/2}) Q with Q column-orthonormal.  q labels default
    to a seeded draw for d >= 2 (ignored structurally for d = 1).
    """
    if dim != grid.dim:
        raise ValueError(f"dim {dim} does not match grid dim {grid.dim}")
    if n_gamma < n_sigma:
        raise ValueError("need n_gamma >= n_sigma for a column isometry")
    rng = np.random.default_rng(seed)
    if weights is None:
        w = np.ones(n_gamma)
    else:
        w = np.asarray(weights, dtype=float)
    if q_values is None:
        qs = rng.uniform(0.4, 2.2, size=n_gamma) if dim > 1 else np.zeros(n_gamma)
    else:
        qs = np.asarray(q_values, dtype=float)
        if qs.shape != (n_gamma,):
            raise ValueError("q_values must have one entry per gamma label")
    raw = rng.standard_normal((grid.n_mass, n_gamma, n_sigma, 2))
    blocks = raw[..., 0] + 1j * raw[..., 1]
    F = np.empty((n_gamma, n_sigma, grid.n_mass), dtype=complex)
    scale = 1.0 / np.sqrt(w)
    for node in range(grid.n_mass):
        q_mat, r_mat = np.linalg.qr(blocks[node])
        # pin the column phases so the draw is reproducible across BLAS builds
        phase = np.diagonal(r_mat).copy()
        phase /= np.abs(phase)
        F[:, :, node] = (q_mat * np.conj(phase)) * scale[:, None]
    gammas = tuple(GammaLabel(nu=i, c=1j * qs[i]) for i in range(n_gamma))
    return KernelFamily(grid, gammas, w, F, mode="normalized")


def kernel_conjugate(kernel: KernelFamily, V: np.ndarray, tol: float = 1e-10) -> KernelFamily:
    """Conjugate by an internal unitary: F'_{gamma sigma} = sum F_{gamma s} V_{s sigma}.

    V may be a constant (n_sigma, n_sigma) matrix or one matrix per mass
    node, shape (n_mass, n_sigma, n_sigma).  Unitarity is enforced at tol.
    The Gram matrix maps to V^dagger G V, so validation outcomes are
    preserved in both modes.
    """
    n = kernel.n_sigma
    V = np.asarray(V, dtype=complex)
    if V.shape == (n, n):
        V = np.broadcast_to(V, (kernel.grid.n_mass, n, n))
    elif V.shape != (kernel.grid.n_mass, n, n):
        raise ValueError(f"V must have shape ({n}, {n}) or (n_mass, {n}, {n})")
    dev = np.abs(np.einsum("mst,msu->mtu", np.conj(V), V) - np.eye(n))
    if dev.max() > tol:
        raise ValueError(f"V is not unitary: max |V^+ V - I| = {dev.max():.3e}")
    F_new = np.einsum("gsm,mst->gtm", kernel.F, V)
    return KernelFamily(kernel.grid, kernel.gammas, kernel.weights, F_new, kernel.mode)


def make_kernel(grid: MassShellGrid, config: Mapping) -> KernelFamily:
    """Build one of the stock kernel families from a plain mapping.

    kind "trivial": one gamma per channel, F = identity at every node;
    needs q_values (one per channel) for d >= 2.

    kind "dft": F_{gamma sigma}(mu) = n_gamma^{-1/2} exp(2 pi i gamma sigma / n_gamma)
    times a smooth unimodular phase exp(i a_gamma s(mu)) with s the mass
    coordinate rescaled to [0, 1]; isometric for any phase coefficients.

    kind "random": delegates to random_isometric_kernel.

    kind "table": explicit F from nested lists (entries [re, im]).

    An optional "scale" in (0, 1] multiplies F and marks the kernel
    subnormalized when below 1.
    """
    cfg = dict(config)
    kind = cfg.pop("kind")
    scale = cfg.pop("scale", 1.0)

    def _qs(n: int) -> np.ndarray:
        if grid.dim == 1:
            return np.zeros(n)
        q = cfg.pop("q_values")
        q = np.asarray(q, dtype=float)
        if q.shape != (n,):
            raise ValueError(f"q_values must have length {n}")
        return q

    if kind == "trivial":
        n = int(cfg.pop("n_sigma"))
        qs = _qs(n)
        F = np.broadcast_to(np.eye(n, dtype=complex)[:, :, None], (n, n, grid.n_mass))
        gammas = tuple(GammaLabel(nu=i, c=1j * qs[i]) for i in range(n))
        kernel = KernelFamily(grid, gammas, np.ones(n), F.copy())
    elif kind == "dft":
        n_sigma = int(cfg.pop("n_sigma"))
        n_gamma = int(cfg.pop("n_gamma", n_sigma))
        if n_gamma < n_sigma:
            raise ValueError("dft kernel needs n_gamma >= n_sigma")
        qs = _qs(n_gamma)
        coeffs = np.asarray(cfg.pop("phase_coeffs", np.zeros(n_gamma)), dtype=float)
        if coeffs.shape != (n_gamma,):
            raise ValueError(f"phase_coeffs must have length {n_gamma}")
        mu = grid.masses
        s = (mu - mu[0]) / (mu[-1] - mu[0])
        dft = np.exp(2j * np.pi * np.outer(np.arange(n_gamma), np.arange(n_sigma)) / n_gamma)
        dft /= np.sqrt(n_gamma)
        F = dft[:, :, None] * np.exp(1j * coeffs[:, None, None] * s[None, None, :])
        gammas = tuple(GammaLabel(nu=i, c=1j * qs[i]) for i in range(n_gamma))
        kernel = KernelFamily(grid, gammas, np.ones(n_gamma), F)
    elif kind == "random":
        n_sigma = int(cfg.pop("n_sigma"))
        n_gamma = int(cfg.pop("n_gamma", n_sigma))
        seed = int(cfg.pop("seed"))
        kernel = random_isometric_kernel(
            grid.dim,
            n_sigma,
            n_gamma,
            grid,
            seed,
            weights=cfg.pop("weights", None),
            q_values=cfg.pop("q_values", None),
        )
    elif kind == "table":
        F = np.asarray(cfg.pop("F"), dtype=float)
        if F.ndim != 4 or F.shape[3] != 2:
            raise ValueError("table F must be nested lists of [re, im] pairs")
        F = F[..., 0] + 1j * F[..., 1]
        n_gamma = F.shape[0]
        qs = _qs(n_gamma)
        w = np.asarray(cfg.pop("weights", np.ones(n_gamma)), dtype=float)
        mode = cfg.pop("mode", "normalized")
        gammas = tuple(GammaLabel(nu=i, c=1j * qs[i]) for i in range(n_gamma))
        kernel = KernelFamily(grid, gammas, w, F, mode)
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")

    cfg.pop("q_values", None)
    if cfg:
        raise ValueError(f"unused kernel options: {sorted(cfg)}")
    if scale != 1.0:
        kernel = kernel.scaled(scale)
    return kernel
