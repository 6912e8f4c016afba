"""SU(2) Wigner matrices and principal-series boost matrix elements.

Conventions (all verified by the cross-path tests):

* SU(2) elements are 2x2 complex matrices [[a, b], [-conj(b), conj(a)]].
  Euler factorization is active zyz,
  u(alpha, beta, gamma) = e^{-i alpha sz/2} e^{-i beta sy/2} e^{-i gamma sz/2},
  so R^{1/2}(u) = u exactly and, for integer l,
  R^l_{n 0}(u(phi, theta, 0)) = sqrt(4 pi / (2l+1)) conj(Y_l^n(theta, phi)).
* Wigner matrices R^j are indexed with m descending, +j first, matching the
  spinor basis; helpers that act on packed (l, m)-ascending coefficient
  arrays reverse both axes.
* The massless principal-series representation (M = 0, c = i q) is realized
  on L^2(S^2): a z-boost of rapidity zeta acts by the conformal sphere map
  with multiplier w(theta)^{c-1}, w = cosh(zeta) - sinh(zeta) cos(theta).
  w > 0 always, so the principal branch of the power is smooth and no branch
  tracking is needed.  Matrix elements in the harmonic basis are diagonal in
  l-column-0: <l n| U(b_zeta) |0 0> = delta_{n0} d_l(zeta).
* Fast path for d_l: the closed one-dimensional reduction

      d_l(zeta) = sqrt(2l+1) prod_{k=1..l}(k - i q) / (l! sinh^{l+1} zeta)
                  * int_0^zeta (cosh zeta - cosh u)^l cos(q u) du,

  evaluated by Gauss-Legendre.  It is stable for all l (no cancellation:
  the integrand is nonnegative times a bounded cosine), reduces to
  sin(q zeta)/(q sinh zeta) at l = 0, and obeys d_l(-zeta) = (-1)^l d_l(zeta).
  The sphere-quadrature oracle below is an independent code path kept for
  verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .harmonics import ylm
from .quadrature import gauss_legendre

_SQRT4PI = math.sqrt(4.0 * math.pi)


@dataclass(frozen=True)
class GammaLabel:
    """Label of one point of the discrete Gamma space.

    nu is the multiplicity index; the representation content is the pair
    (M, c), restricted here to the scalar principal series: M = 0 and c
    purely imaginary, c = i q.  For d = 1 the homogeneous group is trivial
    and c is ignored (kept 0).
    """

    nu: int
    M: int = 0
    c: complex = field(default=0j)

    def __post_init__(self):
        if self.M != 0:
            raise ValueError("only M = 0 is in scope")
        c = complex(self.c)
        if abs(c.real) > 1e-12:
            raise ValueError("c must be purely imaginary (principal series)")
        object.__setattr__(self, "c", c)

    @property
    def q(self) -> float:
        return self.c.imag


# ---------------------------------------------------------------------------
# SU(2)


def su2_from_euler(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Active zyz Euler angles to an SU(2) matrix."""
    ca, sa = np.cos(0.5 * beta), np.sin(0.5 * beta)
    return np.array(
        [
            [np.exp(-0.5j * (alpha + gamma)) * ca, -np.exp(-0.5j * (alpha - gamma)) * sa],
            [np.exp(0.5j * (alpha - gamma)) * sa, np.exp(0.5j * (alpha + gamma)) * ca],
        ],
        dtype=np.complex128,
    )


def euler_from_su2(u: np.ndarray):
    """Extract (alpha, beta, gamma) with beta in [0, pi].

    At the gimbal points beta = 0, pi the split of the z-angles is not
    unique; gamma = 0 is chosen there.
    """
    u = np.asarray(u, dtype=np.complex128)
    _check_su2(u)
    a, b = u[0, 0], u[0, 1]
    beta = 2.0 * math.atan2(abs(b), abs(a))
    if abs(b) < 1e-14:
        return -2.0 * np.angle(a), beta, 0.0
    if abs(a) < 1e-14:
        return -2.0 * np.angle(-b), beta, 0.0
    sum_ = -2.0 * np.angle(a)
    diff = -2.0 * np.angle(-b)
    return 0.5 * (sum_ + diff), beta, 0.5 * (sum_ - diff)


def rotation_su2(axis, angle: float) -> np.ndarray:
    """SU(2) element of the rotation by `angle` about the unit vector `axis`."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    c, s = np.cos(0.5 * angle), np.sin(0.5 * angle)
    return np.array(
        [
            [c - 1j * s * n[2], -s * (n[1] + 1j * n[0])],
            [s * (n[1] - 1j * n[0]), c + 1j * s * n[2]],
        ],
        dtype=np.complex128,
    )


def sphere_section(theta: float, phi: float) -> np.ndarray:
    """The canonical rotation taking the z axis to (theta, phi)."""
    return su2_from_euler(phi, theta, 0.0)


def _check_su2(u: np.ndarray, tol: float = 1e-10) -> None:
    if u.shape != (2, 2):
        raise ValueError("SU(2) element must be 2x2")
    if abs(np.linalg.det(u) - 1.0) > tol or np.max(np.abs(u @ u.conj().T - np.eye(2))) > tol:
        raise ValueError("matrix is not in SU(2)")


# ---------------------------------------------------------------------------
# Wigner matrices


def _as_two_j(j) -> int:
    two_j = int(round(2 * j))
    if two_j < 0 or abs(2 * j - two_j) > 1e-12:
        raise ValueError("j must be a nonnegative half-integer")
    return two_j


def wigner_d_beta(j, beta: float) -> np.ndarray:
    """Little-d matrix d^j(beta), indexed m descending (+j first)."""
    two_j = _as_two_j(j)
    n = two_j + 1
    lf = [math.lgamma(i + 1) for i in range(two_j + 1)]
    c, s = np.cos(0.5 * beta), np.sin(0.5 * beta)
    out = np.zeros((n, n))
    for ia in range(n):          # row, m' = j - ia
        for ib in range(n):      # col, m  = j - ib
            tmp = 0.0
            # k range keeps all four factorial arguments nonnegative
            k_lo = max(0, ia - ib)
            k_hi = min(two_j - ib, ia)
            for k in range(k_lo, k_hi + 1):
                ln = 0.5 * (lf[two_j - ia] + lf[ia] + lf[two_j - ib] + lf[ib]) - (
                    lf[two_j - ib - k] + lf[k] + lf[ia - k] + lf[ib - ia + k]
                )
                # exponents: cos^(2j + m - m' - 2k) sin^(m' - m + 2k)
                pc = two_j + (ia - ib) - 2 * k
                ps = (ib - ia) + 2 * k
                term = math.exp(ln) * (c ** pc) * (s ** ps)
                tmp += term if (ib - ia + k) % 2 == 0 else -term
            out[ia, ib] = tmp
    return out


def wigner_d(j, u: np.ndarray) -> np.ndarray:
    """Full Wigner matrix R^j(u), indexed m descending. R^{1/2}(u) == u."""
    alpha, beta, gamma = euler_from_su2(u)
    two_j = _as_two_j(j)
    m = (two_j - 2 * np.arange(two_j + 1)) / 2.0  # descending
    d = wigner_d_beta(j, beta)
    return np.exp(-1j * m[:, None] * alpha) * d * np.exp(-1j * m[None, :] * gamma)


def wigner_block_packed(l: int, u: np.ndarray) -> np.ndarray:
    """R^l(u) reindexed for packed coefficient slices (m ascending)."""
    return wigner_d(l, u)[::-1, ::-1]


def spin_matrices(j):
    """(Jx, Jy, Jz) in the m-descending basis."""
    two_j = _as_two_j(j)
    jj = two_j / 2.0
    m = jj - np.arange(two_j + 1)
    jz = np.diag(m)
    # <m+1|J+|m> = sqrt(j(j+1) - m(m+1)); m descending puts J+ above diagonal
    ladder = np.sqrt(jj * (jj + 1) - m[1:] * (m[1:] + 1))
    jp = np.diag(ladder, 1).astype(complex)
    jm = jp.conj().T
    jx = 0.5 * (jp + jm)
    jy = -0.5j * (jp - jm)
    return jx, jy, jz.astype(complex)


def oracle_wigner_d_expm(j, u: np.ndarray) -> np.ndarray:
    """Independent route to R^j(u): axis-angle extraction + matrix exponential."""
    u = np.asarray(u, dtype=np.complex128)
    _check_su2(u)
    # u = cos(t/2) I - i sin(t/2) n.sigma
    cos_half = u[0, 0].real + u[1, 1].real
    cos_half *= 0.5
    v = np.array([-u[0, 1].imag, -u[0, 1].real, -u[0, 0].imag])
    s = np.linalg.norm(v)
    two_j = _as_two_j(j)
    if s < 1e-13:
        sign = 1.0 if cos_half >= 0 else (-1.0) ** two_j
        return sign * np.eye(two_j + 1, dtype=complex)
    theta = 2.0 * math.atan2(s, cos_half)
    axis = v / s
    jx, jy, jz = spin_matrices(j)
    return expm(-1j * theta * (axis[0] * jx + axis[1] * jy + axis[2] * jz))


# ---------------------------------------------------------------------------
# Principal-series boost column


def _check_character(c: complex) -> float:
    c = complex(c)
    if abs(c.real) > 1e-12:
        raise ValueError("principal-series label must be purely imaginary")
    return c.imag


def character_1p1(c: complex, zeta: float) -> complex:
    """Boost character exp(c zeta) of the 1+1 homogeneous group; |.| = 1."""
    q = _check_character(c)
    return complex(np.exp(1j * q * zeta))


def aberrate(zeta: float, costheta):
    """Conformal sphere map of the z-boost and its multiplier.

    Returns (costheta', w) with w = cosh(zeta) - sinh(zeta) costheta and
    costheta' = (costheta - tanh zeta) / (1 - tanh zeta costheta).  The
    multiplier satisfies the cocycle w_{z1+z2} = w_{z2}(mapped) w_{z1}.
    """
    costheta = np.asarray(costheta, dtype=float)
    v = np.tanh(zeta)
    w = np.cosh(zeta) - np.sinh(zeta) * costheta
    return (costheta - v) / (1.0 - v * costheta), w


def boost_element(c: complex, l: int, zeta: float, order: int | None = None) -> complex:
    """<l 0| U(b_zeta) |0 0> in the M = 0, c = i q principal series.

    Fast path, see the module docstring for the closed reduction.  `order`
    overrides the Gauss-Legendre node count for the rapidity integral.
    Elements with n != 0 vanish (axial symmetry); only the n = 0 column is
    a function of l and zeta.
    """
    q = _check_character(c)
    if l < 0:
        raise ValueError("need l >= 0")
    if zeta == 0.0:
        return complex(1.0 if l == 0 else 0.0)
    z = abs(zeta)
    if order is None:
        order = max(48, l + 8, int(3.0 * abs(q) * z) + 16)
    u, w = gauss_legendre(0.0, z, order)
    integral = np.sum(w * (np.cosh(z) - np.cosh(u)) ** l * np.cos(q * u))
    pref = math.sqrt(2 * l + 1) / (math.factorial(l) * math.sinh(z) ** (l + 1))
    for k in range(1, l + 1):
        pref = pref * (k - 1j * q)
    val = pref * integral
    if zeta < 0.0 and l % 2 == 1:
        val = -val
    return complex(val)


def oracle_boost_element(c: complex, l: int, n: int, zeta: float, order: int = 160) -> complex:
    """Same matrix element by direct quadrature on the sphere realization.

    Integrates conj(Y_l^n) * [U(b_zeta) Y_0^0] over S^2 with an
    `order`-node Gauss rule in cos(theta) and a uniform phi grid.  Slow and
    simple on purpose; kept as the independent check of the fast path.
    """
    q = _check_character(c)
    if l < 0 or abs(n) > l:
        raise ValueError("need 0 <= |n| <= l")
    t, wt = gauss_legendre(-1.0, 1.0, order)
    n_phi = 2 * l + 2
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    wp = 2.0 * np.pi / n_phi
    _, mult = aberrate(zeta, t)
    assert np.all(mult > 0.0)
    # boosted Y_0^0 is the constant 1/sqrt(4 pi) times the multiplier
    radial = mult ** (1j * q - 1.0) / _SQRT4PI
    theta = np.arccos(t)
    th2, ph2 = np.meshgrid(theta, phi, indexing="ij")
    integrand = np.conj(ylm(l, n, th2, ph2)) * radial[:, None]
    return complex(np.sum(integrand * wt[:, None] * wp))


def boost_element_column(c: complex, l_max: int, zeta, order: int | None = None) -> np.ndarray:
    """d_l(zeta) for l = 0..l_max at one or many rapidities.

    Shape (l_max + 1,) for scalar zeta, else (l_max + 1, len(zeta)).
    """
    zs = np.atleast_1d(np.asarray(zeta, dtype=float))
    out = np.empty((l_max + 1, zs.size), dtype=np.complex128)
    for l in range(l_max + 1):
        out[l] = [boost_element(c, l, z, order=order) for z in zs]
    if np.isscalar(zeta) or np.asarray(zeta).ndim == 0:
        return out[:, 0]
    return out


class BoostElementTable:
    """Cached d_l(zeta) values for one (c, l_max, zeta-grid) triple.

    Built once, immutable afterwards; lookups are plain array reads and safe
    from concurrent readers.  `entries[l, i]` holds d_l(zeta_nodes[i]).
    """

    def __init__(self, c: complex, l_max: int, zeta_nodes, order: int | None = None):
        _check_character(c)
        if l_max < 0:
            raise ValueError("l_max must be nonnegative")
        self.c = complex(c)
        self.l_max = int(l_max)
        self.zeta_nodes = np.array(zeta_nodes, dtype=float)
        self.zeta_nodes.setflags(write=False)
        entries = boost_element_column(self.c, self.l_max, self.zeta_nodes, order=order)
        entries.setflags(write=False)
        self.entries = entries
        # |d_l| <= 1: each is one matrix element of a unitary between unit vectors
        assert np.max(np.abs(self.entries)) <= 1.0 + 1e-12

    def oracle_residuals(self, order: int = 160) -> np.ndarray:
        """|fast - oracle| over the whole table, for reporting."""
        res = np.empty_like(self.entries, dtype=float)
        for l in range(self.l_max + 1):
            for i, z in enumerate(self.zeta_nodes):
                res[l, i] = abs(self.entries[l, i] - oracle_boost_element(self.c, l, 0, z, order=order))
        return res


def assemble_D_ln00(c: complex, l: int, n: int, khat, zeta: float,
                    table: BoostElementTable | None = None, zeta_index: int | None = None) -> complex:
    """D^{0c}_{l n 0 0}(a_k) for a_k = r(khat) b_zeta.

    The calibrated assembly is C_l conj(Y_l^n(khat)) d_l(zeta) with
    C_l = sqrt(4 pi / (2l+1)); the constant and the conjugation are fixed by
    the identity R^l_{n0}(u(phi, theta, 0)) = C_l conj(Y_l^n(theta, phi))
    checked against the rotation-boost oracle composition in the tests.
    Pass a prebuilt table (and the node index) to skip recomputing d_l.
    """
    khat = np.asarray(khat, dtype=float)
    if khat.shape != (3,) or abs(np.linalg.norm(khat) - 1.0) > 1e-10:
        raise ValueError("khat must be a unit 3-vector")
    theta = math.acos(np.clip(khat[2], -1.0, 1.0))
    phi = math.atan2(khat[1], khat[0])
    if table is not None:
        if zeta_index is None:
            raise ValueError("zeta_index required with a table")
        d = table.entries[l, zeta_index]
    else:
        d = boost_element(c, l, zeta)
    cl = math.sqrt(4.0 * math.pi / (2 * l + 1))
    return complex(cl * np.conj(ylm(l, n, theta, phi)) * d)
