"""Orthonormal spherical harmonics and their coupling integrals.

Conventions are load-bearing for the Wigner-matrix calibration, so the
harmonics are computed here rather than imported: Condon-Shortley phase
(carried by scipy's lpmv), orthonormal on the sphere,

    Y_l^m(theta, phi) = N_lm P_l^m(cos theta) e^{i m phi},
    Y_l^{-m} = (-1)^m conj(Y_l^m),
    N_lm = sqrt((2l+1)/(4 pi) * (l-m)!/(l+m)!).

Packed index convention for coefficient arrays: idx = l(l+1)+m, so a band
limit l <= L occupies the first (L+1)^2 slots.
"""

from __future__ import annotations

import functools

import numpy as np
from scipy.special import gammaln, lpmv


def pack_lm(l, m):
    """Flat index of (l, m) in the packed harmonic ordering."""
    return l * (l + 1) + m


def unpack_lm(idx: int):
    l = int(np.floor(np.sqrt(idx)))
    return l, idx - l * (l + 1)


def n_packed(l_max: int) -> int:
    return (l_max + 1) ** 2


def ylm(l: int, m: int, theta, phi):
    """Y_l^m on arrays of angles (broadcasting)."""
    if abs(m) > l:
        raise ValueError("|m| must not exceed l")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ma = abs(m)
    norm = np.sqrt(
        (2 * l + 1) / (4.0 * np.pi)
        * np.exp(gammaln(l - ma + 1) - gammaln(l + ma + 1))
    )
    base = norm * lpmv(ma, l, np.cos(theta)) * np.exp(1j * ma * phi)
    if m >= 0:
        return base
    return (-1) ** ma * np.conj(base)


def ylm_matrix(l_max: int, theta, phi) -> np.ndarray:
    """All harmonics up to l_max at the given angles.

    Returns shape (n_packed(l_max), n_points); row pack_lm(l, m) holds Y_l^m.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    out = np.empty((n_packed(l_max), theta.size), dtype=np.complex128)
    for l in range(l_max + 1):
        for m in range(-l, l + 1):
            out[pack_lm(l, m)] = ylm(l, m, theta, phi)
    return out


@functools.lru_cache(maxsize=32)
def triple_y_table(l_out: int, l_mid: int, l_in: int) -> np.ndarray:
    """Coupling integrals T[A, B, C] = int conj(Y_A) conj(Y_B) Y_C dOmega.

    A runs over packed (L, M) with L <= l_out, B over (l, n) with l <= l_mid,
    C over (l', n') with l' <= l_in.  Computed by a sphere rule exact for the
    combined band, then cleaned: the integrals are real and vanish unless
    M = n' - n, |l - l'| <= L <= l + l' and L + l + l' is even.  Cached and
    read-only; callers share one array.
    """
    from .quadrature import sphere_rule

    rule = sphere_rule(l_out + l_mid + l_in)
    ya = ylm_matrix(l_out, rule.theta, rule.phi)
    yb = ya if l_mid == l_out else ylm_matrix(l_mid, rule.theta, rule.phi)
    yc = ya if l_in == l_out else ylm_matrix(l_in, rule.theta, rule.phi)
    t = np.einsum(
        "as,bs,cs,s->abc", np.conj(ya), np.conj(yb), yc, rule.weights,
        optimize=True,
    )
    assert np.max(np.abs(t.imag)) < 1e-13
    out = t.real.copy()
    la, ma = np.array([unpack_lm(i) for i in range(n_packed(l_out))]).T
    lb, mb = np.array([unpack_lm(i) for i in range(n_packed(l_mid))]).T
    lc, mc = np.array([unpack_lm(i) for i in range(n_packed(l_in))]).T
    A, B, C = np.ix_(np.arange(la.size), np.arange(lb.size), np.arange(lc.size))
    forbidden = ~(
        (ma[A] + mb[B] == mc[C])
        & ((la[A] + lb[B] + lc[C]) % 2 == 0)
        & (np.abs(lb[B] - lc[C]) <= la[A])
        & (la[A] <= lb[B] + lc[C])
    )
    if forbidden.any():
        # anything the selection rules kill is quadrature noise here
        assert np.max(np.abs(out[forbidden])) < 1e-13
        out[forbidden] = 0.0
    out.setflags(write=False)
    return out
