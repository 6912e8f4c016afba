"""Reference implementation of the phase-sum kernel.

``phase_sum(k, amps, x)`` computes

    out[r, p] = sum_q amps[r, q] * exp(-1j * dot(k[q], x[p]))

for k of shape (n_q, d), amps of shape (n_rhs, n_q) and x of shape (n_x, d).
Metric signs are the caller's business: k arrives with its index already
lowered, so the exponent is a plain Euclidean dot product.

The computation is chunked over evaluation points to bound the size of the
intermediate phase matrix.
"""

import numpy as np

# upper bound on the number of complex entries held in the phase matrix
_CHUNK_ELEMS = 4_000_000


def phase_sum(k, amps, x):
    k = np.ascontiguousarray(k, dtype=np.float64)
    amps = np.ascontiguousarray(amps, dtype=np.complex128)
    x = np.ascontiguousarray(x, dtype=np.float64)
    if k.ndim != 2 or x.ndim != 2 or amps.ndim != 2:
        raise ValueError("phase_sum expects 2-d arrays")
    n_q, d = k.shape
    if amps.shape[1] != n_q:
        raise ValueError("amps and k disagree on node count")
    if x.shape[1] != d:
        raise ValueError("x and k disagree on dimension")
    n_x = x.shape[0]
    out = np.empty((amps.shape[0], n_x), dtype=np.complex128)
    step = max(1, _CHUNK_ELEMS // max(n_q, 1))
    for lo in range(0, n_x, step):
        hi = min(lo + step, n_x)
        kern = np.exp(-1j * (x[lo:hi] @ k.T))
        out[:, lo:hi] = amps @ kern.T
    return out
