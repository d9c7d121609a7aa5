"""Compiled hot loops for the state-vector backend.

The bit-flip matvec is the single kernel worth fusing: one pass computes
out[b] = diag[b]*psi[b] + sum_i half_omega[i]*psi[b ^ (1<<i)], instead of
N+1 separate passes over a 2^N array. Element results do not depend on
evaluation order across b, so the kernel is deterministic.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def matvec_bitflip_diag(psi, diag, half_omega, out):
    n = psi.shape[0]
    nq = half_omega.shape[0]
    for b in range(n):
        acc = diag[b] * psi[b]
        for i in range(nq):
            c = half_omega[i]
            if c != 0.0:
                acc += c * psi[b ^ (1 << i)]
        out[b] = acc
