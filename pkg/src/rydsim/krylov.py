"""Lanczos evaluation of exp(-i*H*dt) @ psi for Hermitian H given only a
matvec, with adaptive Krylov dimension.

Both backends funnel their exponentials through `expm_multiply`: the
state-vector backend passes the structured Rydberg matvec, the MPS backend
the effective-Hamiltonian contractions. dt is in ns and the operator in
rad/us; the dimensionless phase uses the single conversion factor 1e-3.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ValidationError

__all__ = ["KrylovConfig", "KrylovReport", "expm_multiply", "NS_TO_US"]

NS_TO_US = 1e-3

# beta below this (relative to the tridiagonal scale) means an exact
# invariant subspace was reached
_BREAKDOWN_RTOL = 1e-14


@dataclass(frozen=True)
class KrylovConfig:
    """Convergence knobs for the Lanczos exponential."""

    tolerance: float = 1e-10
    max_krylov_dim: int = 100
    norm_epsilon: float = 1e-14

    def __post_init__(self):
        if not 0.0 < self.tolerance <= 1e-1:
            raise ValidationError(
                f"krylov tolerance must be in (0, 0.1], got {self.tolerance}"
            )
        if self.max_krylov_dim < 2:
            raise ValidationError(
                f"max_krylov_dim must be >= 2, got {self.max_krylov_dim}"
            )


@dataclass
class KrylovReport:
    iterations: int
    converged: bool
    residual: float


def _tridiag_exp_e1(alphas, betas, tau: float) -> np.ndarray:
    """exp(-1j*tau*T) @ e1 for the real symmetric tridiagonal T."""
    k = len(alphas)
    if k == 1:
        return np.array([np.exp(-1j * tau * alphas[0])])
    t = np.diag(alphas)
    off = np.arange(k - 1)
    t[off, off + 1] = betas
    t[off + 1, off] = betas
    evals, evecs = np.linalg.eigh(t)
    return evecs @ (np.exp(-1j * tau * evals) * evecs[0, :].conj())


def expm_multiply(
    matvec: Callable[[np.ndarray], np.ndarray],
    psi: np.ndarray,
    dt_ns: float,
    cfg: KrylovConfig = KrylovConfig(),
) -> tuple[np.ndarray, KrylovReport]:
    """Return (exp(-1j * dt * 1e-3 * H) @ psi, report) via Lanczos.

    The caller guarantees the matvec is Hermitian. The Krylov basis is grown
    with full re-orthogonalization until the standard a-posteriori estimate
    |beta_k * [exp(-i*tau*T_k)]_{k,1}| drops below the tolerance (relative
    to ||psi||), the basis hits max_krylov_dim (returned with
    converged=False; the caller decides), or beta vanishes (exact invariant
    subspace). Negative dt propagates backwards.
    """
    norm_in = float(np.linalg.norm(psi))
    if norm_in <= cfg.norm_epsilon:
        return psi.copy(), KrylovReport(iterations=0, converged=True, residual=0.0)
    if dt_ns == 0.0:
        return psi.copy(), KrylovReport(iterations=1, converged=True, residual=0.0)

    tau = dt_ns * NS_TO_US
    basis = [np.asarray(psi, dtype=complex) / norm_in]
    alphas: list[float] = []
    betas: list[float] = []
    y = np.array([1.0 + 0.0j])
    converged = False
    residual = np.inf

    while True:
        w = np.asarray(matvec(basis[-1]), dtype=complex)
        alpha = float(np.vdot(basis[-1], w).real)
        alphas.append(alpha)
        w -= alpha * basis[-1]
        if betas:
            w -= betas[-1] * basis[-2]
        for v in basis:  # full re-orthogonalization
            w -= np.vdot(v, w) * v
        beta = float(np.linalg.norm(w))

        y = _tridiag_exp_e1(alphas, betas, tau)
        residual = beta * abs(y[-1])
        k = len(alphas)
        scale = max(1.0, max(abs(a) for a in alphas), max(betas, default=0.0))
        if residual <= cfg.tolerance or beta <= _BREAKDOWN_RTOL * scale:
            converged = True
            break
        if k >= cfg.max_krylov_dim:
            break
        betas.append(beta)
        basis.append(w / beta)

    out = np.zeros_like(basis[0])
    for coeff, v in zip(y, basis):
        out += coeff * v
    out *= norm_in
    return out, KrylovReport(
        iterations=len(alphas), converged=converged, residual=float(residual)
    )
