"""Rydberg Hamiltonian in the structured form exploited by the state-vector
backend: a 2^N diagonal (detunings + pairwise van der Waals terms) plus one
bit-flip term per driven qubit.

Bit-order convention, shared by every backend and observable: qubit i is bit
i of the basis-state index, with qubit 0 the least significant bit. Energies
are in rad/us; positions in um; the interaction constant C in rad*um^6/us.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "Register",
    "interaction_matrix",
    "weighted_bit_sum",
    "interaction_diagonal",
    "build_diagonal",
    "HamiltonianSlice",
    "apply_hamiltonian",
    "build_dense",
    "DENSE_QUBIT_CAP",
]

DENSE_QUBIT_CAP = 14

# numba kernel pays off once a pass over the state dwarfs call overhead
_KERNEL_MIN_QUBITS = 10

try:
    from ._kernels import matvec_bitflip_diag

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


@dataclass(frozen=True)
class Register:
    """Atom positions (um, 2D or 3D) and the interaction constant C."""

    positions_um: tuple[tuple[float, ...], ...]
    interaction_c: float

    def __post_init__(self):
        pts = tuple(tuple(float(x) for x in p) for p in self.positions_um)
        object.__setattr__(self, "positions_um", pts)
        if len(pts) < 1:
            raise ValidationError("register needs at least one atom")
        dims = {len(p) for p in pts}
        if not dims <= {2, 3} or len(dims) != 1:
            raise ValidationError(
                f"positions must all be 2D or all 3D, got dimensions {sorted(dims)}"
            )

    @property
    def qubit_count(self) -> int:
        return len(self.positions_um)


def interaction_matrix(reg: Register) -> np.ndarray:
    """Symmetric N x N matrix U with U_ij = C / |r_i - r_j|^6, zero diagonal.

    Raises ValidationError on coincident atoms (zero distance).
    """
    pos = np.asarray(reg.positions_um, dtype=float)
    n = reg.qubit_count
    u = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            r2 = float(np.sum((pos[i] - pos[j]) ** 2))
            if r2 == 0.0:
                raise ValidationError(f"atoms {i} and {j} coincide")
            u[i, j] = u[j, i] = reg.interaction_c / r2**3
    return u


def weighted_bit_sum(weights) -> np.ndarray:
    """Vector v of length 2^N with v[b] = sum_i weights[i] * bit_i(b).

    Built by doubling (O(2^N) work): appending qubit k splits the index
    range into bit_k = 0 and bit_k = 1 halves.
    """
    w = np.asarray(weights, dtype=float)
    out = np.zeros(2 ** len(w))
    size = 1
    for wk in w:
        out[size : 2 * size] = out[:size] + wk
        size *= 2
    return out


def interaction_diagonal(u: np.ndarray) -> np.ndarray:
    """Diagonal of the pair term: d[b] = sum_{i<j} U_ij bit_i(b) bit_j(b).

    Doubling recursion: extending by qubit k adds, on the bit_k = 1 half,
    the accumulated couplings of k to every set bit below it.
    """
    n = u.shape[0]
    out = np.zeros(2**n)
    size = 1
    for k in range(n):
        half = out[:size] + weighted_bit_sum(u[:k, k])
        out[size : 2 * size] = half
        size *= 2
    return out


def build_diagonal(deltas, u: np.ndarray) -> np.ndarray:
    """Full diagonal d[b] = -sum_i delta_i bit_i(b) + sum_{i<j} U_ij bit_i bit_j."""
    deltas = np.asarray(deltas, dtype=float)
    if u.shape != (len(deltas), len(deltas)):
        raise ValidationError(
            f"interaction matrix shape {u.shape} does not match "
            f"{len(deltas)} detunings"
        )
    return weighted_bit_sum(-deltas) + interaction_diagonal(u)


@dataclass(frozen=True)
class HamiltonianSlice:
    """One piecewise-constant Hamiltonian: per-qubit drives + 2^N diagonal."""

    omegas: np.ndarray  # shape (N,), rad/us
    diagonal: np.ndarray  # shape (2^N,), rad/us

    def __post_init__(self):
        omegas = np.ascontiguousarray(self.omegas, dtype=float)
        diagonal = np.ascontiguousarray(self.diagonal, dtype=float)
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "diagonal", diagonal)
        if diagonal.shape != (2 ** len(omegas),):
            raise ValidationError(
                f"diagonal has length {diagonal.shape}, expected 2^{len(omegas)}"
            )

    @property
    def qubit_count(self) -> int:
        return len(self.omegas)

    @classmethod
    def from_parameters(cls, omegas, deltas, u: np.ndarray) -> "HamiltonianSlice":
        return cls(np.asarray(omegas, dtype=float), build_diagonal(deltas, u))


def _apply_numpy(slice_: HamiltonianSlice, psi: np.ndarray, out: np.ndarray):
    n = slice_.qubit_count
    np.multiply(psi, slice_.diagonal, out=out)
    src = psi.reshape((2,) * n)
    dst = out.reshape((2,) * n)
    for i in range(n):
        c = 0.5 * slice_.omegas[i]
        if c != 0.0:
            # sigma^x_i swaps the two halves along the axis of bit i
            dst += c * np.flip(src, axis=n - 1 - i)
    return out


def apply_hamiltonian(
    slice_: HamiltonianSlice, psi: np.ndarray, out=None, force_numpy: bool = False
) -> np.ndarray:
    """H @ psi without materializing H: diagonal product + scaled bit-flip adds.

    The default path uses a fused compiled kernel for large N; pass
    `force_numpy=True` for the sequential pure-numpy reference (both are
    deterministic, the flag exists so tests can cross-check the kernels).
    """
    n = slice_.qubit_count
    if psi.shape != (2**n,):
        raise ValidationError(
            f"state has shape {psi.shape}, expected ({2 ** n},)"
        )
    if out is None:
        out = np.empty_like(psi)
    if _HAVE_NUMBA and not force_numpy and n >= _KERNEL_MIN_QUBITS:
        matvec_bitflip_diag(
            np.ascontiguousarray(psi),
            slice_.diagonal,
            0.5 * slice_.omegas,
            out,
        )
        return out
    return _apply_numpy(slice_, psi, out)


def build_dense(slice_: HamiltonianSlice) -> np.ndarray:
    """Dense Hermitian 2^N x 2^N matrix of the slice; small-N oracle only."""
    n = slice_.qubit_count
    if n > DENSE_QUBIT_CAP:
        raise ValidationError(
            f"dense Hamiltonian refused for N={n} > {DENSE_QUBIT_CAP} "
            "(exponential memory); use the structured apply instead"
        )
    dim = 2**n
    h = np.zeros((dim, dim), dtype=complex)
    h[np.arange(dim), np.arange(dim)] = slice_.diagonal
    rows = np.arange(dim)
    for i in range(n):
        h[rows, rows ^ (1 << i)] += 0.5 * slice_.omegas[i]
    return h
