"""Resource planning for the MPS backend.

Upper bounds derived from the configured qubit count N, bond-dimension cap
chi and an assumed Lanczos iteration count k: the evolved MPS (N tensors of
at most 2*chi^2 complex entries), the bath tensors (one per cut, MPO width
bounded by N+2 before compression), and the Krylov basis over merged
two-site blocks of size 2*chi*2*chi. Deliberately pessimistic: compression
shrinks the MPO width and real bond profiles taper toward the edges.
"""

from __future__ import annotations

from ..errors import ValidationError

__all__ = [
    "memory_estimate_mps",
    "runtime_estimate_mps",
    "mpo_width_bound",
    "ASSUMED_LANCZOS_ITERATIONS",
]

ASSUMED_LANCZOS_ITERATIONS = 30
_BYTES_PER_COMPLEX = 16


def mpo_width_bound(n_qubits: int) -> int:
    """Uncompressed MPO bond-dimension bound for all-pair interactions."""
    return n_qubits + 2


def _check_n(n_qubits: int):
    if n_qubits < 2:
        raise ValidationError(f"need at least 2 qubits, got {n_qubits}")


def memory_estimate_mps(
    n_qubits: int, max_bond_dim: int, krylov_dim: int = ASSUMED_LANCZOS_ITERATIONS
) -> int:
    """Peak-memory upper bound in bytes for one TDVP evolution."""
    _check_n(n_qubits)
    if max_bond_dim < 1 or krylov_dim < 1:
        raise ValidationError("max_bond_dim and krylov_dim must be >= 1")
    chi_sq = max_bond_dim**2
    tensors = n_qubits * 2 * chi_sq
    baths = n_qubits * mpo_width_bound(n_qubits) * chi_sq
    krylov = krylov_dim * 4 * chi_sq
    return _BYTES_PER_COMPLEX * (tensors + baths + krylov)


def runtime_estimate_mps(
    n_qubits: int, max_bond_dim: int, krylov_dim: int = ASSUMED_LANCZOS_ITERATIONS
) -> float:
    """Relative cost of one TDVP step, in arbitrary units.

    Linear in the chain length, cubic in chi: environment updates cost
    chi^3 * w per site and each Lanczos iteration another chi^3.
    """
    _check_n(n_qubits)
    chi_cubed = float(max_bond_dim) ** 3
    return n_qubits * (chi_cubed * mpo_width_bound(n_qubits) + krylov_dim * chi_cubed)
