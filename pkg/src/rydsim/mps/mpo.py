"""Exact MPO for one piecewise-constant Rydberg Hamiltonian slice.

Finite-state-machine construction: walking left to right, each bond carries
a "ready" channel (no operator placed yet), one pending channel per site to
the left holding an open number operator waiting for its partner, and a
"done" channel. Every qubit pair interacts, so the raw bond at cut b has
dimension b + 2; an SVD sweep then compresses each bond to its numerical
rank, which the 1/r^6 coupling structure keeps small.

Operator tensors have legs (left bond, bra physical, ket physical, right
bond).
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError

__all__ = ["MatrixProductOperator", "mpo_from_slice"]

_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_NUM = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
_ID = np.eye(2, dtype=complex)


class MatrixProductOperator:
    """Chain of (wl, 2, 2, wr) tensors with unit boundary bonds."""

    def __init__(self, tensors, ordering=None):
        self.tensors = [np.asarray(t, dtype=complex) for t in tensors]
        n = len(self.tensors)
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[3] != 1:
            raise ValidationError("MPO boundary bonds must have dimension 1")
        for s, t in enumerate(self.tensors):
            if t.ndim != 4 or t.shape[1] != 2 or t.shape[2] != 2:
                raise ValidationError(
                    f"site {s} tensor has shape {t.shape}, expected (w, 2, 2, w')"
                )
            if s + 1 < n and t.shape[3] != self.tensors[s + 1].shape[0]:
                raise ValidationError(f"bond mismatch between sites {s} and {s + 1}")
        self.ordering = tuple(range(n)) if ordering is None else tuple(ordering)

    @property
    def site_count(self) -> int:
        return len(self.tensors)

    @property
    def bond_dimensions(self) -> tuple[int, ...]:
        return tuple(t.shape[3] for t in self.tensors[:-1])

    def nbytes(self) -> int:
        return sum(t.nbytes for t in self.tensors)

    def to_dense(self, cap: int = 10) -> np.ndarray:
        """Dense 2^N x 2^N matrix in the original bit convention."""
        n = self.site_count
        if n > cap:
            raise ValidationError(f"dense MPO refused for N={n} > {cap}")
        acc = np.ones((1, 1, 1), dtype=complex)  # (out_prefix, in_prefix, w)
        for t in self.tensors:
            acc = np.einsum("xyw,wabv->xaybv", acc, t).reshape(
                acc.shape[0] * 2, acc.shape[1] * 2, t.shape[3]
            )
        mat = acc[:, :, 0]
        # prefix indices run over chain sites MSB-first; map chain site s
        # (qubit ordering[s]) onto bit ordering[s] of both matrix indices
        inverse = {q: s for s, q in enumerate(self.ordering)}
        axes = [inverse[n - 1 - j] for j in range(n)]
        full = mat.reshape((2,) * (2 * n))
        full = np.transpose(full, axes + [n + a for a in axes])
        return np.ascontiguousarray(full).reshape(2**n, 2**n)

    def compress(self, tol: float = 1e-12):
        """Two SVD sweeps truncating singular values below tol * s_max."""
        self._sweep_compress(forward=True, tol=tol)
        self._sweep_compress(forward=False, tol=tol)

    def _sweep_compress(self, forward: bool, tol: float):
        n = self.site_count
        if forward:
            for s in range(n - 1):
                t = self.tensors[s]
                wl, _, _, wr = t.shape
                mat = t.reshape(wl * 4, wr)
                u, sv, vh = np.linalg.svd(mat, full_matrices=False)
                keep = max(1, int(np.sum(sv > tol * sv[0]))) if sv[0] > 0 else 1
                self.tensors[s] = u[:, :keep].reshape(wl, 2, 2, keep)
                carry = sv[:keep, None] * vh[:keep, :]
                self.tensors[s + 1] = np.einsum(
                    "ab,bcdv->acdv", carry, self.tensors[s + 1]
                )
        else:
            for s in range(n - 1, 0, -1):
                t = self.tensors[s]
                wl, _, _, wr = t.shape
                mat = t.reshape(wl, 4 * wr)
                u, sv, vh = np.linalg.svd(mat, full_matrices=False)
                keep = max(1, int(np.sum(sv > tol * sv[0]))) if sv[0] > 0 else 1
                self.tensors[s] = vh[:keep, :].reshape(keep, 2, 2, wr)
                carry = u[:, :keep] * sv[None, :keep]
                self.tensors[s - 1] = np.einsum(
                    "acdv,vb->acdb", self.tensors[s - 1], carry
                )


def mpo_from_slice(
    omegas,
    deltas,
    interaction: np.ndarray,
    ordering=None,
    compress_tol: float = 1e-12,
) -> MatrixProductOperator:
    """Exact MPO of the Rydberg Hamiltonian under the given qubit ordering.

    `omegas`, `deltas` and `interaction` are indexed by original qubit
    label; `ordering[s]` is the qubit placed at chain position s. Local
    terms are (omega/2) sigma^x - delta n; each unordered pair contributes
    U_ij n_i n_j.
    """
    omegas = np.asarray(omegas, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    n = len(omegas)
    order = tuple(range(n)) if ordering is None else tuple(ordering)
    if sorted(order) != list(range(n)):
        raise ValidationError(f"ordering must be a permutation of 0..{n - 1}")
    if interaction.shape != (n, n):
        raise ValidationError(
            f"interaction matrix shape {interaction.shape}, expected {(n, n)}"
        )

    def local(q):
        return 0.5 * omegas[q] * _SX - deltas[q] * _NUM

    if n == 1:
        w = local(order[0]).reshape(1, 2, 2, 1)
        return MatrixProductOperator([w], ordering=order)

    tensors = []
    for s in range(n):
        q = order[s]
        # left bond: ready, pending_0..pending_{s-1}, done  -> s + 2 states
        # right bond: ready, pending_0..pending_s, done     -> s + 3 states
        dim_l = 1 if s == 0 else s + 2
        dim_r = 1 if s == n - 1 else s + 3
        w = np.zeros((dim_l, 2, 2, dim_r), dtype=complex)
        couplings = [interaction[order[i], q] for i in range(s)]
        if s == 0:
            w[0, :, :, 0] = _ID  # ready -> ready
            w[0, :, :, 1] = _NUM  # ready -> pending_0
            w[0, :, :, dim_r - 1] = local(q)  # ready -> done
        elif s < n - 1:
            w[0, :, :, 0] = _ID
            w[0, :, :, 1 + s] = _NUM  # open a new pending pair at this site
            w[0, :, :, dim_r - 1] = local(q)
            for i in range(s):
                w[1 + i, :, :, 1 + i] = _ID  # carry pending channels through
                w[1 + i, :, :, dim_r - 1] = couplings[i] * _NUM  # close pair (i, s)
            w[dim_l - 1, :, :, dim_r - 1] = _ID  # done -> done
        else:
            w[0, :, :, 0] = local(q)
            for i in range(s):
                w[1 + i, :, :, 0] = couplings[i] * _NUM
            w[dim_l - 1, :, :, 0] = _ID
        tensors.append(w)

    mpo = MatrixProductOperator(tensors, ordering=order)
    if compress_tol is not None:
        mpo.compress(tol=compress_tol)
    return mpo
