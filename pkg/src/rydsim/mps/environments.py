"""Cached MPS-MPO-MPS bath tensors and the effective-Hamiltonian matvecs
they define.

An environment at cut b is a (bra bond, MPO bond, ket bond) tensor holding
the full contraction of everything strictly left (or right) of the cut.
Left entries are grown while sweeping right and vice versa; entries behind
the moving front are dropped so at most one tensor per cut is alive, which
is what the memory bound assumes.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from .mpo import MatrixProductOperator
from .state import MatrixProductState

__all__ = ["Environments"]


class Environments:
    """left[b] / right[b] caches for cuts b = 0..N (cut b sits left of site b)."""

    def __init__(self, mps: MatrixProductState, mpo: MatrixProductOperator):
        if mps.qubit_count != mpo.site_count:
            raise ValidationError("MPS and MPO length mismatch")
        self.mps = mps
        self.mpo = mpo
        n = mps.qubit_count
        self.left: list = [None] * (n + 1)
        self.right: list = [None] * (n + 1)
        self.left[0] = np.ones((1, 1, 1), dtype=complex)
        self.right[n] = np.ones((1, 1, 1), dtype=complex)

    def nbytes(self) -> int:
        return sum(
            e.nbytes for e in self.left + self.right if e is not None
        )

    def build_right_all(self, down_to: int = 1):
        for b in range(self.mps.qubit_count - 1, down_to - 1, -1):
            self.update_right(b)

    def update_left(self, b: int):
        """left[b+1] from left[b] through site b; invalidates stale entries."""
        a = self.mps.tensors[b]
        w = self.mpo.tensors[b]
        self.left[b + 1] = np.einsum(
            "qwk,qao,wabv,kbr->ovr", self.left[b], a.conj(), w, a, optimize=True
        )
        if b + 1 < self.mps.qubit_count:  # keep the trivial boundary entry
            self.right[b + 1] = None

    def update_right(self, b: int):
        """right[b] from right[b+1] through site b; invalidates stale entries."""
        a = self.mps.tensors[b]
        w = self.mpo.tensors[b]
        self.right[b] = np.einsum(
            "oaq,wabv,kbs,qvs->owk", a.conj(), w, a, self.right[b + 1], optimize=True
        )
        if b > 0:  # keep the trivial boundary entry
            self.left[b] = None

    def recompute_left(self, b: int) -> np.ndarray:
        """Fresh contraction of sites < b (consistency checks)."""
        env = np.ones((1, 1, 1), dtype=complex)
        for s in range(b):
            a = self.mps.tensors[s]
            w = self.mpo.tensors[s]
            env = np.einsum("qwk,qao,wabv,kbr->ovr", env, a.conj(), w, a, optimize=True)
        return env

    def recompute_right(self, b: int) -> np.ndarray:
        """Fresh contraction of sites >= b (consistency checks)."""
        env = np.ones((1, 1, 1), dtype=complex)
        for s in range(self.mps.qubit_count - 1, b - 1, -1):
            a = self.mps.tensors[s]
            w = self.mpo.tensors[s]
            env = np.einsum("oaq,wabv,kbs,qvs->owk", a.conj(), w, a, env, optimize=True)
        return env

    # -- effective Hamiltonians ------------------------------------------------

    def two_site_matvec(self, b: int):
        """Matvec over merged tensors (chi_l, 2, 2, chi_r) at bond b."""
        el = self.left[b]
        er = self.right[b + 2]
        w1 = self.mpo.tensors[b]
        w2 = self.mpo.tensors[b + 1]
        if el is None or er is None:
            raise ValidationError(f"environments for bond {b} are not cached")

        def matvec(theta: np.ndarray) -> np.ndarray:
            t = np.einsum("qwk,kabr->qwabr", el, theta, optimize=True)
            t = np.einsum("qwabr,wuav->qubvr", t, w1, optimize=True)
            t = np.einsum("qubvr,vsbt->qustr", t, w2, optimize=True)
            return np.einsum("qustr,otr->quso", t, er, optimize=True)

        return matvec

    def one_site_matvec(self, s: int):
        """Matvec over single-site tensors (chi_l, 2, chi_r) at site s."""
        el = self.left[s]
        er = self.right[s + 1]
        w = self.mpo.tensors[s]
        if el is None or er is None:
            raise ValidationError(f"environments for site {s} are not cached")

        def matvec(c: np.ndarray) -> np.ndarray:
            t = np.einsum("qwk,kar->qwar", el, c, optimize=True)
            t = np.einsum("qwar,wuav->quvr", t, w, optimize=True)
            return np.einsum("quvr,ovr->quo", t, er, optimize=True)

        return matvec
