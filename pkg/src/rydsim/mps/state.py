"""Matrix product state with an explicit orthogonality center.

Site tensors have legs (left bond, physical, right bond); boundary bonds
have dimension 1. Tensors strictly left of the center are left-orthonormal,
tensors strictly right of it right-orthonormal. `ordering[s]` names the
original qubit stored at chain position s; observables and sampling always
report in original labels (the state-vector bit convention: qubit 0 is the
least significant bit).
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError

__all__ = ["MatrixProductState", "mps_from_product"]

DENSE_CONVERSION_CAP = 20


def _as_bits(pattern, n: int) -> list[int]:
    if isinstance(pattern, (int, np.integer)):
        if pattern < 0 or pattern >= 2**n:
            raise ValidationError(f"bit pattern {pattern} out of range for N={n}")
        return [(int(pattern) >> q) & 1 for q in range(n)]
    bits = [int(b) for b in pattern]
    if len(bits) != n or any(b not in (0, 1) for b in bits):
        raise ValidationError(f"bit pattern must be {n} zeros/ones, got {pattern!r}")
    return bits


class MatrixProductState:
    """Finite MPS over qubits with bookkeeping for TDVP runs."""

    def __init__(self, tensors, center: int = 0, ordering=None, truncation_weight=0.0):
        self.tensors = [np.asarray(t, dtype=complex) for t in tensors]
        n = len(self.tensors)
        if n < 1:
            raise ValidationError("MPS needs at least one site")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise ValidationError("boundary bonds must have dimension 1")
        for s, t in enumerate(self.tensors):
            if t.ndim != 3 or t.shape[1] != 2:
                raise ValidationError(
                    f"site {s} tensor has shape {t.shape}, expected (chi, 2, chi')"
                )
            if s + 1 < n and t.shape[2] != self.tensors[s + 1].shape[0]:
                raise ValidationError(f"bond mismatch between sites {s} and {s + 1}")
        if not 0 <= center < n:
            raise ValidationError(f"center {center} out of range")
        self.center = center
        self.ordering = tuple(range(n)) if ordering is None else tuple(ordering)
        if sorted(self.ordering) != list(range(n)):
            raise ValidationError(f"ordering must be a permutation, got {ordering!r}")
        self.truncation_weight = float(truncation_weight)

    # -- basic structure ---------------------------------------------------

    @property
    def qubit_count(self) -> int:
        return len(self.tensors)

    @property
    def bond_dimensions(self) -> tuple[int, ...]:
        """Interior bond dimensions (chi_1, ..., chi_{N-1})."""
        return tuple(t.shape[2] for t in self.tensors[:-1])

    @property
    def max_bond_dimension(self) -> int:
        return max(self.bond_dimensions, default=1)

    def chain_position(self, qubit: int) -> int:
        return self.ordering.index(qubit)

    def copy(self) -> "MatrixProductState":
        out = MatrixProductState(
            [t.copy() for t in self.tensors],
            center=self.center,
            ordering=self.ordering,
            truncation_weight=self.truncation_weight,
        )
        return out

    def nbytes(self) -> int:
        return sum(t.nbytes for t in self.tensors)

    def norm(self) -> float:
        """2-norm; equals the center tensor's norm in canonical form."""
        return float(np.linalg.norm(self.tensors[self.center]))

    # -- canonical form ----------------------------------------------------

    def move_center_to(self, site: int):
        """Shift the orthogonality center by QR sweeps (no truncation)."""
        if not 0 <= site < self.qubit_count:
            raise ValidationError(f"site {site} out of range")
        while self.center < site:
            c = self.center
            t = self.tensors[c]
            l, _, r = t.shape
            q, rm = np.linalg.qr(t.reshape(l * 2, r))
            self.tensors[c] = q.reshape(l, 2, -1)
            self.tensors[c + 1] = np.einsum(
                "ab,bsr->asr", rm, self.tensors[c + 1]
            )
            self.center = c + 1
        while self.center > site:
            c = self.center
            t = self.tensors[c]
            l, _, r = t.shape
            # LQ via QR of the transpose: t = L Q with Q right-orthonormal
            q, rm = np.linalg.qr(t.reshape(l, 2 * r).conj().T)
            self.tensors[c] = q.conj().T.reshape(-1, 2, r)
            self.tensors[c - 1] = np.einsum(
                "lsa,ab->lsb", self.tensors[c - 1], rm.conj().T
            )
            self.center = c - 1

    def orthonormality_defects(self) -> tuple[float, float]:
        """Max deviation from isometry left and right of the center."""
        left = 0.0
        for t in self.tensors[: self.center]:
            g = np.einsum("lsr,lsq->rq", t.conj(), t)
            left = max(left, float(np.abs(g - np.eye(t.shape[2])).max()))
        right = 0.0
        for t in self.tensors[self.center + 1 :]:
            g = np.einsum("lsr,qsr->lq", t, t.conj())
            right = max(right, float(np.abs(g - np.eye(t.shape[0])).max()))
        return left, right

    # -- conversions and overlaps -------------------------------------------

    def to_statevector(self, cap: int = DENSE_CONVERSION_CAP) -> np.ndarray:
        """Dense amplitudes in the original bit convention (N <= cap)."""
        n = self.qubit_count
        if n > cap:
            raise ValidationError(
                f"dense conversion refused for N={n} > {cap} (exponential memory)"
            )
        acc = np.ones((1, 1), dtype=complex)
        for t in self.tensors:
            acc = np.einsum("pl,lsr->psr", acc, t).reshape(-1, t.shape[2])
        amps = acc.reshape((2,) * n) if n > 1 else acc.reshape(2)
        # chain axis s holds qubit ordering[s]; numpy axis j is bit N-1-j
        inverse = {q: s for s, q in enumerate(self.ordering)}
        axes = [inverse[n - 1 - j] for j in range(n)]
        return np.ascontiguousarray(np.transpose(amps, axes)).reshape(-1)

    def overlap(self, other: "MatrixProductState") -> complex:
        """<self|other> for two MPS over the same qubits."""
        if other.qubit_count != self.qubit_count:
            raise ValidationError("overlap needs matching qubit counts")
        if other.ordering != self.ordering:
            if self.qubit_count <= DENSE_CONVERSION_CAP:
                return complex(np.vdot(self.to_statevector(), other.to_statevector()))
            raise ValidationError(
                "overlap across different orderings is only supported densely "
                f"(N <= {DENSE_CONVERSION_CAP})"
            )
        env = np.ones((1, 1), dtype=complex)
        for a, b in zip(self.tensors, other.tensors):
            env = np.einsum("ab,asr,bsq->rq", env, a.conj(), b)
        return complex(env[0, 0])

    # -- measurements --------------------------------------------------------

    def occupations(self) -> np.ndarray:
        """<n_q> for every qubit q, indexed by original label."""
        n = self.qubit_count
        lefts = [np.ones((1, 1), dtype=complex)]
        for t in self.tensors[:-1]:
            lefts.append(np.einsum("ab,asr,bsq->rq", lefts[-1], t.conj(), t))
        right = np.ones((1, 1), dtype=complex)
        vals_chain = np.empty(n)
        for s in range(n - 1, -1, -1):
            t = self.tensors[s]
            up = np.einsum(
                "ab,ar,bq,rq->", lefts[s], t[:, 1, :].conj(), t[:, 1, :], right
            )
            vals_chain[s] = up.real
            right = np.einsum("asr,bsq,rq->ab", t.conj(), t, right)
        vals_chain /= right[0, 0].real  # right is now the squared norm
        out = np.empty(n)
        for s, q in enumerate(self.ordering):
            out[q] = vals_chain[s]
        return out

    def correlation(self, qi: int, qj: int) -> float:
        """<n_qi n_qj> in original labels."""
        if qi == qj:
            raise ValidationError("use occupation for i == j")
        s1, s2 = sorted((self.chain_position(qi), self.chain_position(qj)))
        env = np.ones((1, 1), dtype=complex)
        norm_env = np.ones((1, 1), dtype=complex)
        for s, t in enumerate(self.tensors):
            if s in (s1, s2):
                env = np.einsum("ab,ar,bq->rq", env, t[:, 1, :].conj(), t[:, 1, :])
            else:
                env = np.einsum("ab,asr,bsq->rq", env, t.conj(), t)
            norm_env = np.einsum("ab,asr,bsq->rq", norm_env, t.conj(), t)
        return float((env[0, 0] / norm_env[0, 0]).real)

    def sample(self, shots: int, rng: np.random.Generator) -> np.ndarray:
        """Draw basis-state indices by sequential conditional sampling.

        Never expands the dense state: a (shots, chi) boundary matrix is
        advanced through the chain, drawing each site's bit from the exact
        conditional distribution given the prefix.
        """
        work = self.copy()
        work.move_center_to(0)
        nrm = work.norm()
        if nrm == 0.0:
            raise ValidationError("cannot sample the zero state")
        work.tensors[0] = work.tensors[0] / nrm
        boundary = np.ones((shots, 1), dtype=complex)
        indices = np.zeros(shots, dtype=np.int64)
        for s, t in enumerate(work.tensors):
            amp0 = boundary @ t[:, 0, :]
            amp1 = boundary @ t[:, 1, :]
            w0 = np.einsum("sr,sr->s", amp0.conj(), amp0).real
            w1 = np.einsum("sr,sr->s", amp1.conj(), amp1).real
            p1 = w1 / (w0 + w1)
            take1 = rng.random(shots) < p1
            indices |= take1.astype(np.int64) << self.ordering[s]
            boundary = np.where(take1[:, None], amp1, amp0)
            weight = np.where(take1, w1, w0)
            boundary /= np.sqrt(weight)[:, None]
        return indices


def mps_from_product(n: int, pattern=0, ordering=None) -> MatrixProductState:
    """MPS for the basis state |pattern>; every bond dimension is 1.

    `pattern` is a basis index (bit q = qubit q) or an iterable of N bits
    indexed by original qubit label.
    """
    if n < 1:
        raise ValidationError(f"need at least one qubit, got {n}")
    bits = _as_bits(pattern, n)
    order = tuple(range(n)) if ordering is None else tuple(ordering)
    tensors = []
    for s in range(n):
        t = np.zeros((1, 2, 1), dtype=complex)
        t[0, bits[order[s]], 0] = 1.0
        tensors.append(t)
    return MatrixProductState(tensors, center=0, ordering=order)
