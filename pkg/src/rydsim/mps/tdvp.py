"""Second-order two-site TDVP time step.

One step with width dt performs a left-to-right half sweep at dt/2, a full
dt evolution of the rightmost bond, and the mirrored right-to-left half
sweep at dt/2, for exactly 2N-3 truncating splits. Two-site blocks evolve
forward and the single-site remainders backward, all through the shared
Lanczos exponential. Singular values below the relative truncation
precision are discarded at every split and the kept spectrum is rescaled to
preserve the norm; the discarded relative weight accumulates on the state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import SolverError, ValidationError
from ..krylov import KrylovConfig, expm_multiply
from .environments import Environments
from .mpo import MatrixProductOperator
from .state import MatrixProductState

__all__ = ["TdvpConfig", "TdvpStepDiagnostics", "tdvp_step", "split_truncate"]


@dataclass(frozen=True)
class TdvpConfig:
    precision: float = 1e-5  # relative SVD truncation precision
    max_bond_dim: int = 1024
    krylov: KrylovConfig = field(default_factory=lambda: KrylovConfig(1e-10))

    def __post_init__(self):
        if not 0.0 < self.precision < 1.0:
            raise ValidationError(
                f"truncation precision must be in (0, 1), got {self.precision}"
            )
        if self.max_bond_dim < 1:
            raise ValidationError(
                f"max_bond_dim must be >= 1, got {self.max_bond_dim}"
            )


@dataclass
class TdvpStepDiagnostics:
    bond_dimensions: tuple[int, ...]
    truncation_weight_added: float
    chi_saturated: bool
    krylov_iterations_max: int
    peak_krylov_vectors: int
    peak_memory_bytes: int

    @property
    def max_bond_dimension(self) -> int:
        return max(self.bond_dimensions, default=1)


def split_truncate(theta: np.ndarray, precision: float, max_bond_dim: int):
    """SVD-split a matricized two-site block with relative truncation.

    Discards the largest tail of singular values whose cumulative squared
    sum stays within precision^2 of the total, then caps at max_bond_dim
    (setting the saturation flag when the cap binds). The kept spectrum is
    rescaled to preserve the input norm. Returns
    (u, s, vh, discarded_relative_weight, saturated).
    """
    try:
        u, s, vh = np.linalg.svd(theta, full_matrices=False)
    except np.linalg.LinAlgError:  # rare LAPACK non-convergence
        import scipy.linalg

        u, s, vh = scipy.linalg.svd(theta, full_matrices=False, lapack_driver="gesvd")
    sq = s * s
    total = float(sq.sum())
    if total == 0.0:
        return u[:, :1], s[:1], vh[:1], 0.0, False
    tails = np.concatenate([np.cumsum(sq[::-1])[::-1], [0.0]])
    keep = int(np.argmax(tails <= precision**2 * total))
    keep = max(1, keep)
    saturated = keep > max_bond_dim
    if saturated:
        keep = max_bond_dim
    discarded = float(tails[keep]) / total
    s_kept = s[:keep] * np.sqrt(total / float(sq[:keep].sum()))
    return u[:, :keep], s_kept, vh[:keep], discarded, saturated


def _merge(mps: MatrixProductState, b: int) -> np.ndarray:
    return np.einsum("lsa,atr->lstr", mps.tensors[b], mps.tensors[b + 1])


class _StepState:
    """Mutable bookkeeping threaded through one tdvp_step call."""

    def __init__(self, mps, envs, cfg, dt_ns):
        self.mps = mps
        self.envs = envs
        self.cfg = cfg
        self.dt_ns = dt_ns
        self.weight_added = 0.0
        self.saturated = False
        self.kry_max = 0
        self.kry_vectors = 0
        self.peak_bytes = 0

    def _account(self, report, vector_nbytes):
        self.kry_max = max(self.kry_max, report.iterations)
        self.kry_vectors = max(self.kry_vectors, report.iterations + 1)
        live = (
            self.mps.nbytes()
            + self.envs.nbytes()
            + (report.iterations + 1) * vector_nbytes
        )
        self.peak_bytes = max(self.peak_bytes, live)

    def evolve(self, matvec, tensor, dt_ns, where):
        shape = tensor.shape
        flat = tensor.reshape(-1)
        mv = lambda v: matvec(v.reshape(shape)).reshape(-1)
        out, report = expm_multiply(mv, flat, dt_ns, self.cfg.krylov)
        self._account(report, flat.nbytes)
        if not report.converged:
            raise SolverError(
                f"Krylov failed to converge at {where} "
                f"(residual {report.residual:.3e})",
                site=where[1],
                residual=report.residual,
            )
        return out.reshape(shape)

    def split(self, theta, b, absorb_right: bool):
        """Split the evolved two-site block at bond b, truncating."""
        chi_l, _, _, chi_r = theta.shape
        u, s, vh, discarded, saturated = split_truncate(
            theta.reshape(chi_l * 2, 2 * chi_r),
            self.cfg.precision,
            self.cfg.max_bond_dim,
        )
        keep = len(s)
        self.weight_added += discarded
        self.saturated |= saturated
        if absorb_right:
            self.mps.tensors[b] = u.reshape(chi_l, 2, keep)
            self.mps.tensors[b + 1] = (s[:, None] * vh).reshape(keep, 2, chi_r)
            self.mps.center = b + 1
        else:
            self.mps.tensors[b] = (u * s[None, :]).reshape(chi_l, 2, keep)
            self.mps.tensors[b + 1] = vh.reshape(keep, 2, chi_r)
            self.mps.center = b


def tdvp_step(
    mps: MatrixProductState,
    mpo: MatrixProductOperator,
    dt_ns: float,
    cfg: TdvpConfig,
) -> tuple[MatrixProductState, TdvpStepDiagnostics]:
    """Advance the MPS by exp(-i H dt) in the two-site TDVP approximation.

    The state is updated in place (and also returned). The MPS must match
    the MPO's site count and ordering; the orthogonality center is moved to
    site 0 if it is not there already.
    """
    n = mps.qubit_count
    if mpo.site_count != n:
        raise ValidationError("MPS and MPO length mismatch")
    if mpo.ordering != mps.ordering:
        raise ValidationError("MPS and MPO must share the same qubit ordering")
    if mps.center != 0:
        mps.move_center_to(0)

    envs = Environments(mps, mpo)
    st = _StepState(mps, envs, cfg, dt_ns)

    if n == 1:
        envs.build_right_all(down_to=1)
        mps.tensors[0] = st.evolve(
            envs.one_site_matvec(0), mps.tensors[0], dt_ns, ("site", 0)
        )
        weight0 = st.weight_added
        return mps, TdvpStepDiagnostics(
            bond_dimensions=(),
            truncation_weight_added=weight0,
            chi_saturated=False,
            krylov_iterations_max=st.kry_max,
            peak_krylov_vectors=st.kry_vectors,
            peak_memory_bytes=st.peak_bytes,
        )

    envs.build_right_all(down_to=2)
    half = 0.5 * dt_ns

    # left-to-right half sweep at dt/2 (bonds 0..N-3)
    for b in range(n - 2):
        theta = st.evolve(envs.two_site_matvec(b), _merge(mps, b), half, ("bond", b))
        st.split(theta, b, absorb_right=True)
        envs.update_left(b)
        mps.tensors[b + 1] = st.evolve(
            envs.one_site_matvec(b + 1), mps.tensors[b + 1], -half, ("site", b + 1)
        )

    # rightmost bond evolves once with the full dt (single truncation here
    # keeps the total at 2N-3 splits per step)
    b = n - 2
    theta = st.evolve(envs.two_site_matvec(b), _merge(mps, b), dt_ns, ("bond", b))
    st.split(theta, b, absorb_right=False)
    envs.update_right(b + 1)

    # right-to-left half sweep at dt/2 (bonds N-3..0)
    for b in range(n - 3, -1, -1):
        mps.tensors[b + 1] = st.evolve(
            envs.one_site_matvec(b + 1), mps.tensors[b + 1], -half, ("site", b + 1)
        )
        theta = st.evolve(envs.two_site_matvec(b), _merge(mps, b), half, ("bond", b))
        st.split(theta, b, absorb_right=False)
        envs.update_right(b + 1)

    mps.truncation_weight += st.weight_added
    return mps, TdvpStepDiagnostics(
        bond_dimensions=mps.bond_dimensions,
        truncation_weight_added=st.weight_added,
        chi_saturated=st.saturated,
        krylov_iterations_max=st.kry_max,
        peak_krylov_vectors=st.kry_vectors,
        peak_memory_bytes=st.peak_bytes,
    )
