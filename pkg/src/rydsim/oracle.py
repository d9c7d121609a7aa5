"""Dense-matrix reference evolution for small systems.

Each step exponentiates the full 2^N x 2^N Hamiltonian by Hermitian
eigendecomposition; deliberately independent of the Lanczos code path so
the two routes can check each other. Consecutive identical slices reuse the
eigendecomposition (constant pulses cost one factorization).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .hamiltonian import HamiltonianSlice, Register, build_dense, build_diagonal, interaction_matrix
from .krylov import NS_TO_US
from .observables import ObservableRecord, ObservableSpec, scheduled_records
from .pulses import DiscretizedSequence

__all__ = ["OracleRunConfig", "OracleRunResult", "evolve_dense", "ORACLE_QUBIT_CAP"]

ORACLE_QUBIT_CAP = 12


@dataclass(frozen=True)
class OracleRunConfig:
    initial_state: np.ndarray | None = None
    observables: tuple[ObservableSpec, ...] = ()
    snapshot_every: int = 0


@dataclass
class OracleRunResult:
    final_state: np.ndarray
    observables: list[ObservableRecord]
    snapshots: list[tuple[float, np.ndarray]]
    dt_ns: int
    duration_ns: int


def evolve_dense(
    seq: DiscretizedSequence, reg: Register, cfg: OracleRunConfig = OracleRunConfig()
) -> OracleRunResult:
    """Exact dense evolution; refuses N > 12."""
    n = reg.qubit_count
    if n > ORACLE_QUBIT_CAP:
        raise ValidationError(
            f"oracle backend refuses N={n} > {ORACLE_QUBIT_CAP}"
        )
    if seq.qubit_count != n:
        raise ValidationError(
            f"sequence has {seq.qubit_count} qubits but register has {n}"
        )
    dim = 2**n
    if cfg.initial_state is None:
        psi = np.zeros(dim, dtype=complex)
        psi[0] = 1.0
    else:
        psi = np.asarray(cfg.initial_state, dtype=complex).copy()
        if psi.shape != (dim,):
            raise ValidationError(
                f"initial state has shape {psi.shape}, expected ({dim},)"
            )

    u = interaction_matrix(reg)
    total_steps = seq.step_count
    records: list[ObservableRecord] = []
    snapshots: list[tuple[float, np.ndarray]] = []
    cached_params = None
    evals = evecs = None
    for k in range(total_steps):
        omegas, deltas = seq.step(k)
        params = (omegas.tobytes(), deltas.tobytes())
        if params != cached_params:
            slice_ = HamiltonianSlice(omegas, build_diagonal(deltas, u))
            evals, evecs = np.linalg.eigh(build_dense(slice_))
            cached_params = params
        phases = np.exp(-1j * seq.dt_ns * NS_TO_US * evals)
        psi = evecs @ (phases * (evecs.conj().T @ psi))
        t_ns = (k + 1) * seq.dt_ns
        records.extend(
            scheduled_records(cfg.observables, k + 1, total_steps, t_ns, psi)
        )
        if cfg.snapshot_every and (
            (k + 1) % cfg.snapshot_every == 0 or k + 1 == total_steps
        ):
            snapshots.append((float(t_ns), psi.copy()))
    return OracleRunResult(
        final_state=psi,
        observables=records,
        snapshots=snapshots,
        dt_ns=seq.dt_ns,
        duration_ns=seq.duration_ns,
    )
