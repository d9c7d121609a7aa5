"""Exact state-vector time evolution.

Steps through a discretized pulse sequence, building each piecewise-constant
Hamiltonian slice in structured form (the interaction diagonal is assembled
once per run, the detuning part per step) and applying the Lanczos
exponential. Observables are evaluated on the fly; storing state snapshots
is opt-in.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import MemoryBudgetError, SolverError, ValidationError
from .hamiltonian import (
    HamiltonianSlice,
    Register,
    apply_hamiltonian,
    interaction_diagonal,
    interaction_matrix,
    weighted_bit_sum,
)
from .krylov import KrylovConfig, KrylovReport, expm_multiply
from .observables import ObservableRecord, ObservableSpec, scheduled_records
from .pulses import DiscretizedSequence

__all__ = [
    "SvRunConfig",
    "SvRunResult",
    "evolve_sv",
    "memory_estimate_sv",
    "ASSUMED_KRYLOV_DIM_SV",
    "DEFAULT_QUBIT_CAP",
]

# rule-of-thumb Lanczos depth used for up-front memory refusals
ASSUMED_KRYLOV_DIM_SV = 15
DEFAULT_QUBIT_CAP = 30
_BYTES_PER_COMPLEX = 16


def memory_estimate_sv(n_qubits: int, krylov_dim: int) -> int:
    """Bytes for the state, the diagonal and krylov_dim Krylov vectors."""
    if n_qubits < 1 or krylov_dim < 0:
        raise ValidationError("need n_qubits >= 1 and krylov_dim >= 0")
    return _BYTES_PER_COMPLEX * 2**n_qubits * (krylov_dim + 2)


@dataclass(frozen=True)
class SvRunConfig:
    krylov: KrylovConfig = field(default_factory=KrylovConfig)
    initial_state: np.ndarray | None = None
    observables: tuple[ObservableSpec, ...] = ()
    snapshot_every: int = 0  # steps between stored state copies; 0 = off
    qubit_cap: int = DEFAULT_QUBIT_CAP
    allow_above_cap: bool = False
    memory_budget_bytes: int | None = None
    force_numpy_matvec: bool = False


@dataclass
class SvRunResult:
    final_state: np.ndarray
    observables: list[ObservableRecord]
    krylov_reports: list[KrylovReport]
    step_wall_times_s: list[float]
    peak_memory_bytes: int
    snapshots: list[tuple[float, np.ndarray]]
    dt_ns: int
    duration_ns: int

    @property
    def max_krylov_iterations(self) -> int:
        return max((r.iterations for r in self.krylov_reports), default=0)


def evolve_sv(
    seq: DiscretizedSequence, reg: Register, cfg: SvRunConfig = SvRunConfig()
) -> SvRunResult:
    """Apply the K = T/dt exact step exponentials and record observables."""
    n = reg.qubit_count
    if seq.qubit_count != n:
        raise ValidationError(
            f"sequence has {seq.qubit_count} qubits but register has {n}"
        )
    if n > cfg.qubit_cap and not cfg.allow_above_cap:
        raise ValidationError(
            f"N={n} exceeds the qubit cap {cfg.qubit_cap}; "
            "set allow_above_cap to override"
        )
    predicted = memory_estimate_sv(n, ASSUMED_KRYLOV_DIM_SV)
    if cfg.memory_budget_bytes is not None and predicted > cfg.memory_budget_bytes:
        raise MemoryBudgetError(
            f"state-vector run needs ~{predicted:.3e} bytes "
            f"(N={n}, {ASSUMED_KRYLOV_DIM_SV} Krylov vectors), over the budget "
            f"{cfg.memory_budget_bytes:.3e}",
            required_bytes=predicted,
            budget_bytes=cfg.memory_budget_bytes,
        )

    dim = 2**n
    if cfg.initial_state is None:
        psi = np.zeros(dim, dtype=complex)
        psi[0] = 1.0
    else:
        psi = np.ascontiguousarray(cfg.initial_state, dtype=complex)
        if psi.shape != (dim,):
            raise ValidationError(
                f"initial state has shape {psi.shape}, expected ({dim},)"
            )
        psi = psi.copy()

    diag_interaction = interaction_diagonal(interaction_matrix(reg))
    total_steps = seq.step_count
    records: list[ObservableRecord] = []
    reports: list[KrylovReport] = []
    wall: list[float] = []
    snapshots: list[tuple[float, np.ndarray]] = []
    max_iterations = 0

    for k in range(total_steps):
        started = time.perf_counter()
        omegas, deltas = seq.step(k)
        slice_ = HamiltonianSlice(
            omegas, diag_interaction + weighted_bit_sum(-deltas)
        )
        matvec = lambda v: apply_hamiltonian(
            slice_, v, force_numpy=cfg.force_numpy_matvec
        )
        psi, report = expm_multiply(matvec, psi, float(seq.dt_ns), cfg.krylov)
        reports.append(report)
        max_iterations = max(max_iterations, report.iterations)
        if not report.converged:
            raise SolverError(
                f"Krylov did not converge at step {k} "
                f"(residual {report.residual:.3e})",
                step=k,
                residual=report.residual,
            )
        t_ns = (k + 1) * seq.dt_ns
        records.extend(
            scheduled_records(cfg.observables, k + 1, total_steps, t_ns, psi)
        )
        if cfg.snapshot_every and (
            (k + 1) % cfg.snapshot_every == 0 or k + 1 == total_steps
        ):
            snapshots.append((float(t_ns), psi.copy()))
        wall.append(time.perf_counter() - started)

    return SvRunResult(
        final_state=psi,
        observables=records,
        krylov_reports=reports,
        step_wall_times_s=wall,
        peak_memory_bytes=memory_estimate_sv(n, max_iterations),
        snapshots=snapshots,
        dt_ns=seq.dt_ns,
        duration_ns=seq.duration_ns,
    )
