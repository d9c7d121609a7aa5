"""Run orchestration shared by the CLI and tests.

Samples and discretizes the program, dispatches the configured backend,
and packages everything into a JSON-serializable RunResult. Result files
are deterministic for a fixed (sequence, config, seed, threads=1) modulo
the volatile timing fields listed in VOLATILE_FIELDS; writes go through a
temp file + rename so failures never leave partial outputs.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ValidationError
from .generator import adiabatic_program
from .hamiltonian import Register
from .krylov import KrylovConfig
from .mps import TdvpConfig, memory_estimate_mps, runtime_estimate_mps
from .mps.state import DENSE_CONVERSION_CAP
from .mps_backend import MpsRunConfig, evolve_mps
from .observables import format_bitstring, sample_bitstrings
from .oracle import OracleRunConfig, evolve_dense
from .pulses import ChannelProgram, DiscretizedSequence, discretize, sample_program
from .sequence_io import RunConfig
from .sv import SvRunConfig, evolve_sv, memory_estimate_sv

__all__ = [
    "RunResult",
    "execute_run",
    "compare_results",
    "benchmark_grid",
    "resource_report",
    "write_json_atomic",
    "VOLATILE_FIELDS",
]

# fields that legitimately differ between identical runs (timing only)
VOLATILE_FIELDS = (
    ("metadata", "timestamp_utc"),
    ("diagnostics", "wall_time_per_step_s"),
    ("diagnostics", "total_wall_time_s"),
)

RECOMMEND_SV_MAX_QUBITS = 27


def _native(obj):
    """Recursively convert numpy scalars/arrays so json.dumps round-trips."""
    if isinstance(obj, dict):
        return {k: _native(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_native(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_native(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _state_payload(state: np.ndarray) -> dict:
    return {
        "re": [float(x) for x in state.real],
        "im": [float(x) for x in state.imag],
    }


def _state_from_payload(payload) -> np.ndarray:
    return np.asarray(payload["re"]) + 1j * np.asarray(payload["im"])


class RunResult:
    """Thin wrapper over the serialized result document."""

    def __init__(self, data: dict):
        self.data = data

    def __eq__(self, other):
        return isinstance(other, RunResult) and self.data == other.data

    @property
    def metadata(self) -> dict:
        return self.data["metadata"]

    @property
    def observables(self) -> list:
        return self.data["observables"]

    @property
    def diagnostics(self) -> dict:
        return self.data["diagnostics"]

    @property
    def final_state(self) -> np.ndarray | None:
        payload = self.data.get("final_state")
        return None if payload is None else _state_from_payload(payload)

    @property
    def snapshots(self) -> list[tuple[float, np.ndarray]]:
        return [
            (s["t_ns"], _state_from_payload(s)) for s in self.data.get("snapshots", [])
        ]

    def to_json(self) -> str:
        return json.dumps(self.data, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "RunResult":
        return cls(json.loads(text))

    def save(self, path):
        write_json_atomic(path, self.to_json())

    @classmethod
    def load(cls, path) -> "RunResult":
        return cls.from_json(Path(path).read_text())

    def strip_volatile(self) -> dict:
        """Copy of the document without the timing fields."""
        doc = json.loads(self.to_json())
        for section, key in VOLATILE_FIELDS:
            doc.get(section, {}).pop(key, None)
        return doc

    def observables_csv(self) -> str:
        lines = ["spec_index,kind,qubits,step,t_ns,value_index,value"]
        for rec in self.observables:
            qubits = ";".join(str(q) for q in rec["qubits"])
            for v_index, value in enumerate(rec["values"]):
                lines.append(
                    f"{rec['spec_index']},{rec['kind']},{qubits},"
                    f"{rec['step']},{rec['t_ns']},{v_index},{value!r}"
                )
        return "\n".join(lines) + "\n"


def write_json_atomic(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sequence_digest(register: Register, program: ChannelProgram) -> str:
    blob = repr((register, program)).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _limit_threads(threads):
    if threads is None:
        return None
    try:
        from threadpoolctl import threadpool_limits

        return threadpool_limits(limits=int(threads))
    except ImportError:  # pragma: no cover - declared dependency
        return None


def execute_run(
    register: Register, program: ChannelProgram, cfg: RunConfig
) -> RunResult:
    """Sample, discretize, run the selected backend and package the result."""
    n = register.qubit_count
    seq = discretize(sample_program(program), cfg.dt_ns)
    if seq.qubit_count != n:
        raise ValidationError(
            f"program has {seq.qubit_count} channels but register has {n} atoms"
        )

    store_final = cfg.store_final_state
    if store_final is None:
        store_final = n <= DENSE_CONVERSION_CAP
    elif store_final and n > DENSE_CONVERSION_CAP:
        raise ValidationError(
            f"dense final-state artifacts need N <= {DENSE_CONVERSION_CAP}"
        )

    limiter = _limit_threads(cfg.threads)
    started = time.perf_counter()
    try:
        if cfg.backend == "sv":
            initial = None
            if cfg.initial_bits:
                initial = np.zeros(2**n, dtype=complex)
                initial[cfg.initial_bits] = 1.0
            backend_result = evolve_sv(
                seq,
                register,
                SvRunConfig(
                    krylov=cfg.krylov,
                    initial_state=initial,
                    observables=cfg.observables,
                    snapshot_every=cfg.snapshot_every,
                    qubit_cap=cfg.qubit_cap,
                    allow_above_cap=cfg.allow_above_cap,
                    memory_budget_bytes=cfg.memory_budget_bytes,
                ),
            )
        elif cfg.backend == "mps":
            backend_result = evolve_mps(
                seq,
                register,
                MpsRunConfig(
                    tdvp=cfg.mps,
                    initial_bits=cfg.initial_bits,
                    observables=cfg.observables,
                    snapshot_every=cfg.snapshot_every,
                    reorder=cfg.reorder,
                    reorder_threshold=cfg.reorder_threshold,
                    memory_budget_bytes=cfg.memory_budget_bytes,
                ),
            )
        else:
            initial = None
            if cfg.initial_bits:
                initial = np.zeros(2**n, dtype=complex)
                initial[cfg.initial_bits] = 1.0
            backend_result = evolve_dense(
                seq,
                register,
                OracleRunConfig(
                    initial_state=initial,
                    observables=cfg.observables,
                    snapshot_every=cfg.snapshot_every,
                ),
            )
    finally:
        if limiter is not None:
            limiter.unregister()
    total_wall = time.perf_counter() - started

    return RunResult(
        _assemble_document(
            register, program, seq, cfg, backend_result, total_wall, store_final
        )
    )


def _assemble_document(
    register, program, seq: DiscretizedSequence, cfg: RunConfig,
    backend_result, total_wall: float, store_final: bool,
) -> dict:
    n = register.qubit_count
    metadata = {
        "tool": "rydsim",
        "version": __version__,
        "numpy_version": np.__version__,
        "timestamp_utc": datetime.now(timezone.utc).isoformat(),
        "backend": cfg.backend,
        "qubit_count": n,
        "dt_ns": seq.dt_ns,
        "duration_ns": seq.duration_ns,
        "step_count": seq.step_count,
        "sequence_digest": _sequence_digest(register, program),
        "config": cfg.echo(),
    }
    observables = [
        {
            "spec_index": rec.spec_index,
            "kind": rec.kind,
            "qubits": list(rec.qubits),
            "step": rec.step,
            "t_ns": float(rec.t_ns),
            "values": [float(v) for v in rec.values],
        }
        for rec in backend_result.observables
    ]
    diagnostics: dict = {"peak_memory_bytes": getattr(backend_result, "peak_memory_bytes", 0)}
    if cfg.backend == "sv":
        diagnostics.update(
            krylov_iterations=[r.iterations for r in backend_result.krylov_reports],
            krylov_residuals=[float(r.residual) for r in backend_result.krylov_reports],
            wall_time_per_step_s=[float(t) for t in backend_result.step_wall_times_s],
        )
    elif cfg.backend == "mps":
        diagnostics.update(
            bond_dimensions=[
                list(d.bond_dimensions) for d in backend_result.step_diagnostics
            ],
            max_bond_dimension=backend_result.max_bond_dimension,
            truncation_weight_per_step=[
                float(d.truncation_weight_added)
                for d in backend_result.step_diagnostics
            ],
            truncation_weight_total=float(backend_result.truncation_weight),
            chi_saturated=backend_result.chi_saturated,
            krylov_iterations_max=[
                d.krylov_iterations_max for d in backend_result.step_diagnostics
            ],
            peak_krylov_vectors=max(
                (d.peak_krylov_vectors for d in backend_result.step_diagnostics),
                default=0,
            ),
            ordering=list(backend_result.ordering),
            wall_time_per_step_s=[float(t) for t in backend_result.step_wall_times_s],
        )
    diagnostics["total_wall_time_s"] = float(total_wall)

    if store_final:
        if cfg.backend == "mps":
            final = backend_result.final_state.to_statevector()
        else:
            final = backend_result.final_state
        final_payload = _state_payload(final)
    else:
        final_payload = None

    samples_payload = None
    if cfg.sample_shots:
        state = backend_result.final_state
        indices = sample_bitstrings(state, cfg.sample_shots, cfg.seed)
        counts: dict[str, int] = {}
        for b in indices:
            key = format_bitstring(int(b), n)
            counts[key] = counts.get(key, 0) + 1
        samples_payload = {
            "shots": cfg.sample_shots,
            "seed": cfg.seed,
            "counts": dict(sorted(counts.items())),
        }

    return _native(
        {
            "metadata": metadata,
            "observables": observables,
            "diagnostics": diagnostics,
            "final_state": final_payload,
            "snapshots": [
                {"t_ns": float(t), **_state_payload(state)}
                for t, state in backend_result.snapshots
            ],
            "samples": samples_payload,
        }
    )


# -- compare -------------------------------------------------------------------


def compare_results(a: RunResult, b: RunResult) -> dict:
    """Norm differences / fidelities between two result files.

    Uses state snapshots at common times when both results carry them,
    always including the final states when stored; otherwise falls back to
    matching observable records. Raises ValidationError when nothing is
    comparable.
    """
    n_a = a.metadata["qubit_count"]
    n_b = b.metadata["qubit_count"]
    if n_a != n_b:
        raise ValidationError(f"qubit counts differ: {n_a} vs {n_b}")
    report: dict = {"qubit_count": n_a}

    snaps_a = dict(a.snapshots)
    snaps_b = dict(b.snapshots)
    common_times = sorted(set(snaps_a) & set(snaps_b))
    if common_times:
        from .observables import fidelity as state_fidelity
        from .observables import norm_difference

        report["times_ns"] = common_times
        report["norm_difference"] = [
            float(norm_difference(snaps_a[t], snaps_b[t])) for t in common_times
        ]
        report["fidelity"] = [
            float(state_fidelity(snaps_a[t], snaps_b[t])) for t in common_times
        ]

    fin_a, fin_b = a.final_state, b.final_state
    if fin_a is not None and fin_b is not None:
        from .observables import fidelity as state_fidelity
        from .observables import norm_difference

        report["final"] = {
            "norm_difference": float(norm_difference(fin_a, fin_b)),
            "fidelity": float(state_fidelity(fin_a, fin_b)),
        }

    if "final" not in report and "times_ns" not in report:
        matches = _match_observables(a.observables, b.observables)
        if not matches:
            raise ValidationError(
                "results share no final states, no snapshot times and no "
                "matching observable records; nothing to compare"
            )
        report["observables"] = matches
    return report


def _match_observables(recs_a, recs_b) -> list[dict]:
    by_key = {}
    for rec in recs_a:
        by_key[(rec["kind"], tuple(rec["qubits"]), rec["t_ns"])] = rec["values"]
    matches = []
    for rec in recs_b:
        key = (rec["kind"], tuple(rec["qubits"]), rec["t_ns"])
        if key in by_key:
            diff = float(
                np.abs(np.asarray(by_key[key]) - np.asarray(rec["values"])).max()
            )
            matches.append(
                {"kind": rec["kind"], "qubits": list(rec["qubits"]),
                 "t_ns": rec["t_ns"], "max_abs_diff": diff}
            )
    return matches


# -- benchmark -----------------------------------------------------------------


def benchmark_grid(
    qubit_counts,
    backends=("sv",),
    dts=(10,),
    chis=(64,),
    repeats: int = 3,
    duration_ns: int = 100,
    wall_cap_s: float = 600.0,
    krylov_tolerance: float = 1e-10,
    mps_precision: float = 1e-5,
) -> list[dict]:
    """Median wall-clock and memory for the deterministic generator workload.

    Cells whose first run exceeds the cap are marked timed out (remaining
    repeats and larger qubit counts in the same family are skipped).
    """
    cells = []
    for backend in backends:
        chi_values = chis if backend == "mps" else (None,)
        for dt in dts:
            for chi in chi_values:
                family_timed_out = False
                for n in sorted(qubit_counts):
                    cell = {
                        "backend": backend,
                        "n_qubits": n,
                        "dt_ns": dt,
                        "chi": chi,
                        "repeats": repeats,
                        "runs_completed": 0,
                        "median_s": None,
                        "min_s": None,
                        "max_s": None,
                        "peak_memory_bytes": None,
                        "timed_out": family_timed_out,
                    }
                    if not family_timed_out:
                        times, peak = _run_benchmark_cell(
                            backend, n, dt, chi, repeats, duration_ns,
                            wall_cap_s, krylov_tolerance, mps_precision,
                        )
                        if times:
                            cell.update(
                                runs_completed=len(times),
                                median_s=float(np.median(times)),
                                min_s=float(min(times)),
                                max_s=float(max(times)),
                                peak_memory_bytes=peak,
                                timed_out=max(times) > wall_cap_s,
                            )
                        else:
                            cell["timed_out"] = True
                        family_timed_out = cell["timed_out"]
                    cells.append(cell)
    return cells


def _run_benchmark_cell(
    backend, n, dt, chi, repeats, duration_ns, wall_cap_s,
    krylov_tolerance, mps_precision,
):
    register, program = adiabatic_program(n, duration_ns=duration_ns)
    seq = discretize(sample_program(program), dt)
    times = []
    peak = 0
    for _ in range(repeats):
        started = time.perf_counter()
        if backend == "sv":
            result = evolve_sv(
                seq, register, SvRunConfig(krylov=KrylovConfig(krylov_tolerance))
            )
        elif backend == "mps":
            result = evolve_mps(
                seq,
                register,
                MpsRunConfig(
                    tdvp=TdvpConfig(
                        precision=mps_precision,
                        max_bond_dim=chi,
                        krylov=KrylovConfig(krylov_tolerance),
                    )
                ),
            )
        else:
            result = evolve_dense(seq, register)
        elapsed = time.perf_counter() - started
        times.append(elapsed)
        peak = max(peak, getattr(result, "peak_memory_bytes", 0))
        if elapsed > wall_cap_s:
            break
    return times, peak


def benchmark_csv(cells: list[dict]) -> str:
    columns = [
        "backend", "n_qubits", "dt_ns", "chi", "repeats", "runs_completed",
        "median_s", "min_s", "max_s", "peak_memory_bytes", "timed_out",
    ]
    lines = [",".join(columns)]
    for cell in cells:
        lines.append(
            ",".join("" if cell[c] is None else str(cell[c]) for c in columns)
        )
    return "\n".join(lines) + "\n"


# -- estimate ------------------------------------------------------------------


def system_memory_bytes() -> int:
    try:
        return os.sysconf("SC_PHYS_PAGES") * os.sysconf("SC_PAGE_SIZE")
    except (ValueError, OSError):  # pragma: no cover - non-POSIX fallback
        return 8 * 2**30


def resource_report(
    n_qubits: int,
    chi: int = 1024,
    krylov_dim: int = 15,
    mps_krylov_dim: int = 30,
    budget_bytes: int | None = None,
) -> dict:
    """Memory/runtime estimates plus the backend rule of thumb."""
    budget = system_memory_bytes() if budget_bytes is None else budget_bytes
    sv_bytes = memory_estimate_sv(n_qubits, krylov_dim)
    report = {
        "n_qubits": n_qubits,
        "memory_budget_bytes": budget,
        "sv": {"krylov_dim": krylov_dim, "memory_bytes": sv_bytes},
    }
    if n_qubits >= 2:
        report["mps"] = {
            "max_bond_dim": chi,
            "krylov_dim": mps_krylov_dim,
            "memory_bytes": memory_estimate_mps(n_qubits, chi, mps_krylov_dim),
            "runtime_arbitrary_units": runtime_estimate_mps(n_qubits, chi),
        }
    recommend_sv = n_qubits <= RECOMMEND_SV_MAX_QUBITS and sv_bytes <= budget
    report["recommendation"] = "sv" if recommend_sv else "mps"
    return report
