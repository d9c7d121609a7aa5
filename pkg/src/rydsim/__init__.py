"""Pulse-level emulator for neutral-atom (Rydberg) quantum hardware.

Two interchangeable backends integrate the time-dependent Schroedinger
equation for arrays of two-level atoms driven by per-qubit amplitude and
detuning waveforms: an exact state-vector engine with structured matvecs
and Lanczos exponentials, and an approximate matrix-product-state engine
with second-order two-site TDVP. A CLI harness covers runs, benchmarking,
resource estimation and cross-backend accuracy studies.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    MemoryBudgetError,
    RydsimError,
    SolverError,
    ValidationError,
)
from .hamiltonian import (
    HamiltonianSlice,
    Register,
    apply_hamiltonian,
    build_dense,
    build_diagonal,
    interaction_matrix,
)
from .krylov import KrylovConfig, KrylovReport, expm_multiply
from .pulses import (
    Blackman,
    ChannelProgram,
    Constant,
    DiscretizedSequence,
    InterpolatedSpline,
    Ramp,
    SampledSequence,
    Waveform,
    discretize,
    sample_program,
    sample_waveform,
)

__all__ = [
    "__version__",
    "Blackman",
    "ChannelProgram",
    "ConfigurationError",
    "Constant",
    "DiscretizedSequence",
    "HamiltonianSlice",
    "InterpolatedSpline",
    "KrylovConfig",
    "KrylovReport",
    "MemoryBudgetError",
    "Ramp",
    "Register",
    "RydsimError",
    "SampledSequence",
    "SolverError",
    "ValidationError",
    "Waveform",
    "apply_hamiltonian",
    "build_dense",
    "build_diagonal",
    "discretize",
    "expm_multiply",
    "interaction_matrix",
    "sample_program",
    "sample_waveform",
]
