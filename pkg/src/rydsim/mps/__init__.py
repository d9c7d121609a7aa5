"""Matrix-product-state machinery: states, exact Rydberg MPOs, environment
caches, the two-site TDVP step, chain orderings and resource estimates."""

from .environments import Environments
from .estimates import (
    ASSUMED_LANCZOS_ITERATIONS,
    memory_estimate_mps,
    mpo_width_bound,
    runtime_estimate_mps,
)
from .mpo import MatrixProductOperator, mpo_from_slice
from .ordering import DEFAULT_THRESHOLD_FRACTION, adjacency_bandwidth, reorder_qubits
from .state import MatrixProductState, mps_from_product
from .tdvp import TdvpConfig, TdvpStepDiagnostics, split_truncate, tdvp_step

__all__ = [
    "Environments",
    "MatrixProductOperator",
    "MatrixProductState",
    "TdvpConfig",
    "TdvpStepDiagnostics",
    "ASSUMED_LANCZOS_ITERATIONS",
    "DEFAULT_THRESHOLD_FRACTION",
    "adjacency_bandwidth",
    "memory_estimate_mps",
    "mpo_from_slice",
    "mpo_width_bound",
    "mps_from_product",
    "reorder_qubits",
    "runtime_estimate_mps",
    "split_truncate",
    "tdvp_step",
]
