"""Canonical benchmark workloads.

The adiabatic-style sequence drives every qubit with a smooth
Blackman-enveloped amplitude while sweeping the detuning linearly from
negative to positive, over a chain or square-grid register; this is the
deterministic workload behind the accuracy and scaling studies. Random
piecewise programs feed the oracle-equivalence checks.
"""

from __future__ import annotations

import math

import numpy as np

from .hamiltonian import Register
from .pulses import Blackman, ChannelProgram, Constant, Ramp, blackman_window

__all__ = ["adiabatic_program", "random_program", "chain_register", "grid_register"]

# representative interaction constant shipped with the example configs,
# in rad * um^6 / us
DEFAULT_INTERACTION_C = 5_000_000.0
DEFAULT_SPACING_UM = 7.0
TWO_PI = 2.0 * math.pi


def chain_register(
    n_qubits: int,
    spacing_um: float = DEFAULT_SPACING_UM,
    interaction_c: float = DEFAULT_INTERACTION_C,
) -> Register:
    return Register(
        tuple((i * spacing_um, 0.0) for i in range(n_qubits)), interaction_c
    )


def grid_register(
    rows: int,
    cols: int,
    spacing_um: float = DEFAULT_SPACING_UM,
    interaction_c: float = DEFAULT_INTERACTION_C,
) -> Register:
    positions = tuple(
        (c * spacing_um, r * spacing_um) for r in range(rows) for c in range(cols)
    )
    return Register(positions, interaction_c)


def adiabatic_program(
    n_qubits: int,
    duration_ns: int = 1000,
    omega_peak: float = TWO_PI,
    delta_start: float = -3 * TWO_PI,
    delta_end: float = 2 * TWO_PI,
    register: Register | None = None,
) -> tuple[Register, ChannelProgram]:
    """Global Blackman drive + linear detuning sweep on a chain register."""
    if register is None:
        register = chain_register(n_qubits)
    window = blackman_window(duration_ns)
    area = omega_peak * window.sum() / window.max()
    omega_channels = [[Blackman(duration_ns, area)] for _ in range(n_qubits)]
    delta_channels = [
        [Ramp(duration_ns, delta_start, delta_end)] for _ in range(n_qubits)
    ]
    program = ChannelProgram.from_channels(
        omega_channels, delta_channels, duration_ns
    )
    return register, program


def random_program(
    rng: np.random.Generator,
    n_qubits: int,
    duration_ns: int,
    segments: int = 3,
    omega_scale: float = 2 * TWO_PI,
    delta_scale: float = 2 * TWO_PI,
) -> ChannelProgram:
    """Independent random piecewise channels per qubit (constants and ramps)."""
    edges = np.sort(rng.choice(np.arange(1, duration_ns), segments - 1, replace=False))
    lengths = np.diff(np.concatenate([[0], edges, [duration_ns]])).astype(int)

    def random_channel(scale, signed):
        lo = -scale if signed else 0.0
        segs = []
        for length in lengths:
            if rng.random() < 0.5:
                segs.append(Constant(int(length), rng.uniform(lo, scale)))
            else:
                segs.append(
                    Ramp(int(length), rng.uniform(lo, scale), rng.uniform(lo, scale))
                )
        return segs

    omega = [random_channel(omega_scale, signed=False) for _ in range(n_qubits)]
    delta = [random_channel(delta_scale, signed=True) for _ in range(n_qubits)]
    return ChannelProgram.from_channels(omega, delta, duration_ns)
