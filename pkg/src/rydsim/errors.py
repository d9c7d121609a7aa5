"""Exception hierarchy shared across the emulator.

The CLI maps these onto exit codes: validation failures exit 2, solver
aborts exit 3, memory refusals exit 4.
"""


class RydsimError(Exception):
    """Base class for all rydsim errors."""


class ValidationError(RydsimError):
    """Malformed input: waveforms, registers, sequence/config files."""


class ConfigurationError(ValidationError):
    """Inconsistent run parameters (e.g. duration not divisible by dt)."""


class SolverError(RydsimError):
    """A propagation step failed to converge.

    Attributes carry enough context for diagnostics: which step, which
    site (MPS only) and the last residual estimate.
    """

    def __init__(self, message, step=None, site=None, residual=None):
        super().__init__(message)
        self.step = step
        self.site = site
        self.residual = residual


class MemoryBudgetError(RydsimError):
    """Predicted memory use exceeds the configured budget; refused up front."""

    def __init__(self, message, required_bytes=None, budget_bytes=None):
        super().__init__(message)
        self.required_bytes = required_bytes
        self.budget_bytes = budget_bytes
