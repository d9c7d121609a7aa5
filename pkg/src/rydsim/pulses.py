"""Per-qubit time-dependent controls: waveform segments, 1 ns sampling and
piecewise-constant discretization.

Conventions: times are integer nanoseconds, amplitudes and detunings are in
rad/us. A sampled channel holds one value per nanosecond, sample n taken at
t = n ns. Discretization averages the two samples bracketing the midpoint
of each step, m = (n + 1/2)*dt; the ceiling index is clamped to the last
sample (only reachable for dt = 1, see `discretize`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigurationError, ValidationError

__all__ = [
    "Waveform",
    "Constant",
    "Ramp",
    "Blackman",
    "InterpolatedSpline",
    "ChannelProgram",
    "SampledSequence",
    "DiscretizedSequence",
    "sample_waveform",
    "sample_program",
    "discretize",
    "blackman_window",
]


def blackman_window(n: int) -> np.ndarray:
    """Classic three-term Blackman window (a0=0.42, a1=0.5, a2=0.08).

    The first and last samples, analytically zero, are set to exactly 0.0
    so that downstream sign checks are not tripped by rounding.
    """
    if n < 1:
        raise ValidationError(f"window length must be >= 1, got {n}")
    if n == 1:
        return np.zeros(1)
    k = np.arange(n)
    x = 2.0 * np.pi * k / (n - 1)
    w = 0.42 - 0.5 * np.cos(x) + 0.08 * np.cos(2.0 * x)
    w[0] = 0.0
    w[-1] = 0.0
    return w


@dataclass(frozen=True)
class Waveform:
    """Base class for control-envelope segments; subclasses add shape fields."""

    duration_ns: int

    def __post_init__(self):
        if not isinstance(self.duration_ns, (int, np.integer)) or isinstance(
            self.duration_ns, bool
        ):
            raise ValidationError(
                f"duration_ns must be an integer, got {self.duration_ns!r}"
            )
        if self.duration_ns < 1:
            raise ValidationError(f"duration_ns must be >= 1, got {self.duration_ns}")

    def samples(self) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Waveform):
    value: float = 0.0

    def samples(self) -> np.ndarray:
        return np.full(self.duration_ns, float(self.value))


@dataclass(frozen=True)
class Ramp(Waveform):
    """Linear segment from `start` at the first sample to `stop` at the last."""

    start: float = 0.0
    stop: float = 0.0

    def samples(self) -> np.ndarray:
        return np.linspace(float(self.start), float(self.stop), self.duration_ns)


@dataclass(frozen=True)
class Blackman(Waveform):
    """Blackman-window pulse normalized so that sum(samples) * 1 ns == area.

    `area` is therefore in rad/us * ns; multiply by 1e-3 for radians.
    """

    area: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if self.area != 0.0 and self.duration_ns < 3:
            raise ValidationError(
                "Blackman pulse with nonzero area needs duration_ns >= 3 "
                "(the window vanishes at both edges)"
            )

    def samples(self) -> np.ndarray:
        w = blackman_window(self.duration_ns)
        if self.area == 0.0:
            return np.zeros(self.duration_ns)
        return w * (float(self.area) / w.sum())


@dataclass(frozen=True)
class InterpolatedSpline(Waveform):
    """Natural cubic spline through `points`, sampled at integer ns.

    Points are (time_ns, value) pairs with strictly increasing times
    spanning [0, duration_ns].
    """

    points: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        super().__post_init__()
        pts = tuple((float(t), float(v)) for t, v in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise ValidationError("spline needs at least 2 points")
        times = [t for t, _ in pts]
        if any(t1 >= t2 for t1, t2 in zip(times, times[1:])):
            raise ValidationError(f"spline times must be strictly increasing: {times}")
        if times[0] != 0.0 or times[-1] != float(self.duration_ns):
            raise ValidationError(
                f"spline points must span [0, {self.duration_ns}], got "
                f"[{times[0]}, {times[-1]}]"
            )

    def samples(self) -> np.ndarray:
        times = np.array([t for t, _ in self.points])
        values = np.array([v for _, v in self.points])
        if len(self.points) == 2:
            # a natural cubic through two points is the straight line
            return np.interp(np.arange(self.duration_ns), times, values)
        spline = CubicSpline(times, values, bc_type="natural")
        return spline(np.arange(self.duration_ns))


def sample_waveform(w: Waveform) -> np.ndarray:
    """Sample one segment on the 1 ns grid; array of length w.duration_ns."""
    return w.samples()


def _channel_samples(segments, total_ns: int, label: str) -> np.ndarray:
    used = sum(s.duration_ns for s in segments)
    if used > total_ns:
        raise ValidationError(
            f"{label}: segments cover {used} ns but the program lasts {total_ns} ns"
        )
    parts = [s.samples() for s in segments]
    if used < total_ns:
        parts.append(np.zeros(total_ns - used))
    return np.concatenate(parts) if parts else np.zeros(total_ns)


@dataclass(frozen=True)
class ChannelProgram:
    """Per-qubit segment lists for the drive amplitude and detuning channels.

    Channels shorter than `duration_ns` are implicitly padded with zeros;
    a channel longer than `duration_ns` is a validation error.
    """

    qubit_count: int
    omega: tuple[tuple[Waveform, ...], ...]
    delta: tuple[tuple[Waveform, ...], ...]
    duration_ns: int

    def __post_init__(self):
        if self.qubit_count < 1:
            raise ValidationError(f"qubit_count must be >= 1, got {self.qubit_count}")
        object.__setattr__(self, "omega", tuple(tuple(ch) for ch in self.omega))
        object.__setattr__(self, "delta", tuple(tuple(ch) for ch in self.delta))
        for name, chans in (("omega", self.omega), ("delta", self.delta)):
            if len(chans) != self.qubit_count:
                raise ValidationError(
                    f"{name} needs one channel per qubit "
                    f"({self.qubit_count}), got {len(chans)}"
                )
        if self.duration_ns < 1:
            raise ValidationError(
                f"duration_ns must be >= 1, got {self.duration_ns}"
            )

    @classmethod
    def from_channels(cls, omega, delta, duration_ns=None) -> "ChannelProgram":
        """Build a program from per-qubit segment lists, inferring duration.

        `omega` and `delta` are sequences (one entry per qubit) of segment
        lists; an entry may be empty. When `duration_ns` is omitted, the
        longest channel sets the program duration.
        """
        n = len(omega)
        if len(delta) != n:
            raise ValidationError(
                f"omega has {n} channels but delta has {len(delta)}"
            )
        if duration_ns is None:
            lengths = [sum(s.duration_ns for s in ch) for ch in list(omega) + list(delta)]
            duration_ns = max(lengths) if lengths and max(lengths) > 0 else 1
        return cls(n, tuple(map(tuple, omega)), tuple(map(tuple, delta)), duration_ns)


@dataclass(frozen=True)
class SampledSequence:
    """1 ns samples of all channels; arrays have shape (N, T)."""

    omega: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        if self.omega.shape != self.delta.shape or self.omega.ndim != 2:
            raise ValidationError(
                f"sample arrays must share shape (N, T); got {self.omega.shape} "
                f"and {self.delta.shape}"
            )

    @property
    def qubit_count(self) -> int:
        return self.omega.shape[0]

    @property
    def duration_ns(self) -> int:
        return self.omega.shape[1]

    def reversed(self) -> "SampledSequence":
        return SampledSequence(self.omega[:, ::-1].copy(), self.delta[:, ::-1].copy())


def sample_program(prog: ChannelProgram) -> SampledSequence:
    """Sample every channel of the program on the 1 ns grid.

    Raises ValidationError if any channel overruns the program duration or
    any drive-amplitude sample is negative.
    """
    n, t = prog.qubit_count, prog.duration_ns
    omega = np.empty((n, t))
    delta = np.empty((n, t))
    for q in range(n):
        omega[q] = _channel_samples(prog.omega[q], t, f"qubit {q} omega")
        delta[q] = _channel_samples(prog.delta[q], t, f"qubit {q} delta")
        if np.any(omega[q] < 0.0):
            bad = int(np.argmax(omega[q] < 0.0))
            raise ValidationError(
                f"qubit {q} omega sample at t={bad} ns is negative "
                f"({omega[q][bad]}); drive amplitudes must be >= 0"
            )
    return SampledSequence(omega, delta)


@dataclass(frozen=True)
class DiscretizedSequence:
    """Piecewise-constant steps; omegas/deltas have shape (K, N), K = T/dt."""

    dt_ns: int
    omegas: np.ndarray
    deltas: np.ndarray
    duration_ns: int

    @property
    def step_count(self) -> int:
        return self.omegas.shape[0]

    @property
    def qubit_count(self) -> int:
        return self.omegas.shape[1]

    def step(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        return self.omegas[k], self.deltas[k]


def _midpoint_average(samples: np.ndarray, dt: int) -> np.ndarray:
    """Midpoint-rule step values for one (N, T) channel array -> (K, N)."""
    t = samples.shape[1]
    k = t // dt
    m = (np.arange(k) + 0.5) * dt
    lo = np.floor(m).astype(int)
    hi = np.minimum(np.ceil(m).astype(int), t - 1)  # clamp, reachable only at dt=1
    return 0.5 * (samples[:, lo] + samples[:, hi]).T


def discretize(seq: SampledSequence, dt_ns: int) -> DiscretizedSequence:
    """Average channels over the midpoint of each dt-wide step.

    Step n uses m = (n + 1/2)*dt and the value (x[floor(m)] + x[ceil(m)])/2;
    when m lands on a sample the two indices coincide. The program duration
    must be divisible by dt so no truncated final step can occur.
    """
    if dt_ns < 1:
        raise ConfigurationError(f"dt must be >= 1 ns, got {dt_ns}")
    t = seq.duration_ns
    if t % dt_ns != 0:
        raise ConfigurationError(
            f"duration {t} ns is not divisible by dt={dt_ns} ns"
        )
    return DiscretizedSequence(
        dt_ns=dt_ns,
        omegas=_midpoint_average(seq.omega, dt_ns),
        deltas=_midpoint_average(seq.delta, dt_ns),
        duration_ns=t,
    )
