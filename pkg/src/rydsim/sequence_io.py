"""JSON sequence and run-configuration files.

Sequence files carry the register and the per-qubit channel segments:

    {
      "qubits": {"positions_um": [[0,0], [7,0]], "interaction_C": 5e6},
      "duration_ns": 1000,
      "channels": [
        {"qubit": 0,
         "omega": [{"kind": "blackman", "duration_ns": 1000, "area": 4000.0}],
         "delta": [{"kind": "ramp", "duration_ns": 1000, "start": -19.0, "stop": 13.0}]}
      ]
    }

Segment kinds: constant {value}, ramp {start, stop}, blackman {area},
spline {points: [[t_ns, value], ...]}. Unknown keys are rejected anywhere,
with the JSON path in the error message.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError
from .hamiltonian import Register
from .krylov import KrylovConfig
from .mps import TdvpConfig
from .observables import ObservableSpec
from .pulses import Blackman, ChannelProgram, Constant, InterpolatedSpline, Ramp

__all__ = ["RunConfig", "parse_sequence", "parse_config", "load_json"]

_SEGMENT_KINDS = {
    "constant": (Constant, {"value"}),
    "ramp": (Ramp, {"start", "stop"}),
    "blackman": (Blackman, {"area"}),
    "spline": (InterpolatedSpline, {"points"}),
}


def load_json(path) -> dict:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ValidationError(
            f"{path}: invalid JSON at line {err.lineno}, column {err.colno}: "
            f"{err.msg}"
        ) from err
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: top level must be a JSON object")
    return data


def _check_keys(obj: dict, allowed: set, where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ValidationError(
            f"{where}: unknown keys {sorted(unknown)}; allowed: {sorted(allowed)}"
        )


def _parse_segment(obj, where: str):
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: segment must be an object")
    kind = obj.get("kind")
    if kind not in _SEGMENT_KINDS:
        raise ValidationError(
            f"{where}.kind: expected one of {sorted(_SEGMENT_KINDS)}, got {kind!r}"
        )
    cls, params = _SEGMENT_KINDS[kind]
    _check_keys(obj, params | {"kind", "duration_ns"}, where)
    if "duration_ns" not in obj:
        raise ValidationError(f"{where}: missing duration_ns")
    kwargs = {}
    for name in params:
        if name not in obj:
            raise ValidationError(f"{where}: {kind} segment needs {name!r}")
        kwargs[name] = obj[name]
    if kind == "spline":
        pts = kwargs.pop("points")
        if not isinstance(pts, list) or any(len(p) != 2 for p in pts):
            raise ValidationError(f"{where}.points: expected [[t_ns, value], ...]")
        kwargs["points"] = tuple((float(t), float(v)) for t, v in pts)
    try:
        return cls(duration_ns=obj["duration_ns"], **kwargs)
    except ValidationError as err:
        raise ValidationError(f"{where}: {err}") from err


def parse_sequence(data) -> tuple[Register, ChannelProgram]:
    """Parse a sequence dict or file path into a register and program."""
    if not isinstance(data, dict):
        data = load_json(data)
    _check_keys(data, {"qubits", "channels", "duration_ns"}, "sequence")
    for key in ("qubits", "duration_ns"):
        if key not in data:
            raise ValidationError(f"sequence: missing top-level key {key!r}")
    qubits = data["qubits"]
    if not isinstance(qubits, dict):
        raise ValidationError("sequence.qubits: must be an object")
    _check_keys(qubits, {"positions_um", "interaction_C"}, "sequence.qubits")
    for key in ("positions_um", "interaction_C"):
        if key not in qubits:
            raise ValidationError(f"sequence.qubits: missing {key!r}")
    try:
        register = Register(
            tuple(tuple(p) for p in qubits["positions_um"]),
            float(qubits["interaction_C"]),
        )
    except (TypeError, ValidationError) as err:
        raise ValidationError(f"sequence.qubits: {err}") from err

    n = register.qubit_count
    duration = data["duration_ns"]
    if not isinstance(duration, int) or duration < 1:
        raise ValidationError(
            f"sequence.duration_ns: expected a positive integer, got {duration!r}"
        )
    omega = [[] for _ in range(n)]
    delta = [[] for _ in range(n)]
    for c_index, channel in enumerate(data.get("channels", [])):
        where = f"sequence.channels[{c_index}]"
        if not isinstance(channel, dict):
            raise ValidationError(f"{where}: must be an object")
        _check_keys(channel, {"qubit", "omega", "delta"}, where)
        if "qubit" not in channel:
            raise ValidationError(f"{where}: missing 'qubit'")
        q = channel["qubit"]
        if not isinstance(q, int) or not 0 <= q < n:
            raise ValidationError(f"{where}.qubit: {q!r} out of range for N={n}")
        for name, target in (("omega", omega), ("delta", delta)):
            for s_index, seg in enumerate(channel.get(name, [])):
                target[q].append(_parse_segment(seg, f"{where}.{name}[{s_index}]"))
    program = ChannelProgram.from_channels(omega, delta, duration)
    return register, program


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs besides the sequence itself."""

    backend: str = "sv"
    dt_ns: int = 10
    krylov: KrylovConfig = field(default_factory=KrylovConfig)
    mps: TdvpConfig = field(default_factory=TdvpConfig)
    reorder: bool = False
    reorder_threshold: float | None = None
    observables: tuple[ObservableSpec, ...] = (
        ObservableSpec("occupation", (), every_n_steps=1),
    )
    snapshot_every: int = 0
    store_final_state: bool | None = None  # None = auto (N <= 20)
    initial_bits: int = 0
    seed: int = 0
    sample_shots: int = 0
    threads: int | None = None
    memory_budget_bytes: int | None = None
    qubit_cap: int = 30
    allow_above_cap: bool = False
    output: str | None = None

    def __post_init__(self):
        if self.backend not in ("sv", "mps", "oracle"):
            raise ValidationError(
                f"backend must be sv, mps or oracle, got {self.backend!r}"
            )
        if self.dt_ns < 1:
            raise ValidationError(f"dt_ns must be >= 1, got {self.dt_ns}")
        if self.sample_shots < 0 or self.snapshot_every < 0:
            raise ValidationError("sample_shots and snapshot_every must be >= 0")

    def echo(self) -> dict:
        """Full knob dump for result metadata (everything affecting numerics)."""
        return {
            "backend": self.backend,
            "dt_ns": self.dt_ns,
            "krylov": {
                "tolerance": self.krylov.tolerance,
                "max_krylov_dim": self.krylov.max_krylov_dim,
                "norm_epsilon": self.krylov.norm_epsilon,
            },
            "mps": {
                "precision": self.mps.precision,
                "max_bond_dim": self.mps.max_bond_dim,
                "krylov_tolerance": self.mps.krylov.tolerance,
                "max_krylov_dim": self.mps.krylov.max_krylov_dim,
            },
            "reorder": self.reorder,
            "reorder_threshold": self.reorder_threshold,
            "observables": [
                {
                    "type": s.kind,
                    "qubits": list(s.qubits),
                    "every_n_steps": s.every_n_steps,
                }
                for s in self.observables
            ],
            "snapshot_every": self.snapshot_every,
            "store_final_state": self.store_final_state,
            "initial_bits": self.initial_bits,
            "seed": self.seed,
            "sample_shots": self.sample_shots,
            "threads": self.threads,
            "memory_budget_bytes": self.memory_budget_bytes,
            "qubit_cap": self.qubit_cap,
            "allow_above_cap": self.allow_above_cap,
        }


_CONFIG_KEYS = {
    "backend",
    "dt_ns",
    "krylov",
    "mps",
    "observables",
    "snapshot_every",
    "store_final_state",
    "initial_bits",
    "seed",
    "sample_shots",
    "threads",
    "memory_budget_bytes",
    "qubit_cap",
    "allow_above_cap",
    "output",
}


def parse_config(data) -> RunConfig:
    """Parse a config dict or file path; unknown keys are rejected."""
    if not isinstance(data, dict):
        data = load_json(data)
    _check_keys(data, _CONFIG_KEYS, "config")
    kwargs = {}
    for key in (
        "backend",
        "dt_ns",
        "snapshot_every",
        "store_final_state",
        "initial_bits",
        "seed",
        "sample_shots",
        "threads",
        "memory_budget_bytes",
        "qubit_cap",
        "allow_above_cap",
        "output",
    ):
        if key in data:
            kwargs[key] = data[key]
    if "krylov" in data:
        k = data["krylov"]
        _check_keys(
            k, {"tolerance", "max_krylov_dim", "norm_epsilon"}, "config.krylov"
        )
        kwargs["krylov"] = KrylovConfig(**k)
    if "mps" in data:
        m = dict(data["mps"])
        _check_keys(
            m,
            {
                "precision",
                "max_bond_dim",
                "krylov_tolerance",
                "max_krylov_dim",
                "reorder",
                "reorder_threshold",
            },
            "config.mps",
        )
        kwargs["reorder"] = bool(m.pop("reorder", False))
        if m.get("reorder_threshold") is not None:
            kwargs["reorder_threshold"] = float(m["reorder_threshold"])
        m.pop("reorder_threshold", None)
        tdvp_kwargs = {}
        if "precision" in m:
            tdvp_kwargs["precision"] = m["precision"]
        if "max_bond_dim" in m:
            tdvp_kwargs["max_bond_dim"] = m["max_bond_dim"]
        mps_krylov = {}
        if "krylov_tolerance" in m:
            mps_krylov["tolerance"] = m["krylov_tolerance"]
        if "max_krylov_dim" in m:
            mps_krylov["max_krylov_dim"] = m["max_krylov_dim"]
        if mps_krylov:
            tdvp_kwargs["krylov"] = KrylovConfig(**mps_krylov)
        kwargs["mps"] = TdvpConfig(**tdvp_kwargs)
    if "observables" in data:
        specs = []
        for index, spec in enumerate(data["observables"]):
            where = f"config.observables[{index}]"
            if not isinstance(spec, dict):
                raise ValidationError(f"{where}: must be an object")
            _check_keys(spec, {"type", "qubits", "every_n_steps"}, where)
            if "type" not in spec:
                raise ValidationError(f"{where}: missing 'type'")
            specs.append(
                ObservableSpec(
                    kind=spec["type"],
                    qubits=tuple(spec.get("qubits", ())),
                    every_n_steps=int(spec.get("every_n_steps", 1)),
                )
            )
        kwargs["observables"] = tuple(specs)
    try:
        return RunConfig(**kwargs)
    except TypeError as err:
        raise ValidationError(f"config: {err}") from err
