"""Command-line harness.

Subcommands: `run` a sequence with a backend, `benchmark` a grid of
(N, backend, dt, chi) cells on the generator workload, `estimate`
memory/runtime for a planned run, `compare` two result files, and
`validate` input files. Exit codes: 0 success, 2 validation failure,
3 solver abort, 4 memory refusal.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .errors import MemoryBudgetError, SolverError, ValidationError
from .krylov import KrylovConfig
from .mps import TdvpConfig
from .runner import (
    RunResult,
    benchmark_csv,
    benchmark_grid,
    compare_results,
    execute_run,
    resource_report,
    write_json_atomic,
)
from .sequence_io import parse_config, parse_sequence

THREADS_ENV_VAR = "RYDSIM_THREADS"

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_MEMORY = 4


def _parse_qubit_range(text: str) -> list[int]:
    """'16-22' or '4,6,9' or '12'."""
    values: list[int] = []
    for part in text.split(","):
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            values.extend(range(int(lo), int(hi) + 1))
        else:
            values.append(int(part))
    if not values or any(v < 1 for v in values):
        raise ValidationError(f"bad qubit list {text!r}")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rydsim",
        description="Pulse-level neutral-atom emulator: state-vector and MPS backends.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sequence file with a config file")
    run.add_argument("sequence", help="sequence JSON file")
    run.add_argument("config", nargs="?", help="run-config JSON file (optional)")
    run.add_argument("--backend", choices=["sv", "mps", "oracle"])
    run.add_argument("--dt", type=int, help="time step in ns")
    run.add_argument("--precision", type=float,
                     help="sv: Krylov tolerance; mps: truncation precision")
    run.add_argument("--max-bond-dim", type=int, help="MPS bond-dimension cap")
    run.add_argument("--reorder", action="store_true",
                     help="reorder qubits by reverse Cuthill-McKee (mps)")
    run.add_argument("--seed", type=int, help="sampling seed")
    run.add_argument("--threads", type=int,
                     help=f"BLAS thread cap (default ${THREADS_ENV_VAR})")
    run.add_argument("--memory-budget", type=int, help="budget in bytes")
    run.add_argument("--out", help="result JSON path (default: run_result.json)")
    run.add_argument("--csv", help="also write the observable time series as CSV")

    bench = sub.add_parser("benchmark", help="time the generator workload on a grid")
    bench.add_argument("--qubits", required=True,
                       help="e.g. 16-22 or 4,6,8")
    bench.add_argument("--backends", default="sv", help="comma list: sv,mps,oracle")
    bench.add_argument("--dts", default="10", help="comma list of dt values in ns")
    bench.add_argument("--chis", default="64", help="comma list of MPS chi caps")
    bench.add_argument("--repeats", type=int, default=3)
    bench.add_argument("--duration", type=int, default=100,
                       help="workload duration in ns")
    bench.add_argument("--wall-cap", type=float, default=600.0,
                       help="per-run wall-clock cap in seconds")
    bench.add_argument("--out", help="CSV output path (default: stdout)")

    est = sub.add_parser("estimate", help="resource estimates and backend choice")
    est.add_argument("--qubits", type=int, required=True)
    est.add_argument("--max-bond-dim", type=int, default=1024)
    est.add_argument("--krylov-dim", type=int, default=15,
                     help="assumed Lanczos depth for the sv estimate")
    est.add_argument("--mps-krylov-dim", type=int, default=30)
    est.add_argument("--memory-budget", type=int,
                     help="bytes (default: system RAM)")
    est.add_argument("--out", help="also write the report as JSON")

    cmp_ = sub.add_parser("compare", help="norm difference between two results")
    cmp_.add_argument("result_a")
    cmp_.add_argument("result_b")
    cmp_.add_argument("--out", help="write the comparison report as JSON")

    val = sub.add_parser("validate", help="check sequence/config files")
    val.add_argument("sequence", help="sequence JSON file")
    val.add_argument("config", nargs="?", help="run-config JSON file")
    return parser


def _apply_overrides(cfg, args):
    updates = {}
    if args.backend:
        updates["backend"] = args.backend
    if args.dt is not None:
        updates["dt_ns"] = args.dt
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.memory_budget is not None:
        updates["memory_budget_bytes"] = args.memory_budget
    threads = args.threads
    if threads is None and os.environ.get(THREADS_ENV_VAR):
        threads = int(os.environ[THREADS_ENV_VAR])
    if threads is not None:
        updates["threads"] = threads
    backend = updates.get("backend", cfg.backend)
    if args.precision is not None:
        if backend == "mps":
            updates["mps"] = dataclasses.replace(cfg.mps, precision=args.precision)
        else:
            updates["krylov"] = dataclasses.replace(
                cfg.krylov, tolerance=args.precision
            )
    if args.max_bond_dim is not None:
        base = updates.get("mps", cfg.mps)
        updates["mps"] = dataclasses.replace(base, max_bond_dim=args.max_bond_dim)
    if args.reorder:
        updates["reorder"] = True
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _cmd_run(args) -> int:
    register, program = parse_sequence(args.sequence)
    cfg = parse_config(args.config) if args.config else parse_config({})
    cfg = _apply_overrides(cfg, args)
    result = execute_run(register, program, cfg)
    out_path = args.out or cfg.output or "run_result.json"
    result.save(out_path)
    if args.csv:
        write_json_atomic(args.csv, result.observables_csv())
    diag = result.diagnostics
    print(f"backend={result.metadata['backend']} N={result.metadata['qubit_count']} "
          f"steps={result.metadata['step_count']} dt={result.metadata['dt_ns']}ns")
    print(f"wall time {diag['total_wall_time_s']:.3f} s, "
          f"peak memory ~{diag['peak_memory_bytes']:.3e} bytes")
    if "max_bond_dimension" in diag:
        print(f"max bond dimension {diag['max_bond_dimension']}, "
              f"truncation weight {diag['truncation_weight_total']:.3e}, "
              f"chi saturated {diag['chi_saturated']}")
    print(f"result written to {out_path}")
    return EXIT_OK


def _cmd_benchmark(args) -> int:
    cells = benchmark_grid(
        qubit_counts=_parse_qubit_range(args.qubits),
        backends=tuple(args.backends.split(",")),
        dts=tuple(int(x) for x in args.dts.split(",")),
        chis=tuple(int(x) for x in args.chis.split(",")),
        repeats=args.repeats,
        duration_ns=args.duration,
        wall_cap_s=args.wall_cap,
    )
    csv_text = benchmark_csv(cells)
    if args.out:
        write_json_atomic(args.out, csv_text)
        print(f"benchmark table written to {args.out}")
    else:
        print(csv_text, end="")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    report = resource_report(
        args.qubits,
        chi=args.max_bond_dim,
        krylov_dim=args.krylov_dim,
        mps_krylov_dim=args.mps_krylov_dim,
        budget_bytes=args.memory_budget,
    )
    gib = 2.0**30
    print(f"N = {report['n_qubits']}, budget {report['memory_budget_bytes'] / gib:.1f} GiB")
    print(f"sv : {report['sv']['memory_bytes'] / gib:.3f} GiB "
          f"(state + diagonal + {report['sv']['krylov_dim']} Krylov vectors)")
    if "mps" in report:
        print(f"mps: {report['mps']['memory_bytes'] / gib:.3f} GiB upper bound "
              f"(chi={report['mps']['max_bond_dim']}, "
              f"k={report['mps']['krylov_dim']}); "
              f"runtime ~{report['mps']['runtime_arbitrary_units']:.3e} units/step")
    print(f"recommendation: {report['recommendation']}")
    if args.out:
        write_json_atomic(args.out, json.dumps(report, indent=1))
    return EXIT_OK


def _cmd_compare(args) -> int:
    report = compare_results(RunResult.load(args.result_a), RunResult.load(args.result_b))
    if "times_ns" in report:
        print("t_ns, norm_difference, fidelity")
        for t, d, f in zip(
            report["times_ns"], report["norm_difference"], report["fidelity"]
        ):
            print(f"{t}, {d:.6e}, {f:.12f}")
    if "final" in report:
        fin = report["final"]
        print(f"final: norm_difference {fin['norm_difference']:.6e}, "
              f"fidelity {fin['fidelity']:.12f}")
    if "observables" in report:
        for m in report["observables"]:
            print(f"{m['kind']}{m['qubits']} @ {m['t_ns']} ns: "
                  f"max |diff| = {m['max_abs_diff']:.6e}")
    if args.out:
        write_json_atomic(args.out, json.dumps(report, indent=1))
    return EXIT_OK


def _cmd_validate(args) -> int:
    register, program = parse_sequence(args.sequence)
    print(f"sequence OK: N={register.qubit_count}, duration {program.duration_ns} ns")
    if args.config:
        cfg = parse_config(args.config)
        print(f"config OK: backend={cfg.backend}, dt={cfg.dt_ns} ns")
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "benchmark": _cmd_benchmark,
    "estimate": _cmd_estimate,
    "compare": _cmd_compare,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as err:
        print(f"validation error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as err:
        print(f"solver abort: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except MemoryBudgetError as err:
        print(f"memory refusal: {err}", file=sys.stderr)
        return EXIT_MEMORY


if __name__ == "__main__":
    sys.exit(main())
