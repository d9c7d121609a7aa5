import json

import numpy as np
import pytest

from rydsim.cli import main
from rydsim.errors import ValidationError
from rydsim.runner import (
    RunResult,
    benchmark_csv,
    benchmark_grid,
    compare_results,
    execute_run,
    resource_report,
)
from rydsim.sequence_io import RunConfig, parse_config, parse_sequence

SEQUENCE = {
    "qubits": {
        "positions_um": [[0.0, 0.0], [7.0, 0.0], [14.0, 0.0]],
        "interaction_C": 5e6,
    },
    "duration_ns": 100,
    "channels": [
        {
            "qubit": q,
            "omega": [{"kind": "blackman", "duration_ns": 100, "area": 333.0}],
            "delta": [{"kind": "ramp", "duration_ns": 100, "start": -12.0, "stop": 8.0}],
        }
        for q in range(3)
    ],
}


def write_sequence(tmp_path, data=None, name="seq.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data or SEQUENCE))
    return str(path)


class TestSequenceParsing:
    def test_round_trip(self):
        register, program = parse_sequence(dict(SEQUENCE))
        assert register.qubit_count == 3
        assert program.duration_ns == 100
        assert len(program.omega[0]) == 1

    def test_unknown_top_level_key(self):
        bad = dict(SEQUENCE, extra=1)
        with pytest.raises(ValidationError, match="extra"):
            parse_sequence(bad)

    def test_unknown_segment_key_with_path(self):
        bad = json.loads(json.dumps(SEQUENCE))
        bad["channels"][1]["omega"][0]["slope"] = 2.0
        with pytest.raises(ValidationError, match=r"channels\[1\].omega\[0\]"):
            parse_sequence(bad)

    def test_unknown_kind(self):
        bad = json.loads(json.dumps(SEQUENCE))
        bad["channels"][0]["omega"][0] = {"kind": "gaussian", "duration_ns": 10}
        with pytest.raises(ValidationError, match="gaussian"):
            parse_sequence(bad)

    def test_qubit_out_of_range(self):
        bad = json.loads(json.dumps(SEQUENCE))
        bad["channels"][0]["qubit"] = 7
        with pytest.raises(ValidationError, match="out of range"):
            parse_sequence(bad)

    def test_json_error_carries_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n "qubits": [,]\n}')
        with pytest.raises(ValidationError, match="line 2"):
            parse_sequence(str(path))

    def test_spline_segment(self):
        seq = json.loads(json.dumps(SEQUENCE))
        seq["channels"][0]["omega"] = [
            {
                "kind": "spline",
                "duration_ns": 100,
                "points": [[0, 0.0], [50, 3.0], [100, 0.0]],
            }
        ]
        _, program = parse_sequence(seq)
        assert program.omega[0][0].points[1] == (50.0, 3.0)


class TestConfigParsing:
    def test_defaults(self):
        cfg = parse_config({})
        assert cfg.backend == "sv" and cfg.dt_ns == 10
        assert cfg.krylov.tolerance == 1e-10
        assert cfg.mps.precision == 1e-5 and cfg.mps.max_bond_dim == 1024

    def test_full_config(self):
        cfg = parse_config(
            {
                "backend": "mps",
                "dt_ns": 5,
                "krylov": {"tolerance": 1e-12},
                "mps": {
                    "precision": 1e-7,
                    "max_bond_dim": 128,
                    "reorder": True,
                    "krylov_tolerance": 1e-11,
                },
                "observables": [
                    {"type": "correlation", "qubits": [0, 1], "every_n_steps": 2}
                ],
                "seed": 7,
                "sample_shots": 100,
            }
        )
        assert cfg.backend == "mps" and cfg.reorder
        assert cfg.mps.precision == 1e-7
        assert cfg.mps.krylov.tolerance == 1e-11
        assert cfg.observables[0].kind == "correlation"

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError, match="noise"):
            parse_config({"noise": {}})

    def test_echo_covers_every_numerical_knob(self):
        cfg = parse_config({})
        echo = cfg.echo()
        for knob in (
            "backend",
            "dt_ns",
            "krylov",
            "mps",
            "reorder",
            "observables",
            "initial_bits",
            "seed",
            "qubit_cap",
        ):
            assert knob in echo


class TestExecuteRun:
    def test_result_round_trip(self):
        register, program = parse_sequence(dict(SEQUENCE))
        result = execute_run(register, program, parse_config({"sample_shots": 50}))
        clone = RunResult.from_json(result.to_json())
        assert clone == result
        assert clone.final_state is not None
        assert clone.metadata["step_count"] == 10

    def test_determinism_modulo_timing(self):
        register, program = parse_sequence(dict(SEQUENCE))
        cfg = parse_config({"sample_shots": 25, "threads": 1})
        a = execute_run(register, program, cfg)
        b = execute_run(register, program, cfg)
        assert a.strip_volatile() == b.strip_volatile()
        assert a.to_json() != ""  # sanity

    def test_oracle_matches_sv(self):
        register, program = parse_sequence(dict(SEQUENCE))
        sv = execute_run(register, program, parse_config({"backend": "sv"}))
        oracle = execute_run(register, program, parse_config({"backend": "oracle"}))
        occ_sv = [r for r in sv.observables if r["step"] == 10][0]["values"]
        occ_or = [r for r in oracle.observables if r["step"] == 10][0]["values"]
        assert np.abs(np.array(occ_sv) - occ_or).max() <= 100 * 1e-10

    def test_oracle_qubit_cap(self):
        positions = [[7.0 * i, 0.0] for i in range(13)]
        seq = {
            "qubits": {"positions_um": positions, "interaction_C": 5e6},
            "duration_ns": 10,
            "channels": [],
        }
        register, program = parse_sequence(seq)
        with pytest.raises(ValidationError, match="N=13"):
            execute_run(register, program, parse_config({"backend": "oracle"}))

    def test_csv_output(self):
        register, program = parse_sequence(dict(SEQUENCE))
        result = execute_run(register, program, parse_config({}))
        csv = result.observables_csv()
        header, first = csv.splitlines()[:2]
        assert header == "spec_index,kind,qubits,step,t_ns,value_index,value"
        assert first.startswith("0,occupation,,1,10")

    def test_sampling_deterministic_across_runs(self):
        register, program = parse_sequence(dict(SEQUENCE))
        cfg = parse_config({"sample_shots": 200, "seed": 5})
        a = execute_run(register, program, cfg)
        b = execute_run(register, program, cfg)
        assert a.data["samples"] == b.data["samples"]


class TestCompare:
    def test_self_comparison_is_zero(self):
        register, program = parse_sequence(dict(SEQUENCE))
        result = execute_run(register, program, parse_config({"snapshot_every": 5}))
        report = compare_results(result, result)
        assert report["final"]["norm_difference"] == 0.0
        assert report["final"]["fidelity"] == pytest.approx(1.0, abs=1e-12)
        assert all(d == 0.0 for d in report["norm_difference"])

    def test_dt_refinement_reduces_error(self):
        register, program = parse_sequence(dict(SEQUENCE))
        ref = execute_run(register, program, parse_config({"dt_ns": 1}))
        mid = execute_run(register, program, parse_config({"dt_ns": 10}))
        coarse = execute_run(register, program, parse_config({"dt_ns": 50}))
        err_mid = compare_results(ref, mid)["final"]["norm_difference"]
        err_coarse = compare_results(ref, coarse)["final"]["norm_difference"]
        assert 0 < err_mid < err_coarse

    def test_mps_vs_sv_compare(self):
        register, program = parse_sequence(dict(SEQUENCE))
        sv = execute_run(register, program, parse_config({"backend": "sv"}))
        mps = execute_run(
            register,
            program,
            parse_config(
                {"backend": "mps", "mps": {"precision": 1e-10, "max_bond_dim": 64}}
            ),
        )
        report = compare_results(sv, mps)
        assert report["final"]["norm_difference"] <= 1e-6

    def test_incompatible_results_error(self):
        register, program = parse_sequence(dict(SEQUENCE))
        a = execute_run(
            register, program, parse_config({"store_final_state": False})
        )
        b_cfg = parse_config(
            {
                "store_final_state": False,
                "observables": [
                    {"type": "correlation", "qubits": [0, 1], "every_n_steps": 1}
                ],
            }
        )
        b = execute_run(register, program, b_cfg)
        with pytest.raises(ValidationError, match="nothing to compare"):
            compare_results(a, b)


class TestBenchmarkAndEstimate:
    def test_benchmark_grid_and_csv(self):
        cells = benchmark_grid(
            qubit_counts=(2, 3), backends=("sv",), dts=(10,), repeats=2,
            duration_ns=50,
        )
        assert len(cells) == 2
        assert all(c["median_s"] > 0 for c in cells)
        assert not any(c["timed_out"] for c in cells)
        csv = benchmark_csv(cells)
        assert csv.splitlines()[0].startswith("backend,n_qubits,dt_ns")

    def test_benchmark_timeout_marks_and_skips(self):
        cells = benchmark_grid(
            qubit_counts=(2, 3, 4), backends=("sv",), dts=(10,), repeats=2,
            duration_ns=50, wall_cap_s=0.0,
        )
        assert all(c["timed_out"] for c in cells)
        # only the first cell actually ran; the rest were skipped
        assert cells[0]["runs_completed"] >= 1
        assert all(c["runs_completed"] == 0 for c in cells[1:])

    def test_estimate_rule_of_thumb(self):
        budget_40gb = 40 * 10**9
        assert resource_report(26, krylov_dim=15, budget_bytes=budget_40gb)[
            "recommendation"
        ] == "sv"
        assert resource_report(40, budget_bytes=budget_40gb)["recommendation"] == "mps"
        assert resource_report(10, budget_bytes=budget_40gb)["recommendation"] == "sv"
        # within the qubit rule but over budget -> mps
        assert resource_report(26, krylov_dim=15, budget_bytes=10**9)[
            "recommendation"
        ] == "mps"


class TestCli:
    def test_run_and_compare_cli(self, tmp_path):
        seq = write_sequence(tmp_path)
        out_a = str(tmp_path / "a.json")
        out_b = str(tmp_path / "b.json")
        assert main(["run", seq, "--backend", "sv", "--dt", "10", "--out", out_a]) == 0
        assert main(["run", seq, "--backend", "oracle", "--dt", "10", "--out", out_b]) == 0
        report_path = str(tmp_path / "cmp.json")
        assert main(["compare", out_a, out_b, "--out", report_path]) == 0
        report = json.loads((tmp_path / "cmp.json").read_text())
        assert report["final"]["norm_difference"] <= 1e-8

    def test_run_csv_and_overrides(self, tmp_path):
        seq = write_sequence(tmp_path)
        out = str(tmp_path / "r.json")
        csv_path = str(tmp_path / "r.csv")
        code = main(
            ["run", seq, "--backend", "mps", "--dt", "20", "--precision", "1e-8",
             "--max-bond-dim", "32", "--out", out, "--csv", csv_path]
        )
        assert code == 0
        doc = json.loads((tmp_path / "r.json").read_text())
        assert doc["metadata"]["config"]["mps"]["precision"] == 1e-8
        assert doc["metadata"]["config"]["mps"]["max_bond_dim"] == 32
        assert (tmp_path / "r.csv").read_text().startswith("spec_index")

    def test_validation_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["run", str(bad)]) == 2
        assert main(["validate", str(bad)]) == 2

    def test_memory_exit_code(self, tmp_path):
        positions = [[8.0 * i, 0.0] for i in range(21)]
        seq = write_sequence(
            tmp_path,
            {
                "qubits": {"positions_um": positions, "interaction_C": 5e6},
                "duration_ns": 10,
                "channels": [],
            },
        )
        assert main(
            ["run", seq, "--backend", "sv", "--memory-budget", "1000000"]
        ) == 4

    def test_solver_exit_code(self, tmp_path):
        seq_data = json.loads(json.dumps(SEQUENCE))
        for ch in seq_data["channels"]:
            ch["omega"] = [{"kind": "constant", "duration_ns": 100, "value": 500.0}]
            ch["delta"] = [{"kind": "constant", "duration_ns": 100, "value": -800.0}]
        seq = write_sequence(tmp_path, seq_data)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps(
                {"backend": "sv", "dt_ns": 100,
                 "krylov": {"tolerance": 1e-12, "max_krylov_dim": 2}}
            )
        )
        assert main(["run", seq, str(cfg), "--out", str(tmp_path / "o.json")]) == 3

    def test_estimate_cli(self, capsys):
        assert main(["estimate", "--qubits", "26", "--memory-budget", str(40 * 10**9)]) == 0
        out = capsys.readouterr().out
        assert "recommendation: sv" in out

    def test_benchmark_cli(self, tmp_path):
        out = str(tmp_path / "bench.csv")
        code = main(
            ["benchmark", "--qubits", "2,3", "--dts", "10", "--repeats", "1",
             "--duration", "50", "--out", out]
        )
        assert code == 0
        lines = (tmp_path / "bench.csv").read_text().splitlines()
        assert len(lines) == 3

    def test_validate_good_files(self, tmp_path):
        seq = write_sequence(tmp_path)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"backend": "sv"}))
        assert main(["validate", seq, str(cfg)]) == 0

    def test_no_partial_output_on_failure(self, tmp_path):
        # solver failure must not leave a result file behind
        seq_data = json.loads(json.dumps(SEQUENCE))
        for ch in seq_data["channels"]:
            ch["omega"] = [{"kind": "constant", "duration_ns": 100, "value": 500.0}]
            ch["delta"] = [{"kind": "constant", "duration_ns": 100, "value": -800.0}]
        seq = write_sequence(tmp_path, seq_data)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps(
                {"backend": "sv", "dt_ns": 100,
                 "krylov": {"tolerance": 1e-12, "max_krylov_dim": 2}}
            )
        )
        out = tmp_path / "result.json"
        assert main(["run", seq, str(cfg), "--out", str(out)]) == 3
        assert not out.exists()
        leftovers = [p for p in tmp_path.iterdir() if p.suffix == ".tmp"]
        assert not leftovers
