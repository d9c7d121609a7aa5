import numpy as np
import pytest

from rydsim.errors import MemoryBudgetError, ValidationError
from rydsim.generator import adiabatic_program, chain_register, grid_register
from rydsim.krylov import KrylovConfig
from rydsim.mps import TdvpConfig, memory_estimate_mps
from rydsim.mps_backend import MpsRunConfig, evolve_mps
from rydsim.observables import ObservableSpec, norm_difference
from rydsim.pulses import discretize, sample_program
from rydsim.sv import SvRunConfig, evolve_sv

TIGHT_TDVP = TdvpConfig(precision=1e-12, max_bond_dim=256, krylov=KrylovConfig(1e-12))


def generator_sequence(n, duration=400, dt=10, register=None):
    reg, prog = adiabatic_program(n, duration_ns=duration, register=register)
    return reg, discretize(sample_program(prog), dt)


class TestEvolveMps:
    def test_cross_backend_agreement(self):
        reg, seq = generator_sequence(7, duration=400, dt=10)
        sv = evolve_sv(seq, reg, SvRunConfig(krylov=KrylovConfig(1e-12)))
        mps = evolve_mps(seq, reg, MpsRunConfig(tdvp=TIGHT_TDVP))
        assert norm_difference(mps.final_state, sv.final_state) <= 1e-8

    def test_no_truncation_possible_matches_sv_tightly(self):
        # chi_max = 2^(N/2) cannot truncate anything
        n = 6
        reg, seq = generator_sequence(n, duration=300, dt=10)
        cfg = MpsRunConfig(
            tdvp=TdvpConfig(
                precision=1e-13, max_bond_dim=2 ** (n // 2), krylov=KrylovConfig(1e-12)
            )
        )
        mps = evolve_mps(seq, reg, cfg)
        sv = evolve_sv(seq, reg, SvRunConfig(krylov=KrylovConfig(1e-12)))
        assert not mps.chi_saturated
        assert norm_difference(mps.final_state, sv.final_state) <= 1e-8

    def test_observables_and_reordering_report_original_labels(self):
        # a 3-qubit chain driven only on qubit 2; reordering must not leak
        reg = chain_register(3)
        _, seq = generator_sequence(3, duration=200, dt=10)
        specs = (ObservableSpec("occupation", ()),)
        plain = evolve_mps(
            seq, reg, MpsRunConfig(tdvp=TIGHT_TDVP, observables=specs)
        )
        reordered = evolve_mps(
            seq,
            reg,
            MpsRunConfig(tdvp=TIGHT_TDVP, observables=specs, reorder=True),
        )
        a = np.array([r.values for r in plain.observables])
        b = np.array([r.values for r in reordered.observables])
        assert np.abs(a - b).max() <= 1e-9
        assert sorted(reordered.ordering) == [0, 1, 2]

    def test_grid_reordering_runs(self):
        reg = grid_register(2, 2, spacing_um=8.0)
        _, prog = adiabatic_program(4, duration_ns=200, register=reg)
        seq = discretize(sample_program(prog), 10)
        result = evolve_mps(
            seq, reg, MpsRunConfig(tdvp=TIGHT_TDVP, reorder=True)
        )
        assert sorted(result.ordering) == [0, 1, 2, 3]
        assert abs(np.sqrt(abs(result.final_state.overlap(result.final_state))) - 1) <= 1e-9

    def test_truncating_run_diagnostics(self):
        n = 8
        reg, seq = generator_sequence(n, duration=400, dt=10)
        p = 1e-4
        cfg = MpsRunConfig(
            tdvp=TdvpConfig(precision=p, max_bond_dim=64, krylov=KrylovConfig(1e-10))
        )
        result = evolve_mps(seq, reg, cfg)
        m = seq.step_count
        assert not result.chi_saturated
        assert 0.0 < result.truncation_weight <= p * m * (2 * n - 3)
        cumulative = 0.0
        for step, diag in enumerate(result.step_diagnostics, start=1):
            cumulative += diag.truncation_weight_added
            assert cumulative <= p * step * (2 * n - 3)
        assert result.max_bond_dimension <= 64

    def test_saturation_flag_with_tiny_cap(self):
        reg, seq = generator_sequence(6, duration=300, dt=10)
        cfg = MpsRunConfig(
            tdvp=TdvpConfig(precision=1e-12, max_bond_dim=2, krylov=KrylovConfig(1e-10))
        )
        result = evolve_mps(seq, reg, cfg)
        assert result.chi_saturated
        assert result.max_bond_dimension <= 2

    def test_peak_memory_within_formula_bound(self):
        n = 7
        reg, seq = generator_sequence(n, duration=300, dt=10)
        result = evolve_mps(seq, reg, MpsRunConfig(tdvp=TIGHT_TDVP))
        chi = result.max_bond_dimension
        krylov_vectors = max(d.peak_krylov_vectors for d in result.step_diagnostics)
        bound = memory_estimate_mps(n, chi, krylov_vectors)
        assert 0 < result.peak_memory_bytes <= bound

    def test_memory_budget_refusal(self):
        reg, seq = generator_sequence(6, duration=100, dt=10)
        cfg = MpsRunConfig(
            tdvp=TdvpConfig(precision=1e-6, max_bond_dim=4096),
            memory_budget_bytes=10**6,
        )
        with pytest.raises(MemoryBudgetError):
            evolve_mps(seq, reg, cfg)

    def test_snapshots_respect_dense_cap(self):
        reg = chain_register(21)
        _, prog = adiabatic_program(21, duration_ns=20, register=reg)
        seq = discretize(sample_program(prog), 10)
        with pytest.raises(ValidationError):
            evolve_mps(seq, reg, MpsRunConfig(snapshot_every=1))

    def test_initial_bits(self):
        reg, seq = generator_sequence(4, duration=100, dt=100)
        occ_spec = (ObservableSpec("occupation", (), every_n_steps=0),)
        base = evolve_mps(
            seq,
            reg,
            MpsRunConfig(tdvp=TIGHT_TDVP, initial_bits=0b0101, observables=occ_spec),
        )
        assert base.observables  # evaluated at the final step
