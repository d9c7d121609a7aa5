import numpy as np
import pytest

from rydsim.errors import SolverError, ValidationError
from rydsim.hamiltonian import HamiltonianSlice, build_dense
from rydsim.krylov import NS_TO_US, KrylovConfig
from rydsim.mps import (
    Environments,
    TdvpConfig,
    mpo_from_slice,
    mps_from_product,
    split_truncate,
    tdvp_step,
)

from test_hamiltonian import random_slice
from test_mps_state import dense_to_mps, random_state

TIGHT = TdvpConfig(precision=1e-14, max_bond_dim=64, krylov=KrylovConfig(1e-13))


def dense_step(h, psi, dt_ns):
    evals, evecs = np.linalg.eigh(h)
    return evecs @ (np.exp(-1j * dt_ns * NS_TO_US * evals) * (evecs.conj().T @ psi))


def evolve_both(n, seed, dt_ns, steps, cfg=TIGHT, scale=3.0):
    rng = np.random.default_rng(seed)
    omegas, deltas, u = random_slice(rng, n)
    omegas, deltas, u = scale * omegas, scale * deltas, scale * u
    h = build_dense(HamiltonianSlice.from_parameters(omegas, deltas, u))
    mpo = mpo_from_slice(omegas, deltas, u)
    mps = mps_from_product(n, 0)
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    diags = []
    for _ in range(steps):
        mps, diag = tdvp_step(mps, mpo, dt_ns, cfg)
        diags.append(diag)
        psi = dense_step(h, psi, dt_ns)
    return mps, psi, diags


class TestAgainstDenseOracle:
    def test_two_qubits_exact(self):
        mps, psi, _ = evolve_both(2, seed=0, dt_ns=10.0, steps=10)
        assert np.linalg.norm(mps.to_statevector() - psi) <= 1e-12

    def test_three_qubits_exact(self):
        mps, psi, _ = evolve_both(3, seed=1, dt_ns=10.0, steps=10)
        assert np.linalg.norm(mps.to_statevector() - psi) <= 1e-12

    def test_four_qubits_small_dt(self):
        mps, psi, _ = evolve_both(4, seed=2, dt_ns=1.0, steps=10)
        assert np.linalg.norm(mps.to_statevector() - psi) <= 1e-9

    def test_six_qubits_moderate_dt(self):
        mps, psi, _ = evolve_both(6, seed=3, dt_ns=5.0, steps=10)
        assert np.linalg.norm(mps.to_statevector() - psi) <= 1e-6

    def test_splitting_error_is_third_order_per_step(self):
        errs = []
        for dt in (8.0, 4.0, 2.0):
            mps, psi, _ = evolve_both(5, seed=4, dt_ns=dt, steps=4)
            errs.append(np.linalg.norm(mps.to_statevector() - psi))
        assert 4.0 <= errs[0] / errs[1] <= 16.0
        assert 4.0 <= errs[1] / errs[2] <= 16.0


class TestSingleQubitAndFree:
    def test_single_qubit_rabi(self):
        omega = 2 * np.pi
        mpo = mpo_from_slice([omega], [0.0], np.zeros((1, 1)))
        mps = mps_from_product(1, 0)
        t_ns = 0.0
        for _ in range(100):
            mps, _ = tdvp_step(mps, mpo, 2.5, TIGHT)
            t_ns += 2.5
        expected = np.sin(0.5 * omega * t_ns * NS_TO_US) ** 2
        assert mps.occupations()[0] == pytest.approx(expected, abs=1e-10)

    def test_free_qubits_keep_bond_one(self):
        # no interaction, one driven qubit: the state stays a product
        n = 5
        omegas = np.zeros(n)
        omegas[2] = 2 * np.pi
        mpo = mpo_from_slice(omegas, np.zeros(n), np.zeros((n, n)))
        mps = mps_from_product(n, 0)
        cfg = TdvpConfig(precision=1e-10, max_bond_dim=16, krylov=KrylovConfig(1e-12))
        t_ns = 0.0
        for _ in range(20):
            mps, _ = tdvp_step(mps, mpo, 5.0, cfg)
            t_ns += 5.0
        assert mps.bond_dimensions == (1, 1, 1, 1)
        expected = np.sin(0.5 * 2 * np.pi * t_ns * NS_TO_US) ** 2
        occ = mps.occupations()
        assert occ[2] == pytest.approx(expected, abs=1e-9)
        assert np.abs(np.delete(occ, 2)).max() <= 1e-12


class TestStepMechanics:
    def test_zero_dt_is_identity_up_to_gauge(self):
        rng = np.random.default_rng(11)
        psi = random_state(rng, 5)
        mps = dense_to_mps(psi)
        omegas, deltas, u = random_slice(rng, 5)
        mpo = mpo_from_slice(omegas, deltas, u)
        mps, _ = tdvp_step(mps, mpo, 0.0, TIGHT)
        fid = abs(np.vdot(psi, mps.to_statevector())) ** 2
        assert fid == pytest.approx(1.0, abs=1e-12)

    def test_canonical_form_after_step(self):
        mps, _, _ = evolve_both(6, seed=5, dt_ns=5.0, steps=3)
        assert mps.center == 0
        left, right = mps.orthonormality_defects()
        assert left <= 1e-10 and right <= 1e-10

    def test_norm_preserved_without_truncation(self):
        mps, _, diags = evolve_both(6, seed=6, dt_ns=5.0, steps=10)
        assert mps.truncation_weight <= 1e-20
        assert abs(mps.norm() - 1.0) <= 10 * TIGHT.krylov.tolerance * 10

    def test_truncation_weight_bound(self):
        n, steps, p = 6, 8, 1e-3
        cfg = TdvpConfig(precision=p, max_bond_dim=64, krylov=KrylovConfig(1e-12))
        rng = np.random.default_rng(7)
        omegas, deltas, u = random_slice(rng, n)
        mpo = mpo_from_slice(5 * omegas, 5 * deltas, 5 * u)
        mps = mps_from_product(n, 0)
        for m in range(1, steps + 1):
            mps, diag = tdvp_step(mps, mpo, 10.0, cfg)
            assert not diag.chi_saturated
            assert mps.truncation_weight <= p * m * (2 * n - 3)
        assert mps.truncation_weight > 0.0  # truncation actually happened
        # renormalized spectrum keeps the state normalized
        assert abs(mps.norm() - 1.0) <= 1e-9

    def test_saturation_flag(self):
        n = 6
        rng = np.random.default_rng(8)
        omegas, deltas, u = random_slice(rng, n)
        cfg = TdvpConfig(precision=1e-12, max_bond_dim=2, krylov=KrylovConfig(1e-10))
        mpo = mpo_from_slice(5 * omegas, 5 * deltas, 5 * u)
        mps = mps_from_product(n, 0)
        saturated = False
        for _ in range(5):
            mps, diag = tdvp_step(mps, mpo, 10.0, cfg)
            saturated |= diag.chi_saturated
        assert saturated
        assert mps.max_bond_dimension <= 2

    def test_split_count_is_2n_minus_3(self):
        # every split truncates at the tight precision; count via a probe
        calls = []
        import rydsim.mps.tdvp as tdvp_mod

        original = tdvp_mod.split_truncate

        def probe(*args, **kwargs):
            calls.append(1)
            return original(*args, **kwargs)

        tdvp_mod.split_truncate = probe
        try:
            evolve_both(6, seed=9, dt_ns=5.0, steps=1)
        finally:
            tdvp_mod.split_truncate = original
        assert len(calls) == 2 * 6 - 3

    def test_krylov_failure_aborts_with_site(self):
        n = 4
        rng = np.random.default_rng(10)
        omegas, deltas, u = random_slice(rng, n)
        cfg = TdvpConfig(
            precision=1e-12,
            max_bond_dim=16,
            krylov=KrylovConfig(tolerance=1e-12, max_krylov_dim=2),
        )
        mpo = mpo_from_slice(100 * omegas, 100 * deltas, 100 * u)
        mps = mps_from_product(n, 0)
        with pytest.raises(SolverError) as err:
            tdvp_step(mps, mpo, 50.0, cfg)
        assert err.value.site is not None

    def test_ordering_mismatch_rejected(self):
        mps = mps_from_product(3, 0, ordering=(2, 1, 0))
        mpo = mpo_from_slice([1.0] * 3, [0.0] * 3, np.zeros((3, 3)))
        with pytest.raises(ValidationError):
            tdvp_step(mps, mpo, 1.0, TIGHT)


class TestEnvironments:
    def test_cache_matches_recompute(self):
        rng = np.random.default_rng(12)
        psi = random_state(rng, 6)
        mps = dense_to_mps(psi)
        mps.move_center_to(0)
        omegas, deltas, u = random_slice(rng, 6)
        envs = Environments(mps, mpo_from_slice(omegas, deltas, u))
        envs.build_right_all(down_to=1)
        for b in range(1, 7):
            ref = envs.recompute_right(b)
            assert np.abs(envs.right[b] - ref).max() <= 1e-10
        for b in range(4):
            envs.update_left(b)
            ref = envs.recompute_left(b + 1)
            assert np.abs(envs.left[b + 1] - ref).max() <= 1e-10
            assert envs.right[b + 1] is None  # stale entries are dropped


class TestSplitTruncate:
    def test_no_truncation_below_precision(self):
        rng = np.random.default_rng(0)
        theta = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        u, s, vh, discarded, saturated = split_truncate(theta, 1e-12, 100)
        assert len(s) == 8 and discarded == 0.0 and not saturated
        assert np.abs(u @ (s[:, None] * vh) - theta).max() <= 1e-12 * np.abs(theta).max()

    def test_relative_weight_rule(self):
        s_true = np.array([1.0, 0.5, 1e-4, 1e-5])
        theta = np.diag(s_true).astype(complex)
        p = 1e-3
        u, s, vh, discarded, saturated = split_truncate(theta, p, 100)
        # tail 1e-4, 1e-5 has squared weight ~1e-8 <= p^2 * total
        assert len(s) == 2
        assert discarded == pytest.approx(
            (1e-4**2 + 1e-5**2) / np.sum(s_true**2), rel=1e-12
        )
        # kept spectrum renormalized to the input weight
        assert np.sum(s**2) == pytest.approx(np.sum(s_true**2), rel=1e-12)

    def test_cap_sets_saturation(self):
        theta = np.diag([1.0, 0.9, 0.8, 0.7]).astype(complex)
        _, s, _, discarded, saturated = split_truncate(theta, 1e-12, 2)
        assert saturated and len(s) == 2
        assert discarded == pytest.approx((0.8**2 + 0.7**2) / (1 + 0.81 + 0.64 + 0.49))

    def test_never_keeps_zero_vectors(self):
        theta = np.zeros((4, 4), dtype=complex)
        u, s, vh, discarded, saturated = split_truncate(theta, 1e-6, 10)
        assert len(s) == 1 and discarded == 0.0
