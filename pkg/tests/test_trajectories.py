import math

import numpy as np
import pytest

from memorymodes import (
    DensityMatrix,
    GridMismatch,
    InvalidRates,
    LorentzianModel,
    McwfEnsemble,
    RateTrajectory,
    StepTooLarge,
    TimeGrid,
    atom_density_from_amplitudes,
    compare_unravelings,
    ensemble_ground_population,
    evolve_lindblad_single,
    propagate_single,
    rates_from_amplitudes,
    run_mcwf_pseudomode,
    run_nmqj,
    traced_ensemble_atom_state,
)

EXCITED_ATOM = np.array([0.0, 1.0 + 0.0j])


def constant_rates(grid, gamma_value, s_value=0.0):
    n = grid.n_steps
    return RateTrajectory(
        grid,
        np.full(n, float(s_value)),
        np.full(n, float(gamma_value)),
        np.ones(n, dtype=bool),
        0.0,
    )


class TestNmqj:
    def test_zero_rate_keeps_ensemble_pure(self):
        grid = TimeGrid(0.0, 5.0, 200)
        ens = run_nmqj(constant_rates(grid, 0.0), EXCITED_ATOM, 500, 3)
        assert np.all(ens.n1 == 0)
        assert np.all(ens.n0 == 500)

    def test_member_conservation(self, fig2_rates):
        ens = run_nmqj(fig2_rates, EXCITED_ATOM, 2000, 5)
        assert np.all(ens.n0 + ens.n1 == 2000)
        assert np.all(ens.n0 >= 0)
        assert np.all(ens.n1 >= 0)

    def test_shared_state_normalized(self, fig2_rates):
        ens = run_nmqj(fig2_rates, np.array([0.6, 0.8 + 0j]), 50, 7)
        norms = np.linalg.norm(ens.psi0, axis=1)
        assert np.max(np.abs(norms - 1.0)) < 1e-12

    def test_markovian_exponential_decay(self):
        grid = TimeGrid(0.0, 5.0, 1000)
        n = 100_000
        ens = run_nmqj(constant_rates(grid, 1.0), EXCITED_ATOM, n, 11)
        expected = np.exp(-grid.times)
        sigma = np.sqrt(np.clip(expected * (1 - expected), 1e-12, None) / n)
        excited = ens.n0 / n  # psi0 stays |e> for an excited start
        assert np.max(np.abs(excited - expected) / sigma) < 5.0

    def test_reference_preset_matches_master_equation(self, fig2_rates, fig2_traj):
        n = 20_000
        ens = run_nmqj(fig2_rates, EXCITED_ATOM, n, 13)
        exact = np.abs(fig2_traj.c1) ** 2
        sigma = np.sqrt(np.clip(exact * (1 - exact), 0.0, None) / n)
        excited = ens.n0 / n
        good = sigma > 0
        assert np.max(np.abs(excited[good] - exact[good]) / sigma[good]) < 5.0

    def test_reverse_jumps_repopulate_deterministic_state(self, fig2_rates):
        ens = run_nmqj(fig2_rates, EXCITED_ATOM, 50_000, 17)
        negative = fig2_rates.gamma[:-1] < 0
        gained = np.diff(ens.n0) > 0
        assert (negative & gained).any()
        # members only return during negative-rate steps
        assert not (gained & ~negative).any()

    def test_shared_state_independent_of_jump_history(self, fig2_rates):
        a = run_nmqj(fig2_rates, np.array([0.6, 0.8 + 0j]), 200, 1)
        b = run_nmqj(fig2_rates, np.array([0.6, 0.8 + 0j]), 200, 999)
        assert np.array_equal(a.psi0, b.psi0)

    def test_negative_rate_with_empty_ground_class(self):
        # rate < 0 from the start: nothing to jump back, ensemble stays pure
        grid = TimeGrid(0.0, 1.0, 100)
        ens = run_nmqj(constant_rates(grid, -0.05), EXCITED_ATOM, 300, 19)
        assert np.all(ens.n1 == 0)

    def test_seed_determinism_and_worker_independence(self, fig2_rates):
        base = run_nmqj(fig2_rates, EXCITED_ATOM, 30_000, 23, workers=1)
        again = run_nmqj(fig2_rates, EXCITED_ATOM, 30_000, 23, workers=1)
        threaded = run_nmqj(fig2_rates, EXCITED_ATOM, 30_000, 23, workers=5)
        for other in (again, threaded):
            assert np.array_equal(base.n0, other.n0)
            assert np.array_equal(base.n1, other.n1)
            assert np.array_equal(base.psi0, other.psi0)

    def test_step_too_large(self):
        grid = TimeGrid(0.0, 1.0, 20)
        with pytest.raises(StepTooLarge):
            run_nmqj(constant_rates(grid, 10.0), EXCITED_ATOM, 10, 1)

    def test_invalid_rates_rejected(self, fig2_rates):
        damaged = RateTrajectory(
            fig2_rates.grid,
            fig2_rates.s.copy(),
            fig2_rates.gamma.copy(),
            fig2_rates.valid.copy(),
            fig2_rates.omega0,
        )
        damaged.valid[100] = False
        with pytest.raises(InvalidRates):
            run_nmqj(damaged, EXCITED_ATOM, 10, 1)

    def test_grid_mismatch(self, fig2_rates):
        with pytest.raises(GridMismatch):
            run_nmqj(fig2_rates, EXCITED_ATOM, 10, 1, grid=TimeGrid(0.0, 10.0, 999))

    def test_superposition_start_reproduces_coherence(self, fig2_model):
        # the shift acts as a pure phase on C_e, so the reconstructed
        # ensemble matrix must track the master-equation coherence too
        from memorymodes import evolve_atom_timelocal

        grid = TimeGrid(0.0, 6.0, 1200)
        traj = propagate_single(fig2_model, None, grid)
        rates = rates_from_amplitudes(traj)
        c_g, c_e = 0.6, 0.8
        n = 40_000
        ens = run_nmqj(rates, np.array([c_g, c_e + 0.0j]), n, 71)
        rho0 = DensityMatrix(
            np.array([[c_g**2, c_g * c_e], [c_g * c_e, c_e**2]], dtype=complex)
        )
        exact = evolve_atom_timelocal(rates, rho0, grid)
        ground = np.zeros((2, 2), dtype=complex)
        ground[0, 0] = 1.0
        worst = 0.0
        for k in range(0, grid.n_steps, 13):
            share = np.outer(ens.psi0[k], ens.psi0[k].conj())
            ensemble = (ens.n0[k] / n) * share + (ens.n1[k] / n) * ground
            survival = ens.n0[k] / n  # plug-in binomial scale
            scale = np.abs(share - ground) * math.sqrt(
                max(survival * (1 - survival), 1e-12) / n
            )
            gap = np.abs(ensemble - exact[k].matrix)
            with np.errstate(invalid="ignore", divide="ignore"):
                scores = np.where(scale > 1e-12, gap / scale, np.where(gap > 1e-6, np.inf, 0.0))
            worst = max(worst, float(np.max(scores)))
        assert worst < 5.0

    def test_statistical_soundness_over_seeds(self, fig2_model):
        grid = TimeGrid(0.0, 6.0, 1200)
        traj = propagate_single(fig2_model, None, grid)
        rates = rates_from_amplitudes(traj)
        exact = 1.0 - np.abs(traj.c1) ** 2
        sigma_unit = np.sqrt(np.clip(exact * (1 - exact), 0.0, None))
        n = 2000
        pooled = []
        for seed in range(20):
            ens = run_nmqj(rates, EXCITED_ATOM, n, seed)
            ground = ens.n1 / n
            keep = sigma_unit > 1e-6
            scores = (ground[keep] - exact[keep]) / (sigma_unit[keep] / math.sqrt(n))
            pooled.append(scores[::60])  # thin the autocorrelated series
        pooled = np.concatenate(pooled)
        assert abs(pooled.mean()) < 0.2
        assert 0.5 < pooled.var() < 2.0


class TestMcwf:
    def test_ground_state_is_stationary(self, fig2_model):
        grid = TimeGrid(0.0, 4.0, 100)
        ens = run_mcwf_pseudomode(
            fig2_model, np.array([1.0 + 0j, 0.0, 0.0]), 400, 29, grid
        )
        assert np.all(ens.n1 == 0)
        assert np.array_equal(ens.jump_counts, np.zeros_like(ens.jump_counts))
        assert np.max(np.abs(ens.psi0 - ens.psi0[0])) < 1e-12

    def test_lossless_mode_never_jumps(self):
        model = LorentzianModel(0.0, 0.0, 0.0, 0.9)
        grid = TimeGrid(0.0, 6.0, 400)
        ens = run_mcwf_pseudomode(model, np.array([0.0, 0.0, 1.0 + 0j]), 500, 31, grid)
        assert np.all(ens.n1 == 0)
        expected = np.cos(0.9 * grid.times) ** 2
        assert np.max(np.abs(np.abs(ens.psi0[:, 2]) ** 2 - expected)) < 1e-8

    def test_matches_dissipative_solution_entrywise(self, fig2_model, fig2_grid):
        n = 20_000
        ens = run_mcwf_pseudomode(
            fig2_model, np.array([0.0, 0.0, 1.0 + 0j]), n, 37, fig2_grid
        )
        exact = evolve_lindblad_single(fig2_model, DensityMatrix.excited(3), fig2_grid)
        vacuum = np.zeros((3, 3))
        vacuum[0, 0] = 1.0
        worst = 0.0
        for k in range(0, fig2_grid.n_steps, 41):
            share = np.outer(ens.psi0[k], ens.psi0[k].conj())
            ensemble = (ens.n0[k] / n) * share + (ens.n1[k] / n) * vacuum
            p0 = 1.0 - exact[k].matrix[0, 0].real  # survival weight
            scale = np.abs(share - vacuum) * math.sqrt(max(p0 * (1 - p0), 0.0) / n)
            gap = np.abs(ensemble - exact[k].matrix)
            with np.errstate(invalid="ignore", divide="ignore"):
                scores = np.where(scale > 0, gap / scale, np.where(gap > 1e-9, np.inf, 0.0))
            worst = max(worst, float(np.max(scores)))
        assert worst < 5.0

    def test_jump_rate_bookkeeping(self, fig2_model):
        grid = TimeGrid(0.0, 10.0, 2000)
        n = 20_000
        ens = run_mcwf_pseudomode(fig2_model, np.array([0.0, 0.0, 1.0 + 0j]), n, 41, grid)
        mode_pop = np.abs(ens.psi0[:-1, 1]) ** 2
        per_member = fig2_model.gamma * grid.dt * mode_pop
        expected = np.sum(ens.n0[:-1] * per_member)
        variance = np.sum(ens.n0[:-1] * per_member * (1 - per_member))
        total = ens.jump_counts.sum()
        assert abs(total - expected) / math.sqrt(variance) < 5.0

    def test_seed_determinism_and_worker_independence(self, fig2_model, fig2_grid):
        initial = np.array([0.0, 0.0, 1.0 + 0j])
        base = run_mcwf_pseudomode(fig2_model, initial, 30_000, 43, fig2_grid, workers=1)
        threaded = run_mcwf_pseudomode(fig2_model, initial, 30_000, 43, fig2_grid, workers=4)
        assert np.array_equal(base.n0, threaded.n0)
        assert np.array_equal(base.jump_counts, threaded.jump_counts)

    def test_superposition_with_vacuum_component(self, fig2_model):
        # nonzero joint-vacuum amplitude: the no-jump state keeps it frozen
        # and the traced ensemble must match the exact emitter evolution
        grid = TimeGrid(0.0, 6.0, 1200)
        c_vac = 0.6
        initial = np.array([c_vac, 0.0, 0.8 + 0.0j])
        n = 40_000
        ens = run_mcwf_pseudomode(fig2_model, initial, n, 73, grid)
        assert np.allclose(ens.psi0[0], initial / np.linalg.norm(initial), atol=1e-12)
        traj = propagate_single(
            fig2_model, np.array([0.8 + 0.0j, 0.0]), grid
        )
        exact = atom_density_from_amplitudes(traj, vacuum_amplitude=c_vac)
        traced = traced_ensemble_atom_state(ens)
        sigma_floor = 1.0 / math.sqrt(n)
        worst = max(
            float(np.max(np.abs(a.matrix - b.matrix))) / sigma_floor
            for a, b in zip(traced[::17], exact[::17])
        )
        assert worst < 5.0
        # ground-population formula with every emitter-ground weight active
        pg = ensemble_ground_population(ens)
        manual = ens.n1 / n + (ens.n0 / n) * (
            np.abs(ens.psi0[:, 0]) ** 2 + np.abs(ens.psi0[:, 1]) ** 2
        )
        assert np.array_equal(pg, manual)

    def test_two_mode_channels(self, bandgap_model, fig2_grid):
        initial = np.array([0.0, 0.0, 0.0, 1.0 + 0j])
        n = 5000
        ens = run_mcwf_pseudomode(bandgap_model, initial, n, 47, fig2_grid)
        assert ens.psi0.shape == (fig2_grid.n_steps, 4)
        assert ens.jump_counts.shape == (fig2_grid.n_steps - 1, 2)
        assert np.all(ens.n0 + ens.n1 == n)
        # both channels fire over the run
        assert ens.jump_counts[:, 0].sum() > 0
        assert ens.jump_counts[:, 1].sum() > 0

    def test_step_too_large(self):
        model = LorentzianModel(0.0, 0.0, 5.0, 2.0)
        grid = TimeGrid(0.0, 1.0, 12)
        with pytest.raises(StepTooLarge):
            run_mcwf_pseudomode(model, np.array([0.0, 0.0, 1.0 + 0j]), 10, 1, grid)

    def test_rejects_unnormalized_state(self, fig2_model, fig2_grid):
        with pytest.raises(ValueError, match="normalized"):
            run_mcwf_pseudomode(fig2_model, np.array([0.0, 0.0, 0.5]), 10, 1, fig2_grid)


class TestTracedEnsemble:
    def test_unjumped_excited(self):
        grid = TimeGrid(0.0, 1.0, 2)
        psi0 = np.tile(np.array([0.0, 0.0, 1.0 + 0j]), (2, 1))
        ens = McwfEnsemble(grid, 10, np.array([10, 10]), np.array([0, 0]), psi0, 0, grid.dt,
                           np.zeros((1, 1), dtype=np.int64))
        out = traced_ensemble_atom_state(ens)
        assert np.array_equal(out[0].matrix, np.diag([0.0, 1.0]).astype(complex))

    def test_fully_jumped(self):
        grid = TimeGrid(0.0, 1.0, 2)
        psi0 = np.tile(np.array([0.0, 0.0, 1.0 + 0j]), (2, 1))
        ens = McwfEnsemble(grid, 10, np.array([0, 0]), np.array([10, 10]), psi0, 0, grid.dt,
                           np.zeros((1, 1), dtype=np.int64))
        out = traced_ensemble_atom_state(ens)
        assert np.array_equal(out[0].matrix, np.diag([1.0, 0.0]).astype(complex))

    def test_generic_ground_population(self):
        grid = TimeGrid(0.0, 1.0, 2)
        psi = np.array([0.3 + 0.1j, 0.5 - 0.2j, 0.6 + 0.3j])
        psi = psi / np.linalg.norm(psi)
        ens = McwfEnsemble(grid, 1000, np.array([700, 700]), np.array([300, 300]),
                           np.tile(psi, (2, 1)), 0, grid.dt, np.zeros((1, 1), dtype=np.int64))
        out = traced_ensemble_atom_state(ens)
        expected = 0.3 + 0.7 * (abs(psi[0]) ** 2 + abs(psi[1]) ** 2)
        assert out[0].ground_population() == pytest.approx(expected, abs=1e-14)
        assert ensemble_ground_population(ens)[0] == pytest.approx(expected, abs=1e-14)

    def test_matches_partial_trace_of_ensemble_density(self, fig2_model, fig2_grid):
        from memorymodes import partial_trace_pseudomodes

        ens = run_mcwf_pseudomode(
            fig2_model, np.array([0.0, 0.0, 1.0 + 0j]), 500, 53, fig2_grid
        )
        traced = traced_ensemble_atom_state(ens)
        for k in (0, 1000, 3999):
            share = np.outer(ens.psi0[k], ens.psi0[k].conj())
            full = (ens.n0[k] / 500) * share
            full[0, 0] += ens.n1[k] / 500
            direct = partial_trace_pseudomodes(DensityMatrix(full))
            assert np.max(np.abs(direct.matrix - traced[k].matrix)) < 1e-12


class TestCompare:
    def test_degenerate_decoupled_case_scores_zero(self):
        # atom decoupled from the mode: no jumps anywhere, all series agree
        model = LorentzianModel(0.0, 1.0, 0.8, 0.0)
        grid = TimeGrid(0.0, 3.0, 120)
        traj = propagate_single(model, None, grid)
        rates = rates_from_amplitudes(traj)
        nmqj = run_nmqj(rates, EXCITED_ATOM, 50, 3)
        mcwf = run_mcwf_pseudomode(model, np.array([0.0, 0.0, 1.0 + 0j]), 50, 3, grid)
        report = compare_unravelings(nmqj, mcwf, atom_density_from_amplitudes(traj))
        assert report.max_z_score == 0.0
        assert report.max_cross_z == 0.0

    def test_reference_preset(self, fig2_model, fig2_rates, fig2_traj, fig2_grid):
        nmqj = run_nmqj(fig2_rates, EXCITED_ATOM, 10_000, 59)
        mcwf = run_mcwf_pseudomode(
            fig2_model, np.array([0.0, 0.0, 1.0 + 0j]), 10_000, 61, fig2_grid
        )
        report = compare_unravelings(nmqj, mcwf, atom_density_from_amplitudes(fig2_traj))
        assert report.max_z_score < 5.0
        assert report.max_cross_z < 5.0
        assert np.all(report.sigma[report.pg_exact * (1 - report.pg_exact) > 0] > 0)

    def test_single_member_edge_case(self, fig2_model, fig2_rates, fig2_traj, fig2_grid):
        nmqj = run_nmqj(fig2_rates, EXCITED_ATOM, 1, 67)
        mcwf = run_mcwf_pseudomode(
            fig2_model, np.array([0.0, 0.0, 1.0 + 0j]), 1, 67, fig2_grid
        )
        report = compare_unravelings(nmqj, mcwf, atom_density_from_amplitudes(fig2_traj))
        assert np.all(np.isfinite(report.sigma))
        assert report.max_z_score >= 0.0

    def test_grid_mismatch(self, fig2_model, fig2_rates, fig2_traj, fig2_grid):
        nmqj = run_nmqj(fig2_rates, EXCITED_ATOM, 10, 1)
        other = TimeGrid(0.0, 5.0, 100)
        mcwf = run_mcwf_pseudomode(fig2_model, np.array([0.0, 0.0, 1.0 + 0j]), 10, 1, other)
        with pytest.raises(GridMismatch):
            compare_unravelings(nmqj, mcwf, atom_density_from_amplitudes(fig2_traj))
