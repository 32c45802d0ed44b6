from __future__ import annotations

import numpy as np
import pytest

from ctqw_hitting.errors import ContractViolation
from ctqw_hitting.graph_model import FIXTURES, hamiltonian
from ctqw_hitting.hitting import dark_subspace, hitting_time, pure_density
from ctqw_hitting.oracles import (
    BLOCK_SIZE,
    default_t_max,
    master_equation_estimate,
    mc_estimate,
    survival_curve,
    weak_limit_check,
)
from ctqw_hitting.spectral import eigendecompose
from ctqw_hitting.superop import MeasurementSetup

from conftest import basis_state

S2 = 1 / np.sqrt(2)


def spec_of(name):
    return eigendecompose(hamiltonian(FIXTURES[name]))


class TestMonteCarlo:
    def test_k2_from_other(self):
        r = mc_estimate(spec_of("K2"), MeasurementSetup(0, 1.0), basis_state(2, 1), 100_000, seed=7)
        assert abs(r.tau_h_hat - 2.5) <= 3 * r.tau_h_stderr
        assert r.tau_h_stderr < 0.03
        assert r.p_h_hat == 1.0 and r.truncated_fraction == 0.0

    def test_l3_dark_state_never_hits(self):
        psi = np.array([S2, 0, -S2])
        r = mc_estimate(spec_of("L3"), MeasurementSetup(1, 1.0), psi, 10_000, max_meas=1000, seed=3)
        assert r.p_h_hat <= 0.01
        assert r.truncated_fraction == 1.0

    @pytest.mark.parametrize("rate", [0.5, 2.0])
    def test_frozen_walker_on_final_vertex(self, rate):
        # H = 0: the first check always succeeds, so t_hit ~ exponential(rate)
        r = mc_estimate(eigendecompose(np.zeros((3, 3))), MeasurementSetup(0, rate), basis_state(3, 0), 20_000, seed=11)
        assert r.mean_measurements == 1.0
        assert abs(r.tau_h_hat - 1 / rate) <= 4 * r.tau_h_stderr

    def test_start_on_final_vertex(self):
        h = hamiltonian(FIXTURES["L4"])
        setup = MeasurementSetup(0, 2.0)
        closed = hitting_time(h, setup, pure_density(basis_state(4, 0))).tau_h
        r = mc_estimate(eigendecompose(h), setup, basis_state(4, 0), 20_000, seed=11)
        assert abs(r.tau_h_hat - closed) <= 4 * r.tau_h_stderr

    def test_seed_determinism(self):
        args = (spec_of("L3"), MeasurementSetup(2, 1.0), basis_state(3, 0), 5000)
        assert mc_estimate(*args, seed=5) == mc_estimate(*args, seed=5)
        assert mc_estimate(*args, seed=5) != mc_estimate(*args, seed=6)

    def test_worker_count_irrelevant(self):
        args = (spec_of("KL31"), MeasurementSetup(3, 1.0), basis_state(4, 0), 3 * BLOCK_SIZE + 17)
        assert mc_estimate(*args, seed=2, workers=1) == mc_estimate(*args, seed=2, workers=4)

    def test_partial_dark_overlap(self):
        r = mc_estimate(spec_of("L3"), MeasurementSetup(1, 1.0), basis_state(3, 0), 5000, max_meas=300, seed=9)
        assert abs(r.p_h_hat - 0.5) <= 4 * r.p_h_stderr

    @pytest.mark.parametrize(
        "kwargs", [dict(n_traj=0), dict(n_traj=10, max_meas=0), dict(n_traj=10, psi=np.array([1.0, 1.0]))]
    )
    def test_bad_arguments(self, kwargs):
        psi = kwargs.pop("psi", basis_state(2, 1))
        with pytest.raises(ContractViolation):
            mc_estimate(spec_of("K2"), MeasurementSetup(0, 1.0), psi, **kwargs)


class TestMasterEquation:
    def test_k2_from_final(self):
        rho = pure_density(basis_state(2, 0))
        me = master_equation_estimate(hamiltonian(FIXTURES["K2"]), MeasurementSetup(0, 2.0), rho, t_max=40.0)
        assert me.tau_h == pytest.approx(1.0, abs=1e-4)
        assert me.p_h == pytest.approx(1.0, abs=1e-4)
        assert me.p_tail_bound < 1e-12

    def test_dark_state_density_vanishes(self):
        h = hamiltonian(FIXTURES["L3"])
        rho = pure_density(np.array([S2, 0, -S2]))
        states = survival_curve(h, MeasurementSetup(1, 1.0), rho, np.linspace(0, 20, 201))
        assert np.max(np.abs(states[:, 1, 1])) <= 1e-12
        np.testing.assert_allclose(np.einsum("kii->k", states).real, 1.0, atol=1e-10)

    def test_short_horizon_underestimates(self):
        h = hamiltonian(FIXTURES["K2"])
        rho = pure_density(basis_state(2, 1))
        me = master_equation_estimate(h, MeasurementSetup(0, 1.0), rho, t_max=1e-3, n_steps=10)
        assert me.p_h < 1e-3 and me.tau_h < 1e-6
        assert me.p_tail_bound > 0.99

    def test_default_horizon(self):
        h = hamiltonian(FIXTURES["K2"])
        setup = MeasurementSetup(0, 1.0)
        me = master_equation_estimate(h, setup, pure_density(basis_state(2, 1)))
        assert me.t_max == pytest.approx(default_t_max(h, setup))
        assert me.tau_h == pytest.approx(2.5, abs=1e-3)

    def test_survival_monotone_and_positive(self):
        h = hamiltonian(FIXTURES["KL31"])
        rho = pure_density(np.array([0.5, 0.5j, -0.5, 0.5]))
        states = survival_curve(h, MeasurementSetup(3, 1.2), rho, np.linspace(0, 15, 301))
        surv = np.einsum("kii->k", states).real
        assert np.all(np.diff(surv) <= 1e-12)
        for s in states[::25]:
            assert np.min(np.linalg.eigvalsh((s + s.conj().T) / 2)) >= -1e-12

    def test_non_uniform_grid_rejected(self):
        with pytest.raises(ContractViolation):
            survival_curve(np.zeros((2, 2)), MeasurementSetup(0, 1.0), np.eye(2) / 2, [0, 1, 3])

    @pytest.mark.parametrize("kwargs", [dict(t_max=-1.0), dict(n_steps=1)])
    def test_bad_arguments(self, kwargs):
        with pytest.raises(ContractViolation):
            master_equation_estimate(np.zeros((2, 2)), MeasurementSetup(0, 1.0), np.eye(2) / 2, **kwargs)


class TestWeakLimit:
    H = hamiltonian(FIXTURES["L3"])
    SETUP = MeasurementSetup(2, 1.0)
    PSI = basis_state(3, 0)

    def deviation(self, eps, horizon=5.0):
        c = weak_limit_check(self.H, self.SETUP, self.PSI, eps, eps**2, horizon)
        exact = survival_curve(self.H, self.SETUP, pure_density(self.PSI), c.times)
        return float(np.max(np.abs(c.survival - np.einsum("kii->k", exact).real)))

    def test_close_to_master_equation(self):
        assert self.deviation(0.05) <= 5e-3

    def test_converges_as_epsilon_shrinks(self):
        # error is O(eps^2): halving eps should cut it by about four
        assert self.deviation(0.1) / self.deviation(0.05) >= 1.9

    def test_free_hamiltonian(self):
        eps = 0.1
        c = weak_limit_check(np.zeros((2, 2)), MeasurementSetup(0, 1.0), basis_state(2, 1), eps, eps**2, 1.0)
        np.testing.assert_allclose(c.survival, 1.0, atol=1e-14)
        c = weak_limit_check(np.zeros((2, 2)), MeasurementSetup(0, 1.0), np.array([S2, S2]), eps, eps**2, 1.0)
        k = np.arange(c.times.size)
        # weight on the final vertex decays geometrically; the other half is untouched
        np.testing.assert_allclose(c.final_population, 0.5 * (1 - eps**2) ** k, atol=1e-14)

    @pytest.mark.parametrize("eps, dt", [(0.2, 0.04), (0.05, 0.003), (0.0, 0.01)])
    def test_preconditions(self, eps, dt):
        with pytest.raises(ContractViolation):
            weak_limit_check(self.H, self.SETUP, self.PSI, eps, dt, 1.0)


def finite_cases():
    for name, g in FIXTURES.items():
        for f in range(g.n):
            for start in range(g.n):
                if start == f:
                    continue
                pi = dark_subspace(eigendecompose(hamiltonian(g)), f).projector
                if pi[start, start].real < 1e-12:
                    yield name, f, start


@pytest.mark.parametrize("name, f, start", list(finite_cases()))
def test_oracle_triangle(name, f, start):
    h = hamiltonian(FIXTURES[name])
    setup = MeasurementSetup(f, 1.0)
    psi = basis_state(h.shape[0], start)
    closed = hitting_time(h, setup, pure_density(psi))
    me = master_equation_estimate(h, setup, pure_density(psi))
    mc = mc_estimate(eigendecompose(h), setup, psi, 20_000, seed=start)
    assert closed.p_h == pytest.approx(1.0, abs=1e-9)
    assert me.tau_h == pytest.approx(closed.tau_h, abs=1e-3)
    assert abs(mc.tau_h_hat - closed.tau_h) <= 4 * mc.tau_h_stderr
