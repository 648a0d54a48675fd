"""Open-system integrator tests: collapse operators, thermal states, rate
splitting, and RK4 propagation against product-of-exponentials oracles."""

import math

import numpy as np
import pytest
from scipy.special import erf

from qubitlab.control import (X_GATE, PulseSpec, drive_hamiltonian,
                              pulse_for_gate, rotating_frame)
from qubitlab.dynamics import (CollapseSet, EvolutionResult,
                               default_steps_per_ns, lindblad_evolve,
                               propagate_pulse, thermal_state,
                               transition_rates)
from qubitlab.spectra import FluxoniumParams, TransmonParams, spectrum_of

from oracles import boltzmann_p0, expm_evolve, piecewise_expm_evolve

TRANSMON = TransmonParams(e_j=7.68, e_c=0.31)
FLUXONIUM = FluxoniumParams(e_j=4.80, e_c=0.99, e_l=0.89, phi_ext=0.5)


@pytest.fixture(scope="module")
def transmon_spectrum():
    return spectrum_of(TRANSMON)


@pytest.fixture(scope="module")
def idle_hamiltonian(transmon_spectrum):
    """Zero-amplitude pulse: the Hamiltonian is the bare level diagonal."""
    p = PulseSpec(amplitude=0.0, tau=20.0, sigma=5.0,
                  omega_d=transmon_spectrum.transition(0, 1))
    return drive_hamiltonian(transmon_spectrum, p, d=4)


@pytest.fixture(scope="module")
def driven_hamiltonian(transmon_spectrum):
    p = pulse_for_gate(X_GATE, 20.0, transmon_spectrum.transition(0, 1))
    return drive_hamiltonian(transmon_spectrum, p, d=4)


def ground(d):
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def mixed_state():
    rho = np.diag([0.2, 0.5, 0.2, 0.1]).astype(complex)
    rho[0, 1] = rho[1, 0] = 0.1
    return rho


def lab_callable(h):
    w_d = 2.0 * math.pi * h.omega_d

    def ham(t):
        gi, gq = h.envelope(t)
        u = (gi * math.cos(w_d * t) - gq * math.sin(w_d * t)) * 1e-9
        return np.diag(2.0 * math.pi * h.static).astype(complex) + \
            u * h.drive_op
    return ham


class TestCollapseSet:
    def test_operator_construction(self):
        col = CollapseSet(gamma_down=4e6, gamma_up=1e6, gamma_phi=9e6)
        ops, ldl = col.operators(3)
        assert ops.shape == (3, 3, 3)
        a = np.array([[0, 1, 0], [0, 0, math.sqrt(2.0)], [0, 0, 0]],
                     dtype=complex)
        np.testing.assert_allclose(ops[0], math.sqrt(4e-3) * a, atol=1e-15)
        np.testing.assert_allclose(ops[1], math.sqrt(1e-3) * a.conj().T,
                                   atol=1e-15)
        deph = np.zeros((3, 3), dtype=complex)
        deph[1, 1] = math.sqrt(2.0 * 9e-3)
        np.testing.assert_allclose(ops[2], deph, atol=1e-15)
        manual = sum(op.conj().T @ op for op in ops)
        np.testing.assert_allclose(ldl, manual, atol=1e-15)

    def test_zero_rates_give_zero_operators(self):
        ops, ldl = CollapseSet().operators(4)
        assert np.all(ops == 0.0) and np.all(ldl == 0.0)

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError, match="gamma_up"):
            CollapseSet(gamma_up=-1.0)


class TestThermalState:
    def test_two_level_matches_boltzmann(self):
        rho = thermal_state(np.array([0.0, 4.0]), 0.02)
        assert rho[0, 0].real == pytest.approx(boltzmann_p0(4.0, 0.02),
                                               rel=1e-12)
        assert np.trace(rho).real == pytest.approx(1.0, rel=1e-12)

    def test_level_ratio_is_boltzmann_factor(self, transmon_spectrum):
        rho = thermal_state(transmon_spectrum, 0.05, d=4)
        w01 = transmon_spectrum.transition(0, 1)
        x = 6.62607015e-34 * w01 * 1e9 / (1.380649e-23 * 0.05)
        assert (rho[1, 1] / rho[0, 0]).real == pytest.approx(math.exp(-x),
                                                             rel=1e-9)
        assert rho.shape == (4, 4)
        assert np.all(np.diff(np.diag(rho).real) < 0.0)

    def test_reference_occupation(self, transmon_spectrum):
        rho = thermal_state(transmon_spectrum, 0.02, d=4)
        assert rho[0, 0].real == pytest.approx(0.999936476, abs=1e-8)

    def test_zero_temperature_is_ground(self):
        rho = thermal_state(np.array([0.0, 1.0, 2.0]), 0.0)
        np.testing.assert_array_equal(np.diag(rho).real, [1.0, 0.0, 0.0])

    def test_negative_temperature_rejected(self):
        with pytest.raises(ValueError, match="temperature"):
            thermal_state(np.array([0.0, 1.0]), -0.1)


class TestTransitionRates:
    def test_sum_and_ratio(self):
        down, up = transition_rates(0.2, 50e-6)
        assert down + up == pytest.approx(1.0 / 50e-6, rel=1e-12)
        assert up / down == pytest.approx(0.2 / 0.8, rel=1e-12)

    def test_reference_devices(self):
        p_exc = 1.0 - boltzmann_p0(4.00, 0.02)
        down, up = transition_rates(p_exc, 52.78e-6)
        assert down == pytest.approx(18945.28558649624, rel=1e-10)
        assert up == pytest.approx(1.2850842123625266, rel=1e-10)
        p_exc = 1.0 - boltzmann_p0(0.30517, 0.02)
        down, up = transition_rates(p_exc, 1530e-6)
        assert down == pytest.approx(441.3778726401731, rel=1e-10)
        assert up == pytest.approx(212.21689860165702, rel=1e-10)

    def test_validation(self):
        with pytest.raises(ValueError, match="excited_population"):
            transition_rates(1.0, 50e-6)
        with pytest.raises(ValueError, match="excited_population"):
            transition_rates(-0.1, 50e-6)
        with pytest.raises(ValueError, match="t1_eff_s"):
            transition_rates(0.1, 0.0)


class TestStepRule:
    def test_reference_devices(self, driven_hamiltonian):
        assert default_steps_per_ns(driven_hamiltonian) == 439
        fs = spectrum_of(FLUXONIUM)
        p = pulse_for_gate(X_GATE, 62.0, fs.transition(0, 1))
        assert default_steps_per_ns(drive_hamiltonian(fs, p, d=4)) == 257

    def test_floor(self, transmon_spectrum):
        p = PulseSpec(amplitude=0.0, tau=20.0, sigma=5.0, omega_d=0.0)
        h = drive_hamiltonian(transmon_spectrum, p, d=2)
        h.static = np.array([0.0, 0.001])
        h.omega_d = 0.0
        assert default_steps_per_ns(h) == 40


class TestLabIntegrator:
    def test_constant_hamiltonian_converges_to_exponential(
            self, idle_hamiltonian):
        col = CollapseSet(gamma_down=2e6, gamma_up=3e5, gamma_phi=1e6)
        rho0 = mixed_state()
        c_ops, _ = col.operators(4)
        oracle = expm_evolve(
            rho0, np.diag(2.0 * math.pi * idle_hamiltonian.static)
            .astype(complex), list(c_ops), 20.0)
        coarse, _, _ = propagate_pulse(idle_hamiltonian, col, rho0,
                                       duration=20.0)
        np.testing.assert_allclose(coarse, oracle, atol=1e-4)
        fine, _, _ = propagate_pulse(idle_hamiltonian, col, rho0,
                                     duration=20.0, steps_per_ns=2000)
        np.testing.assert_allclose(fine, oracle, atol=1e-7)

    def test_driven_evolution_matches_piecewise_oracle(
            self, driven_hamiltonian):
        col = CollapseSet(gamma_down=5e5, gamma_up=5e4, gamma_phi=2e5)
        out, drift, _ = propagate_pulse(driven_hamiltonian, col, ground(4))
        assert drift < 1e-10
        oracle = piecewise_expm_evolve(ground(4),
                                       lab_callable(driven_hamiltonian),
                                       list(col.operators(4)[0]),
                                       0.0, 20.0, 12000)
        np.testing.assert_allclose(out, oracle, atol=5e-4)

    def test_step_refinement_is_converged(self, driven_hamiltonian):
        col = CollapseSet(gamma_down=5e5, gamma_up=5e4, gamma_phi=2e5)
        out1, _, _ = propagate_pulse(driven_hamiltonian, col, ground(4))
        out2, _, _ = propagate_pulse(driven_hamiltonian, col, ground(4),
                                     steps_per_ns=878)
        assert np.max(np.abs(out1 - out2)) < 5e-5

    def test_ground_state_is_relaxation_fixed_point(self, idle_hamiltonian):
        col = CollapseSet(gamma_down=1e7)
        out, _, _ = propagate_pulse(idle_hamiltonian, col, ground(4),
                                    duration=50.0)
        np.testing.assert_allclose(out, ground(4), atol=1e-12)

    def test_input_state_not_mutated(self, driven_hamiltonian):
        rho0 = ground(4)
        propagate_pulse(driven_hamiltonian, CollapseSet(), rho0)
        np.testing.assert_array_equal(rho0, ground(4))

    def test_unstable_step_raises(self, idle_hamiltonian):
        rho = np.zeros((4, 4), dtype=complex)
        rho[3, 3] = 1.0
        with pytest.raises(RuntimeError, match="trace drift"):
            propagate_pulse(idle_hamiltonian, CollapseSet(gamma_down=1e13),
                            rho, duration=5.0)

    def test_duration_validation(self, idle_hamiltonian):
        with pytest.raises(ValueError, match="duration"):
            propagate_pulse(idle_hamiltonian, CollapseSet(), ground(4),
                            duration=-1.0)


class TestRotatingFramePath:
    def test_matches_piecewise_oracle(self, driven_hamiltonian):
        col = CollapseSet(gamma_down=5e5, gamma_up=5e4, gamma_phi=2e5)
        out, _, _ = propagate_pulse(driven_hamiltonian, col, ground(4),
                                    rwa=True, steps_per_ns=200)
        oracle = piecewise_expm_evolve(
            ground(4), rotating_frame(driven_hamiltonian, rwa=True),
            list(col.operators(4)[0]), 0.0, 20.0, 4000)
        np.testing.assert_allclose(out, oracle, atol=1e-6)


class TestSteadyState:
    def test_two_level_detailed_balance(self, transmon_spectrum):
        p = PulseSpec(amplitude=0.0, tau=20.0, sigma=5.0,
                      omega_d=transmon_spectrum.transition(0, 1))
        h2 = drive_hamiltonian(transmon_spectrum, p, d=2)
        down, up = transition_rates(0.3, 1e-8)
        col = CollapseSet(gamma_down=down, gamma_up=up)
        out, _, _ = propagate_pulse(h2, col, ground(2), duration=150.0)
        assert out[1, 1].real == pytest.approx(0.3, abs=1e-5)

    def test_ladder_reaches_geometric_distribution(self, idle_hamiltonian):
        # sqrt(k) ladders satisfy rung-wise detailed balance, so the
        # truncated steady state is geometric in gamma_up / gamma_down
        down, up = transition_rates(0.3, 1e-8)
        col = CollapseSet(gamma_down=down, gamma_up=up)
        out, _, _ = propagate_pulse(idle_hamiltonian, col, ground(4),
                                    duration=250.0)
        r = up / down
        expect = np.array([r ** k for k in range(4)])
        expect /= expect.sum()
        np.testing.assert_allclose(np.diag(out).real, expect, atol=1e-5)


class TestLindbladEvolve:
    def test_resonant_rabi_follows_cumulative_area(self, transmon_spectrum):
        # two-level resonant rotating-frame evolution: p1 = sin^2(area/2)
        # with the area the closed-form running envelope integral
        w01 = transmon_spectrum.transition(0, 1)
        p = pulse_for_gate(X_GATE, 20.0, w01)
        h2 = drive_hamiltonian(transmon_spectrum, p, d=2)
        times = np.linspace(0.0, 20.0, 9)
        res = lindblad_evolve(h2, CollapseSet(), ground(2), times, rwa=True,
                              steps_per_ns=400)
        amp = p.amplitude * 1e-9
        sigma = p.sigma
        cut = math.exp(-2.0)

        def area(t):
            gauss = sigma * math.sqrt(math.pi / 2.0) * (
                erf((t - 0.5 * p.tau) / (math.sqrt(2.0) * sigma)) +
                erf(math.sqrt(2.0)))
            return amp * (gauss - cut * t) / (1.0 - cut)

        np.testing.assert_array_equal(res.times, times)
        for t, row in zip(res.times, res.populations):
            assert row[1] == pytest.approx(math.sin(0.5 * area(t)) ** 2,
                                           abs=1e-6)
            assert row.sum() == pytest.approx(1.0, abs=1e-9)
        assert res.trace_drift < 1e-9
        assert isinstance(res, EvolutionResult)

    def test_sample_times_snap_to_grid(self, idle_hamiltonian):
        times = np.array([0.0, 0.0001, 10.0, 20.0])
        res = lindblad_evolve(idle_hamiltonian, CollapseSet(), ground(4),
                              times, steps_per_ns=40)
        # 0.0 and 0.0001 land on the same grid point and merge
        np.testing.assert_allclose(res.times, [0.0, 10.0, 20.0], atol=1e-12)
        assert res.populations.shape == (3, 4)

    def test_decay_trace(self, idle_hamiltonian):
        col = CollapseSet(gamma_down=1e8)
        rho0 = np.zeros((4, 4), dtype=complex)
        rho0[1, 1] = 1.0
        times = np.linspace(0.0, 30.0, 7)
        res = lindblad_evolve(idle_hamiltonian, col, rho0, times)
        expected = np.exp(-1e8 * 1e-9 * res.times)
        np.testing.assert_allclose(res.populations[:, 1], expected,
                                   atol=1e-6)

    def test_validation(self, idle_hamiltonian):
        with pytest.raises(ValueError, match="at least two"):
            lindblad_evolve(idle_hamiltonian, CollapseSet(), ground(4),
                            np.array([0.0]))
        with pytest.raises(ValueError, match="strictly increasing"):
            lindblad_evolve(idle_hamiltonian, CollapseSet(), ground(4),
                            np.array([0.0, 5.0, 5.0]))
        with pytest.raises(ValueError, match="4x4"):
            lindblad_evolve(idle_hamiltonian, CollapseSet(), ground(3),
                            np.array([0.0, 10.0]))
        bad = 2.0 * ground(4)
        with pytest.raises(ValueError, match="unit trace"):
            lindblad_evolve(idle_hamiltonian, CollapseSet(), bad,
                            np.array([0.0, 10.0]))
