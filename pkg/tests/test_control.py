"""Gate targets, pulse envelopes, drive Hamiltonians, rotating frames, and
state fidelity."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qubitlab.control import (AREA_UNIT, HADAMARD_GATE, X_GATE,
                              DriveHamiltonian, GateSpec, PulseSpec,
                              drag_envelope, drive_hamiltonian,
                              embed_unitary, gaussian_area,
                              gaussian_envelope, pulse_for_gate,
                              rabi_population, rotating_frame,
                              state_fidelity, universal_gate)
from qubitlab.spectra import FluxoniumParams, TransmonParams, spectrum_of

from oracles import envelope_area_quad, piecewise_expm_evolve

TRANSMON = TransmonParams(e_j=7.68, e_c=0.31)
FLUXONIUM = FluxoniumParams(e_j=4.80, e_c=0.99, e_l=0.89, phi_ext=0.5)

# drive-operator leakage ratios with <0|N|1> normalized to 1
TRANSMON_N12 = 1.3426728765503473
TRANSMON_N23 = 1.5022995462841875
TRANSMON_N03 = 0.05573647212605227
FLUXONIUM_N12 = 6.213620842966292
FLUXONIUM_N23 = 5.823436555364335
FLUXONIUM_N03 = -5.0659507510036335


@pytest.fixture(scope="module")
def transmon_spectrum():
    return spectrum_of(TRANSMON)


@pytest.fixture(scope="module")
def fluxonium_spectrum():
    return spectrum_of(FLUXONIUM)


def ground_state(d):
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1.0
    return rho


class TestGateMatrices:
    def test_x_gate_matrix(self):
        u = universal_gate(X_GATE)
        phase = u[1, 0] / abs(u[1, 0])
        np.testing.assert_allclose(u / phase, [[0.0, 1.0], [1.0, 0.0]],
                                   atol=1e-12)

    def test_hadamard_matrix(self):
        u = universal_gate(HADAMARD_GATE)
        phase = u[0, 0] / abs(u[0, 0])
        r = 1.0 / math.sqrt(2.0)
        np.testing.assert_allclose(u / phase, [[r, r], [r, -r]], atol=1e-12)

    @given(st.floats(-2.0 * math.pi, 2.0 * math.pi),
           st.floats(-2.0 * math.pi, 2.0 * math.pi),
           st.floats(-2.0 * math.pi, 2.0 * math.pi))
    @settings(max_examples=50, deadline=None)
    def test_gates_are_special_unitary(self, theta, phi, lam):
        u = universal_gate(GateSpec(theta=theta, phi=phi, lam=lam))
        np.testing.assert_allclose(u @ u.conj().T, np.eye(2), atol=1e-12)
        assert np.linalg.det(u) == pytest.approx(1.0, abs=1e-12)

    def test_rotation_composition(self):
        # U(theta, 0, 0) on |0> gives cos/sin amplitudes of a y rotation
        u = universal_gate(GateSpec(theta=0.7, phi=0.0, lam=0.0))
        psi = u @ np.array([1.0, 0.0], dtype=complex)
        assert psi[0] == pytest.approx(math.cos(0.35), abs=1e-12)
        assert psi[1] == pytest.approx(math.sin(0.35), abs=1e-12)

    def test_embed_unitary(self):
        u = universal_gate(X_GATE)
        big = embed_unitary(u, 5)
        np.testing.assert_array_equal(big[:2, :2], u)
        np.testing.assert_array_equal(big[2:, 2:], np.eye(3))
        assert np.all(big[2:, :2] == 0.0) and np.all(big[:2, 2:] == 0.0)
        np.testing.assert_allclose(big @ big.conj().T, np.eye(5), atol=1e-12)


class TestPulseSpec:
    def test_requires_four_sigma_duration(self):
        PulseSpec(amplitude=1e8, tau=20.0, sigma=5.0)
        with pytest.raises(ValueError, match="tau = 4 sigma"):
            PulseSpec(amplitude=1e8, tau=20.0, sigma=6.0)
        with pytest.raises(ValueError, match="tau must be positive"):
            PulseSpec(amplitude=1e8, tau=0.0, sigma=0.0)

    def test_pulse_for_gate_area_is_rotation_angle(self):
        for gate, dz in ((X_GATE, 0.0), (HADAMARD_GATE, 0.0),
                         (X_GATE, 0.037), (HADAMARD_GATE, -0.02)):
            p = pulse_for_gate(gate, 24.0, 4.0, delta_zeta=dz)
            assert p.sigma == 6.0 and p.omega_d == 4.0
            assert gaussian_area(p) == pytest.approx(gate.theta + dz,
                                                     rel=1e-12)

    def test_area_against_quadrature(self):
        p = pulse_for_gate(X_GATE, 20.0, 4.0)
        assert gaussian_area(p) == pytest.approx(
            envelope_area_quad(p.amplitude, p.tau), rel=1e-10)
        assert AREA_UNIT == pytest.approx(2.1409858154364243, rel=1e-12)


class TestEnvelopes:
    def test_endpoints_and_peak(self):
        p = pulse_for_gate(X_GATE, 20.0, 4.0)
        assert gaussian_envelope(0.0, p) == 0.0
        assert gaussian_envelope(20.0, p) == pytest.approx(0.0, abs=1e-25)
        assert gaussian_envelope(10.0, p) == pytest.approx(p.amplitude,
                                                           rel=1e-12)

    def test_symmetry_and_array_input(self):
        p = pulse_for_gate(X_GATE, 20.0, 4.0)
        t = np.linspace(0.0, 20.0, 41)
        g = gaussian_envelope(t, p)
        assert g.shape == (41,)
        np.testing.assert_allclose(g, g[::-1], atol=1e-9 * p.amplitude)

    def test_rejects_out_of_range_times(self):
        p = pulse_for_gate(X_GATE, 20.0, 4.0)
        with pytest.raises(ValueError, match="outside"):
            gaussian_envelope(-0.5, p)
        with pytest.raises(ValueError, match="outside"):
            gaussian_envelope(20.5, p)

    def test_drag_quadrature_is_time_derivative(self):
        p = pulse_for_gate(X_GATE, 20.0, 4.0, beta=0.4)
        h = 1e-6
        for t in (3.0, 7.5, 10.0, 14.2):
            gi, gq = drag_envelope(t, p)
            assert gi == gaussian_envelope(t, p)
            fd = (gaussian_envelope(t + h, p) -
                  gaussian_envelope(t - h, p)) / (2.0 * h)
            assert gq == pytest.approx(0.4 * fd, rel=1e-6, abs=1e-3)

    def test_drag_antisymmetric_about_center(self):
        p = pulse_for_gate(X_GATE, 20.0, 4.0, beta=0.4)
        _, q1 = drag_envelope(6.0, p)
        _, q2 = drag_envelope(14.0, p)
        assert q1 == pytest.approx(-q2, rel=1e-12)
        assert drag_envelope(10.0, p)[1] == 0.0

    def test_in_line_routing(self):
        spec = pulse_for_gate(X_GATE, 20.0, 4.0, beta=0.4)
        inline = PulseSpec(amplitude=spec.amplitude, tau=20.0, sigma=5.0,
                           beta=0.4, omega_d=4.0, quadrature=False)
        gi, gq = drag_envelope(7.0, spec)
        gi2, gq2 = drag_envelope(7.0, inline)
        assert gq2 == 0.0
        assert gi2 == pytest.approx(gi + gq, rel=1e-12)

    def test_zero_beta_has_zero_quadrature(self):
        p = pulse_for_gate(X_GATE, 20.0, 4.0)
        assert drag_envelope(4.0, p) == (gaussian_envelope(4.0, p), 0.0)


class TestDriveHamiltonian:
    def test_transmon_coupling_ratios(self, transmon_spectrum):
        p = pulse_for_gate(X_GATE, 20.0, transmon_spectrum.transition(0, 1))
        h = drive_hamiltonian(transmon_spectrum, p, d=4)
        assert h.dim == 4
        m = h.drive_op
        assert m[0, 1] == pytest.approx(1.0, rel=1e-12)
        assert m[1, 2] == pytest.approx(TRANSMON_N12, rel=1e-9)
        assert m[2, 3] == pytest.approx(TRANSMON_N23, rel=1e-9)
        assert m[0, 3] == pytest.approx(TRANSMON_N03, rel=1e-9)
        # charge couples only opposite-parity states
        assert abs(m[0, 2]) < 1e-12 and abs(m[1, 3]) < 1e-12
        np.testing.assert_allclose(m, m.T, atol=1e-12)
        np.testing.assert_array_equal(h.static,
                                      transmon_spectrum.levels[:4])
        assert h.epsilon == pytest.approx(
            math.pi * 1e9 * transmon_spectrum.transition(0, 1), rel=1e-12)

    def test_fluxonium_coupling_ratios(self, fluxonium_spectrum):
        p = pulse_for_gate(X_GATE, 62.0, fluxonium_spectrum.transition(0, 1))
        h = drive_hamiltonian(fluxonium_spectrum, p, d=4)
        m = h.drive_op
        # the raw oscillator-basis charge matrix is imaginary; the gauge
        # rotation must leave a real matrix with <0|N|1> = 1
        assert np.isrealobj(m) or np.max(np.abs(np.imag(m))) < 1e-12
        assert m[0, 1] == pytest.approx(1.0, rel=1e-12)
        assert m[1, 2] == pytest.approx(FLUXONIUM_N12, rel=1e-9)
        assert m[2, 3] == pytest.approx(FLUXONIUM_N23, rel=1e-9)
        assert m[0, 3] == pytest.approx(FLUXONIUM_N03, rel=1e-9)
        assert abs(m[0, 2]) < 1e-12 and abs(m[1, 3]) < 1e-12

    def test_dimension_validation(self, transmon_spectrum):
        p = pulse_for_gate(X_GATE, 20.0, 4.0)
        with pytest.raises(ValueError, match="exceeds"):
            drive_hamiltonian(transmon_spectrum, p, d=1000)
        with pytest.raises(ValueError, match="at least 2"):
            drive_hamiltonian(transmon_spectrum, p, d=1)


class TestRotatingFrame:
    def test_resonant_two_level_static_vanishes(self, transmon_spectrum):
        w01 = transmon_spectrum.transition(0, 1)
        p = pulse_for_gate(X_GATE, 20.0, w01)
        h = drive_hamiltonian(transmon_spectrum, p, d=2)
        ham = rotating_frame(h, rwa=True)
        assert abs(ham(10.0)[0, 0]) < 1e-12
        assert abs(ham(10.0)[1, 1]) < 1e-12

    def test_resonant_pi_pulse_inverts_population(self, transmon_spectrum):
        w01 = transmon_spectrum.transition(0, 1)
        p = pulse_for_gate(X_GATE, 20.0, w01)
        h = drive_hamiltonian(transmon_spectrum, p, d=2)
        out = piecewise_expm_evolve(ground_state(2), rotating_frame(h),
                                    [], 0.0, 20.0, 4000)
        assert out[1, 1].real == pytest.approx(1.0, abs=1e-9)

    def test_exact_frame_matches_lab_frame(self, transmon_spectrum):
        # rwa=False is a frame change, not an approximation: populations
        # must match the explicit lab-frame Hamiltonian
        w01 = transmon_spectrum.transition(0, 1)
        p = pulse_for_gate(X_GATE, 20.0, w01)
        h = drive_hamiltonian(transmon_spectrum, p, d=4)
        k = np.arange(4, dtype=float)
        w_d = 2.0 * math.pi * h.omega_d

        def lab_ham(t):
            gi, gq = h.envelope(t)
            u = (gi * math.cos(w_d * t) - gq * math.sin(w_d * t)) * 1e-9
            return np.diag(2.0 * math.pi * h.static).astype(complex) + \
                u * h.drive_op

        rho_lab = piecewise_expm_evolve(ground_state(4), lab_ham, [],
                                        0.0, 20.0, 8000)
        rho_rot = piecewise_expm_evolve(ground_state(4),
                                        rotating_frame(h, rwa=False), [],
                                        0.0, 20.0, 8000)
        np.testing.assert_allclose(np.diag(rho_rot), np.diag(rho_lab),
                                   atol=1e-5)

    def test_rwa_close_to_exact_frame(self, transmon_spectrum):
        w01 = transmon_spectrum.transition(0, 1)
        p = pulse_for_gate(X_GATE, 20.0, w01)
        h = drive_hamiltonian(transmon_spectrum, p, d=4)
        rho_rwa = piecewise_expm_evolve(ground_state(4),
                                        rotating_frame(h, rwa=True), [],
                                        0.0, 20.0, 2000)
        rho_rot = piecewise_expm_evolve(ground_state(4),
                                        rotating_frame(h, rwa=False), [],
                                        0.0, 20.0, 8000)
        np.testing.assert_allclose(np.diag(rho_rwa), np.diag(rho_rot),
                                   atol=1e-3)

    def test_carrier_phase_shifts_rotation_axis(self, transmon_spectrum):
        # a pi/2 carrier phase turns an x rotation into a y rotation; the
        # excited population of a half-pi pulse from |0> is phase-invariant
        w01 = transmon_spectrum.transition(0, 1)
        p = pulse_for_gate(HADAMARD_GATE, 20.0, w01)
        h = drive_hamiltonian(transmon_spectrum, p, d=2)
        outs = [piecewise_expm_evolve(ground_state(2),
                                      rotating_frame(h, phase=ph), [],
                                      0.0, 20.0, 2000)
                for ph in (0.0, 0.5 * math.pi)]
        assert outs[0][1, 1].real == pytest.approx(0.5, abs=1e-6)
        assert outs[1][1, 1].real == pytest.approx(0.5, abs=1e-6)
        # coherences differ by the phase factor
        assert outs[0][0, 1] == pytest.approx(
            outs[1][0, 1] * np.exp(-0.5j * math.pi), abs=1e-6)


class TestRabiFormula:
    def test_values(self):
        assert rabi_population(0.0) == -1.0
        assert rabi_population(math.pi) == pytest.approx(1.0)
        assert rabi_population(math.pi / 2.0) == pytest.approx(0.0, abs=1e-12)

    @given(st.floats(0.0, 4.0 * math.pi))
    @settings(max_examples=30, deadline=None)
    def test_bounds(self, x):
        assert -1.0 <= rabi_population(x) <= 1.0


class TestStateFidelity:
    def test_pure_state_overlap(self):
        psi = np.array([1.0, 0.0], dtype=complex)
        phi = np.array([math.cos(0.3), math.sin(0.3)], dtype=complex)
        rho = np.outer(psi, psi.conj())
        chi = np.outer(phi, phi.conj())
        assert state_fidelity(rho, chi) == pytest.approx(
            abs(np.vdot(psi, phi)) ** 2, rel=1e-12)

    def test_identical_and_orthogonal(self):
        rho = np.diag([1.0, 0.0]).astype(complex)
        chi = np.diag([0.0, 1.0]).astype(complex)
        assert state_fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)
        assert state_fidelity(rho, chi) == pytest.approx(0.0, abs=1e-12)

    def test_mixed_against_pure(self):
        rho = 0.5 * np.eye(2, dtype=complex)
        chi = np.diag([1.0, 0.0]).astype(complex)
        assert state_fidelity(rho, chi) == pytest.approx(0.5, rel=1e-12)

    def test_symmetry(self):
        rho = np.array([[0.7, 0.2], [0.2, 0.3]], dtype=complex)
        chi = np.array([[0.4, -0.1j], [0.1j, 0.6]], dtype=complex)
        assert state_fidelity(rho, chi) == pytest.approx(
            state_fidelity(chi, rho), rel=1e-12)

    def test_rejects_invalid_density_matrices(self):
        good = np.diag([1.0, 0.0]).astype(complex)
        with pytest.raises(ValueError, match="unit trace"):
            state_fidelity(2.0 * good, good)
        with pytest.raises(ValueError, match="hermiticity"):
            state_fidelity(np.array([[1.0, 0.5], [0.0, 0.0]], dtype=complex),
                           good)
        with pytest.raises(ValueError, match="positive semidefiniteness"):
            state_fidelity(np.diag([1.5, -0.5]).astype(complex), good)

    @given(st.integers(0, 10 ** 9))
    @settings(max_examples=40, deadline=None)
    def test_random_pure_overlaps(self, seed):
        rng = np.random.default_rng(seed)
        psi = rng.normal(size=3) + 1j * rng.normal(size=3)
        phi = rng.normal(size=3) + 1j * rng.normal(size=3)
        psi /= np.linalg.norm(psi)
        phi /= np.linalg.norm(phi)
        rho = np.outer(psi, psi.conj())
        chi = np.outer(phi, phi.conj())
        assert state_fidelity(rho, chi) == pytest.approx(
            abs(np.vdot(psi, phi)) ** 2, abs=1e-8)
