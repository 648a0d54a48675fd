"""Superconducting-qubit design pipeline: circuit electrostatics, qubit
spectra, coherence estimation, pulse calibration, and gate benchmarking."""

from .spectra import (TransmonParams, FluxoniumParams, EnergySpectrum,
                      QubitProfile, ConvergenceError, transmon_spectrum,
                      fluxonium_spectrum, spectrum_of, qubit_profile,
                      charge_dispersion_decay, flux_sweep, wavefunction)
from .em import (ConductorLayout, PotentialGrid, MaxwellCapacitanceMatrix,
                 JunctionBranch, load_layout, solve_poisson,
                 maxwell_capacitance, reduce_capacitance,
                 differential_capacitance, effective_charging_energy,
                 capacitance_for_charging_energy, junction_current,
                 exact_josephson_energy, josephson_energy_series)
from .noise import (NoiseChannelSpec, DephasingContext, CoherenceReport,
                    psd, charge_matrix_element, phase_matrix_element,
                    t1_rate, tphi_rate, t_phi_from_t1_t2,
                    effective_coherence, coherence_sweep, default_channels)
from .control import (GateSpec, PulseSpec, DriveHamiltonian, X_GATE,
                      HADAMARD_GATE, universal_gate, embed_unitary,
                      pulse_for_gate, gaussian_envelope, gaussian_area,
                      drag_envelope, drive_hamiltonian, rotating_frame,
                      rabi_population, state_fidelity)
from .dynamics import (CollapseSet, EvolutionResult, thermal_state,
                       transition_rates, lindblad_evolve, propagate_pulse,
                       default_steps_per_ns)
from .calibrate import (DeviceModel, CalibrationConfig, CalibrationResult,
                        BenchmarkResult, build_device, gate_target,
                        run_gate, gate_fidelity, calibrate_pulse,
                        optimize_drag, benchmark_gate, fit_exponential,
                        coherence_budget)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
