"""Pulse calibration and gate benchmarking on a noisy device model.

A gate run prepares the thermal state, drives the lab-frame Lindblad model
with a truncated-Gaussian (optionally DRAG-corrected) pulse, moves to the
frame rotating at the drive and applies the virtual-Z phases, then scores
the result against the ideal gate applied to the same thermal state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import curve_fit

from .control import (GateSpec, PulseSpec, drive_hamiltonian, embed_unitary,
                      pulse_for_gate, state_fidelity, universal_gate)
from .dynamics import (CollapseSet, propagate_pulse, thermal_state,
                       transition_rates)
from .noise import (DephasingContext, default_channels, effective_coherence,
                    t_phi_from_t1_t2)
from .spectra import (FluxoniumParams, TransmonParams, spectrum_of,
                      EnergySpectrum)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class DeviceModel:
    """Spectrum plus Lindblad rates and the bookkeeping needed to score and
    budget gates."""
    params: Union[TransmonParams, FluxoniumParams]
    spectrum: EnergySpectrum
    collapse: CollapseSet
    temperature: float
    t1_eff_us: float
    t2_eff_us: float
    dim: int = 4

    @property
    def omega01(self) -> float:
        return self.spectrum.transition(0, 1)


def build_device(params, channels=None, context: Optional[DephasingContext]
                 = None, t1_eff_us: Optional[float] = None,
                 t2_eff_us: Optional[float] = None, dim: int = 4):
    """Device model from circuit parameters.  Coherence times come from the
    noise channel budget unless explicit overrides are given."""
    spectrum = spectrum_of(params)
    ctx = context if context is not None else DephasingContext()
    if t1_eff_us is None or t2_eff_us is None:
        if channels is None:
            channels = default_channels(params)
        report = effective_coherence(channels, spectrum, ctx)
        if t1_eff_us is None:
            t1_eff_us = report.t1_eff
        if t2_eff_us is None:
            t2_eff_us = report.t2_eff
    if t1_eff_us <= 0.0 or t2_eff_us <= 0.0:
        raise ValueError("effective coherence times must be positive")
    if t2_eff_us > 2.0 * t1_eff_us + 1e-9:
        raise ValueError("t2_eff cannot exceed 2 t1_eff")
    t_phi_us = t_phi_from_t1_t2(t1_eff_us, t2_eff_us)
    gamma_phi = 0.0 if math.isinf(t_phi_us) else 1e6 / t_phi_us
    two_level = thermal_state(np.array([0.0, spectrum.transition(0, 1)]),
                              ctx.temperature)
    gamma_down, gamma_up = transition_rates(float(two_level[1, 1].real),
                                            t1_eff_us * 1e-6)
    return DeviceModel(params=params, spectrum=spectrum,
                       collapse=CollapseSet(gamma_down=gamma_down,
                                            gamma_up=gamma_up,
                                            gamma_phi=gamma_phi),
                       temperature=ctx.temperature, t1_eff_us=t1_eff_us,
                       t2_eff_us=t2_eff_us, dim=dim)


def gate_target(device: DeviceModel, gate: GateSpec) -> np.ndarray:
    """Ideal gate applied to the thermal state (nominal angles)."""
    u = embed_unitary(universal_gate(gate), device.dim)
    rho0 = thermal_state(device.spectrum, device.temperature, device.dim)
    return u @ rho0 @ u.conj().T


def _frame_and_virtual_z(rho: np.ndarray, gate: GateSpec, pulse: PulseSpec,
                         dim: int) -> np.ndarray:
    k = np.arange(dim, dtype=float)
    w = np.exp(1j * 2.0 * math.pi * pulse.omega_d * pulse.tau * k)
    z = np.exp(1j * (gate.phi + gate.lam + pulse.delta_zeta) * k)
    g = w * z
    return (g[:, None] * rho) * np.conj(g)[None, :]


def run_gate(device: DeviceModel, gate: GateSpec, pulse: PulseSpec,
             rho: Optional[np.ndarray] = None,
             steps_per_ns: Optional[int] = None,
             drive=None) -> Tuple[np.ndarray, float]:
    """One driven gate: lab-frame propagation from rho (thermal by default),
    then the rotating-frame and virtual-Z corrections.  Returns
    (rho_final, trace_drift)."""
    if drive is None:
        drive = drive_hamiltonian(device.spectrum, pulse, device.dim)
    if rho is None:
        rho = thermal_state(device.spectrum, device.temperature, device.dim)
    phi_c = gate.lam + pulse.delta_zeta - 0.5 * math.pi
    rho, drift, _ = propagate_pulse(drive, device.collapse, rho,
                                    carrier_phase=phi_c,
                                    steps_per_ns=steps_per_ns)
    return _frame_and_virtual_z(rho, gate, pulse, device.dim), drift


def gate_fidelity(device: DeviceModel, gate: GateSpec, pulse: PulseSpec,
                  steps_per_ns: Optional[int] = None) -> float:
    rho, _ = run_gate(device, gate, pulse, steps_per_ns=steps_per_ns)
    return state_fidelity(rho, gate_target(device, gate))


@dataclass
class CalibrationConfig:
    tau_grid: Tuple[float, float, float] = (20.0, 40.0, 2.0)
    dzeta_grid: Tuple[float, float, float] = (-0.05, 0.05, 0.01)
    max_outer_iterations: int = 4
    tolerance: float = 1e-7
    shrink: float = 0.2         # grid half-width factor per refinement pass
    refine_points: int = 9
    steps_per_ns: Optional[int] = None

    def __post_init__(self):
        for lo, hi, step in (self.tau_grid, self.dzeta_grid):
            if hi < lo or step <= 0.0:
                raise ValueError("grid must satisfy min <= max, step > 0")
        if not 0.0 < self.shrink <= 1.0:
            raise ValueError("shrink must lie in (0, 1]")
        if self.max_outer_iterations < 0:
            raise ValueError("max_outer_iterations must be nonnegative")
        if self.refine_points < 3:
            raise ValueError("refine_points must be at least 3")


@dataclass
class CalibrationResult:
    gate: GateSpec
    tau_star: float             # ns
    delta_zeta_star: float      # rad
    beta: float
    fidelity: float
    epsilon: float              # 1 - fidelity
    budget: Optional[int] = None
    history: list = field(default_factory=list)

    def pulse(self, omega_d: float) -> PulseSpec:
        return pulse_for_gate(self.gate, self.tau_star, omega_d,
                              delta_zeta=self.delta_zeta_star,
                              beta=self.beta)


def _grid_values(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(round((hi - lo) / step)) + 1 if hi > lo else 1
    return lo + step * np.arange(n)


def calibrate_pulse(device: DeviceModel, gate: GateSpec,
                    config: Optional[CalibrationConfig] = None,
                    beta: float = 0.0) -> CalibrationResult:
    """Alternating duration and detuning-shift sweeps with shrinking grids.

    The first pass sweeps tau at delta_zeta = 0, then delta_zeta at the best
    tau.  Each refinement pass re-sweeps both on grids shrunk around the
    incumbent (clipped to the original bounds); the best point seen is never
    discarded.  Raises if no point reaches fidelity 0.5."""
    cfg = config if config is not None else CalibrationConfig()
    omega_d = device.omega01

    def score(tau: float, dz: float) -> float:
        pulse = pulse_for_gate(gate, tau, omega_d, delta_zeta=dz, beta=beta)
        return gate_fidelity(device, gate, pulse,
                             steps_per_ns=cfg.steps_per_ns)

    history = []

    def sweep(taus, dzs, best):
        for tau in taus:
            for dz in dzs:
                f = score(float(tau), float(dz))
                history.append((float(tau), float(dz), f))
                if f > best[2]:
                    best = (float(tau), float(dz), f)
        return best

    t_lo, t_hi, t_step = cfg.tau_grid
    z_lo, z_hi, z_step = cfg.dzeta_grid
    best = (math.nan, math.nan, -1.0)
    best = sweep(_grid_values(t_lo, t_hi, t_step), [0.0], best)
    best = sweep([best[0]], _grid_values(z_lo, z_hi, z_step), best)
    if best[2] <= 0.5:
        raise RuntimeError("calibration failed: no grid point exceeds "
                           f"fidelity 0.5 (best {best[2]:.4f})")

    t_half = 0.5 * (t_hi - t_lo)
    z_half = 0.5 * (z_hi - z_lo)
    for _ in range(cfg.max_outer_iterations):
        t_half *= cfg.shrink
        z_half *= cfg.shrink
        prev = best[2]
        taus = np.clip(np.linspace(best[0] - t_half, best[0] + t_half,
                                   cfg.refine_points), t_lo, t_hi)
        best = sweep(np.unique(taus), [best[1]], best)
        dzs = np.clip(np.linspace(best[1] - z_half, best[1] + z_half,
                                  cfg.refine_points), z_lo, z_hi)
        best = sweep([best[0]], np.unique(dzs), best)
        if best[2] - prev < cfg.tolerance:
            break

    budget = coherence_budget(device.t1_eff_us, device.t2_eff_us, best[0])
    return CalibrationResult(gate=gate, tau_star=best[0],
                             delta_zeta_star=best[1], beta=beta,
                             fidelity=best[2], epsilon=1.0 - best[2],
                             budget=budget, history=history)


def optimize_drag(device: DeviceModel, gate: GateSpec,
                  result: CalibrationResult,
                  beta_grid: Sequence[float],
                  tolerance: float = 1e-3,
                  steps_per_ns: Optional[int] = None) -> CalibrationResult:
    """Sweep the DRAG coefficient at the calibrated (tau, delta_zeta), then
    refine the best point by golden-section search.  The refined value may
    not score below the uncorrected pulse."""
    beta_grid = np.asarray(list(beta_grid), dtype=float)
    if beta_grid.size < 3:
        raise ValueError("beta_grid needs at least 3 points")
    omega_d = device.omega01

    def score(b: float) -> float:
        pulse = pulse_for_gate(gate, result.tau_star, omega_d,
                               delta_zeta=result.delta_zeta_star, beta=b)
        return gate_fidelity(device, gate, pulse, steps_per_ns=steps_per_ns)

    f_grid = np.array([score(b) for b in beta_grid])
    i = int(np.argmax(f_grid))
    best_b, best_f = float(beta_grid[i]), float(f_grid[i])

    lo = float(beta_grid[max(i - 1, 0)])
    hi = float(beta_grid[min(i + 1, beta_grid.size - 1)])
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = score(x1), score(x2)
    while hi - lo > tolerance:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = score(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = score(x1)
        for x, f in ((x1, f1), (x2, f2)):
            if f > best_f:
                best_b, best_f = float(x), float(f)

    f_zero = score(0.0) if 0.0 not in beta_grid else \
        float(f_grid[np.where(beta_grid == 0.0)[0][0]])
    if best_f < f_zero:
        raise RuntimeError("DRAG refinement lost to the uncorrected pulse "
                           f"({best_f:.6f} < {f_zero:.6f})")
    return replace(result, beta=best_b, fidelity=best_f,
                   epsilon=1.0 - best_f)


@dataclass
class BenchmarkResult:
    gate_counts: np.ndarray     # 0..n_gates
    populations: np.ndarray     # (n_gates + 1, d) occupations after k gates
    amplitude: float            # fitted A of A exp(rate n) + y0
    rate: float
    offset: float
    epsilon: float              # |rate|
    trace_drift: float


def fit_exponential(counts: np.ndarray, values: np.ndarray
                    ) -> Tuple[float, float, float]:
    """Least-squares fit of values = a exp(rate * counts) + y0, seeded by a
    log-linear estimate.  Raises on divergence."""
    counts = np.asarray(counts, dtype=float)
    values = np.asarray(values, dtype=float)
    if counts.shape != values.shape or counts.size < 3:
        raise ValueError("need at least 3 matched samples")
    if np.ptp(values) < 1e-12:
        return 0.0, 0.0, float(values.mean())
    y0 = float(values[-1])
    a0 = float(values[0] - y0)
    if abs(a0) < 1e-12:
        a0 = float(np.ptp(values))
    span = max(float(counts[-1] - counts[0]), 1.0)
    mid = values[counts.size // 2] - y0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = mid / a0
        r0 = math.log(ratio) / float(counts[counts.size // 2]) \
            if ratio > 0 else -1.0 / span
    try:
        popt, _ = curve_fit(lambda n, a, r, c: a * np.exp(r * n) + c,
                            counts, values, p0=(a0, r0, y0), maxfev=20000)
    except RuntimeError as exc:
        raise RuntimeError(f"exponential fit diverged: {exc}") from exc
    if not np.all(np.isfinite(popt)):
        resid = float(np.max(np.abs(values - values.mean())))
        raise RuntimeError("exponential fit produced non-finite parameters "
                           f"(max residual {resid:.3e})")
    return float(popt[0]), float(popt[1]), float(popt[2])


def benchmark_gate(device: DeviceModel, gate: GateSpec, pulse: PulseSpec,
                   n_gates: int, steps_per_ns: Optional[int] = None,
                   fit_counts: str = "even") -> BenchmarkResult:
    """Apply the calibrated gate n_gates times back to back from the thermal
    state, record occupations after every gate, and fit the ground-state
    return probability with a single exponential."""
    if n_gates < 50:
        raise ValueError("n_gates must be at least 50")
    if fit_counts not in ("even", "all"):
        raise ValueError("fit_counts must be 'even' or 'all'")
    d = device.dim
    drive = drive_hamiltonian(device.spectrum, pulse, d)
    rho = thermal_state(device.spectrum, device.temperature, d)
    pops = np.empty((n_gates + 1, d))
    pops[0] = np.diag(rho).real
    drift_max = 0.0
    for k in range(n_gates):
        rho, drift = run_gate(device, gate, pulse, rho=rho,
                              steps_per_ns=steps_per_ns, drive=drive)
        drift_max = max(drift_max, drift)
        pops[k + 1] = np.diag(rho).real
    counts = np.arange(n_gates + 1)
    sel = counts % 2 == 0 if fit_counts == "even" else slice(None)
    a, rate, y0 = fit_exponential(counts[sel], pops[sel, 0])
    return BenchmarkResult(gate_counts=counts, populations=pops,
                           amplitude=a, rate=rate, offset=y0,
                           epsilon=abs(rate), trace_drift=drift_max)


def coherence_budget(t1_eff_us: float, t2_eff_us: float, tau_ns: float,
                     rounding: str = "nearest") -> int:
    """Gate count supported by the limiting coherence time,
    min(T1, T2) / tau.  Rounds to nearest by default; 'floor' truncates."""
    if t1_eff_us <= 0.0 or t2_eff_us <= 0.0 or tau_ns <= 0.0:
        raise ValueError("coherence times and tau must be positive")
    n = min(t1_eff_us, t2_eff_us) * 1e3 / tau_ns
    if rounding == "nearest":
        return int(round(n))
    if rounding == "floor":
        return int(math.floor(n))
    raise ValueError("rounding must be 'nearest' or 'floor'")
