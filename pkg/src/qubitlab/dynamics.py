"""Open-system time evolution: thermal states, collapse operators, and a
fixed-step RK4 Lindblad integrator (lab frame or rotating frame).

Internal units: time in ns, energies in rad/ns, collapse operators in
1/sqrt(ns).  Rates at the API boundary are 1/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from numba import njit

from .constants import H_PLANCK, K_BOLTZMANN, GHZ
from .control import DriveHamiltonian, _check_density_matrix, rotating_frame
from .spectra import EnergySpectrum

TRACE_TOL = 1e-6


@dataclass(frozen=True)
class CollapseSet:
    """Relaxation, excitation, and pure-dephasing rates (1/s)."""
    gamma_down: float = 0.0
    gamma_up: float = 0.0
    gamma_phi: float = 0.0

    def __post_init__(self):
        for name in ("gamma_down", "gamma_up", "gamma_phi"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")

    def operators(self, d: int) -> Tuple[np.ndarray, np.ndarray]:
        """Collapse operators (stacked) and sum_k L_k^dag L_k, in 1/sqrt(ns)
        and 1/ns.  Lowering/raising use the sqrt(k) ladder; dephasing acts
        on the qubit subspace as sqrt(2 gamma_phi) |1><1|."""
        a = np.zeros((d, d), dtype=complex)
        for k in range(d - 1):
            a[k, k + 1] = math.sqrt(k + 1.0)
        deph = np.zeros((d, d), dtype=complex)
        deph[1, 1] = 1.0
        ops = np.stack([
            math.sqrt(self.gamma_down * 1e-9) * a,
            math.sqrt(self.gamma_up * 1e-9) * a.conj().T,
            math.sqrt(2.0 * self.gamma_phi * 1e-9) * deph,
        ])
        ldl = np.zeros((d, d), dtype=complex)
        for op in ops:
            ldl += op.conj().T @ op
        return ops, ldl


@dataclass
class EvolutionResult:
    times: np.ndarray           # sample times (ns), snapped to the step grid
    populations: np.ndarray     # (len(times), d) diagonal occupations
    rho: np.ndarray             # final density matrix
    trace_drift: float          # max |tr(rho) - 1| seen during the run


def thermal_state(levels: Union[EnergySpectrum, np.ndarray],
                  temperature: float, d: Optional[int] = None) -> np.ndarray:
    """Gibbs state diag(e^{-h E_k / k_B T}) / Z over the first d levels
    (energies in GHz)."""
    if isinstance(levels, EnergySpectrum):
        levels = levels.levels
    e = np.asarray(levels, dtype=float)
    if d is not None:
        e = e[:d]
    if temperature < 0.0:
        raise ValueError("temperature must be nonnegative")
    if temperature == 0.0:
        w = np.zeros(len(e))
        w[np.argmin(e)] = 1.0
    else:
        x = -H_PLANCK * (e - e.min()) * GHZ / (K_BOLTZMANN * temperature)
        w = np.exp(x)
        w /= w.sum()
    return np.diag(w.astype(complex))


def transition_rates(excited_population: float,
                     t1_eff_s: float) -> Tuple[float, float]:
    """(gamma_down, gamma_up) in 1/s from the qubit thermal excited-state
    occupation and the effective relaxation time (seconds).  The pair sums
    to 1/T1 and its ratio obeys detailed balance for the given occupation."""
    if not 0.0 <= excited_population < 1.0:
        raise ValueError("excited_population must lie in [0, 1)")
    if t1_eff_s <= 0.0:
        raise ValueError("t1_eff_s must be positive")
    return ((1.0 - excited_population) / t1_eff_s,
            excited_population / t1_eff_s)


@njit(cache=True)
def _rk4_lab(rho, h0, dop, envi, envq, omega_d, phi_c, t0, h, nsteps,
             c_ops, ldl, rec_steps, pops):
    """In-place RK4 of the Lindblad equation with H(t) = diag(h0)
    + [gi cos(w t + phi) - gq sin(w t + phi)] dop.  Envelopes are sampled
    at half steps (2*nsteps + 1 values).  Returns max |tr(rho) - 1|."""
    dd = rho.shape[0]
    k1 = np.empty((dd, dd), np.complex128)
    tmp = np.empty((dd, dd), np.complex128)
    acc = np.empty((dd, dd), np.complex128)
    r2 = np.empty((dd, dd), np.complex128)

    def _rhs(r, u, out):
        for a in range(dd):
            for b in range(dd):
                s = 0j
                for c in range(dd):
                    hac = dop[a, c] * u
                    hcb = dop[c, b] * u
                    if a == c:
                        hac += h0[a]
                    if c == b:
                        hcb += h0[c]
                    s += hac * r[c, b] - r[a, c] * hcb
                out[a, b] = -1j * s
        for k in range(c_ops.shape[0]):
            L = c_ops[k]
            for a in range(dd):
                for b in range(dd):
                    s = 0j
                    for c in range(dd):
                        s += L[a, c] * r[c, b]
                    tmp[a, b] = s
            for a in range(dd):
                for b in range(dd):
                    s = 0j
                    for c in range(dd):
                        s += tmp[a, c] * np.conj(L[b, c])
                    out[a, b] += s
        for a in range(dd):
            for b in range(dd):
                s = 0j
                for c in range(dd):
                    s += ldl[a, c] * r[c, b] + r[a, c] * ldl[c, b]
                out[a, b] -= 0.5 * s

    max_drift = 0.0
    rec = 0
    if rec < rec_steps.size and rec_steps[rec] == 0:
        for a in range(dd):
            pops[rec, a] = rho[a, a].real
        rec += 1
    for i in range(nsteps):
        t = t0 + i * h
        u0 = envi[2 * i] * np.cos(omega_d * t + phi_c) \
            - envq[2 * i] * np.sin(omega_d * t + phi_c)
        um = envi[2 * i + 1] * np.cos(omega_d * (t + 0.5 * h) + phi_c) \
            - envq[2 * i + 1] * np.sin(omega_d * (t + 0.5 * h) + phi_c)
        u1 = envi[2 * i + 2] * np.cos(omega_d * (t + h) + phi_c) \
            - envq[2 * i + 2] * np.sin(omega_d * (t + h) + phi_c)

        _rhs(rho, u0, k1)
        for a in range(dd):
            for b in range(dd):
                r2[a, b] = rho[a, b] + 0.5 * h * k1[a, b]
                acc[a, b] = k1[a, b]
        _rhs(r2, um, k1)
        for a in range(dd):
            for b in range(dd):
                r2[a, b] = rho[a, b] + 0.5 * h * k1[a, b]
                acc[a, b] += 2.0 * k1[a, b]
        _rhs(r2, um, k1)
        for a in range(dd):
            for b in range(dd):
                r2[a, b] = rho[a, b] + h * k1[a, b]
                acc[a, b] += 2.0 * k1[a, b]
        _rhs(r2, u1, k1)
        for a in range(dd):
            for b in range(dd):
                rho[a, b] = rho[a, b] + (h / 6.0) * (acc[a, b] + k1[a, b])
        tr = 0.0
        for a in range(dd):
            tr += rho[a, a].real
        drift = abs(tr - 1.0)
        if drift > max_drift:
            max_drift = drift
        if rec < rec_steps.size and rec_steps[rec] == i + 1:
            for a in range(dd):
                pops[rec, a] = rho[a, a].real
            rec += 1
    return max_drift


@njit(cache=True)
def _rk4_dense(rho, ham, h, nsteps, c_ops, ldl, rec_steps, pops):
    """Same integrator with the Hamiltonian given as precomputed half-step
    samples ham[(2*nsteps + 1), d, d] (rad/ns)."""
    dd = rho.shape[0]
    k1 = np.empty((dd, dd), np.complex128)
    tmp = np.empty((dd, dd), np.complex128)
    acc = np.empty((dd, dd), np.complex128)
    r2 = np.empty((dd, dd), np.complex128)

    def _rhs(r, hm, out):
        for a in range(dd):
            for b in range(dd):
                s = 0j
                for c in range(dd):
                    s += hm[a, c] * r[c, b] - r[a, c] * hm[c, b]
                out[a, b] = -1j * s
        for k in range(c_ops.shape[0]):
            L = c_ops[k]
            for a in range(dd):
                for b in range(dd):
                    s = 0j
                    for c in range(dd):
                        s += L[a, c] * r[c, b]
                    tmp[a, b] = s
            for a in range(dd):
                for b in range(dd):
                    s = 0j
                    for c in range(dd):
                        s += tmp[a, c] * np.conj(L[b, c])
                    out[a, b] += s
        for a in range(dd):
            for b in range(dd):
                s = 0j
                for c in range(dd):
                    s += ldl[a, c] * r[c, b] + r[a, c] * ldl[c, b]
                out[a, b] -= 0.5 * s

    max_drift = 0.0
    rec = 0
    if rec < rec_steps.size and rec_steps[rec] == 0:
        for a in range(dd):
            pops[rec, a] = rho[a, a].real
        rec += 1
    for i in range(nsteps):
        _rhs(rho, ham[2 * i], k1)
        for a in range(dd):
            for b in range(dd):
                r2[a, b] = rho[a, b] + 0.5 * h * k1[a, b]
                acc[a, b] = k1[a, b]
        _rhs(r2, ham[2 * i + 1], k1)
        for a in range(dd):
            for b in range(dd):
                r2[a, b] = rho[a, b] + 0.5 * h * k1[a, b]
                acc[a, b] += 2.0 * k1[a, b]
        _rhs(r2, ham[2 * i + 1], k1)
        for a in range(dd):
            for b in range(dd):
                r2[a, b] = rho[a, b] + h * k1[a, b]
                acc[a, b] += 2.0 * k1[a, b]
        _rhs(r2, ham[2 * i + 2], k1)
        for a in range(dd):
            for b in range(dd):
                rho[a, b] = rho[a, b] + (h / 6.0) * (acc[a, b] + k1[a, b])
        tr = 0.0
        for a in range(dd):
            tr += rho[a, a].real
        drift = abs(tr - 1.0)
        if drift > max_drift:
            max_drift = drift
        if rec < rec_steps.size and rec_steps[rec] == i + 1:
            for a in range(dd):
                pops[rec, a] = rho[a, a].real
            rec += 1
    return max_drift


def default_steps_per_ns(h: DriveHamiltonian) -> int:
    """Step rule: at least 40 steps per period of the fastest frequency
    present (level energies and drive, GHz)."""
    f_max = max(float(np.max(np.abs(h.static))), abs(h.omega_d))
    return max(int(math.ceil(40.0 * f_max)), 40)


def _envelope_samples(h: DriveHamiltonian, t_grid: np.ndarray):
    """(in-phase, quadrature) envelopes in rad/ns, zero beyond the pulse."""
    gi = np.zeros_like(t_grid)
    gq = np.zeros_like(t_grid)
    inside = t_grid <= h.pulse.tau + 1e-12
    if np.any(inside):
        vi, vq = h.envelope(np.clip(t_grid[inside], 0.0, h.pulse.tau))
        gi[inside] = np.asarray(vi) * 1e-9
        gq[inside] = np.asarray(vq) * 1e-9
    return gi, gq


def propagate_pulse(h: DriveHamiltonian, collapse: CollapseSet,
                    rho: np.ndarray, carrier_phase: float = 0.0,
                    steps_per_ns: Optional[int] = None,
                    start_time: float = 0.0,
                    duration: Optional[float] = None,
                    rec_steps: Optional[np.ndarray] = None,
                    pops: Optional[np.ndarray] = None,
                    rwa: bool = False) -> Tuple[np.ndarray, float, float]:
    """Integrate over [start_time, start_time + duration] and return
    (rho_final, trace_drift, step).  Trace drift above 1e-6 raises."""
    if steps_per_ns is None:
        steps_per_ns = default_steps_per_ns(h)
    if duration is None:
        duration = h.pulse.tau
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    nsteps = max(int(round(duration * steps_per_ns)), 1)
    step = duration / nsteps
    half_grid = start_time + np.linspace(0.0, duration, 2 * nsteps + 1)
    c_ops, ldl = collapse.operators(h.dim)
    if rec_steps is None:
        rec_steps = np.empty(0, dtype=np.int64)
        pops = np.empty((0, h.dim), dtype=np.float64)
    rho = np.array(rho, dtype=complex, order="C", copy=True)
    if rwa:
        ham_fn = rotating_frame(h, rwa=True, phase=carrier_phase)
        ham = np.empty((2 * nsteps + 1, h.dim, h.dim), dtype=complex)
        for i, t in enumerate(half_grid):
            ham[i] = ham_fn(t)
        drift = _rk4_dense(rho, ham, step, nsteps, c_ops, ldl,
                           rec_steps, pops)
    else:
        gi, gq = _envelope_samples(h, half_grid)
        drift = _rk4_lab(rho, 2.0 * math.pi * h.static.astype(float),
                         h.drive_op.astype(complex), gi, gq,
                         2.0 * math.pi * h.omega_d, carrier_phase,
                         start_time, step, nsteps, c_ops, ldl,
                         rec_steps, pops)
    if drift > TRACE_TOL:
        raise RuntimeError(
            f"trace drift {drift:.3e} exceeds {TRACE_TOL:.0e}; "
            "reduce the step (raise steps_per_ns)")
    return rho, float(drift), step


def lindblad_evolve(h: DriveHamiltonian, collapse: CollapseSet,
                    rho0: np.ndarray, times: np.ndarray,
                    carrier_phase: float = 0.0, rwa: bool = False,
                    steps_per_ns: Optional[int] = None) -> EvolutionResult:
    """Evolve rho0 from times[0], recording level occupations at each sample
    time (snapped onto the integration grid)."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("times must contain at least two samples")
    if np.any(np.diff(times) <= 0.0):
        raise ValueError("times must be strictly increasing")
    _check_density_matrix(np.asarray(rho0, dtype=complex), "rho0")
    if rho0.shape != (h.dim, h.dim):
        raise ValueError(f"rho0 must be {h.dim}x{h.dim}")
    if steps_per_ns is None:
        steps_per_ns = default_steps_per_ns(h)
    t0, t1 = float(times[0]), float(times[-1])
    duration = t1 - t0
    nsteps = max(int(round(duration * steps_per_ns)), 1)
    step = duration / nsteps
    idx = np.unique(np.round((times - t0) / step).astype(np.int64))
    pops = np.empty((idx.size, h.dim), dtype=np.float64)
    rho, drift, step = propagate_pulse(
        h, collapse, rho0, carrier_phase=carrier_phase,
        steps_per_ns=steps_per_ns, start_time=t0, duration=duration,
        rec_steps=idx, pops=pops, rwa=rwa)
    return EvolutionResult(times=t0 + idx * step, populations=pops,
                           rho=rho, trace_drift=drift)
