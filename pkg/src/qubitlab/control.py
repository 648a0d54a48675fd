"""Gate targets, pulse envelopes, drive Hamiltonians, rotating frame,
the analytic Rabi formula, and state fidelity.

Envelope convention: the in-phase envelope is a truncated Gaussian centered
at tau/2 on [0, tau] with sigma = tau/4, rescaled to vanish exactly at both
endpoints and to peak at the requested amplitude.  The DRAG correction
beta * d(envelope)/dt (time in ns, beta dimensionless) rides on the
orthogonal drive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .constants import ghz_to_angular
from .spectra import EnergySpectrum

# integral of the unit-peak truncated Gaussian over [0, tau], per ns of sigma
AREA_UNIT = (math.sqrt(2.0 * math.pi) * math.erf(math.sqrt(2.0)) -
             4.0 * math.exp(-2.0)) / (1.0 - math.exp(-2.0))


@dataclass(frozen=True)
class GateSpec:
    theta: float
    phi: float
    lam: float


X_GATE = GateSpec(theta=math.pi, phi=0.0, lam=math.pi)
HADAMARD_GATE = GateSpec(theta=math.pi / 2.0, phi=0.0, lam=math.pi)


def universal_gate(g: GateSpec) -> np.ndarray:
    """U(theta, phi, lam) = R_z(phi) R_y(theta) R_z(lam) with
    R_j(a) = exp(-i a sigma_j / 2)."""
    ct, st = math.cos(g.theta / 2.0), math.sin(g.theta / 2.0)
    r_y = np.array([[ct, -st], [st, ct]], dtype=complex)

    def r_z(a: float) -> np.ndarray:
        return np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)])

    return r_z(g.phi) @ r_y @ r_z(g.lam)


def embed_unitary(u: np.ndarray, d: int) -> np.ndarray:
    """Embed a qubit unitary into the top-left block of a d-level identity."""
    full = np.eye(d, dtype=complex)
    full[:2, :2] = u
    return full


@dataclass(frozen=True)
class PulseSpec:
    amplitude: float            # peak Rabi amplitude (rad/s)
    tau: float                  # duration (ns)
    sigma: float                # Gaussian width (ns); tau = 4 sigma exactly
    delta_zeta: float = 0.0     # detuning shift applied to theta and lambda
    beta: float = 0.0           # DRAG coefficient (dimensionless)
    omega_d: float = 0.0        # drive frequency (GHz)
    quadrature: bool = True     # route the DRAG term to the other quadrature

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if abs(self.tau - 4.0 * self.sigma) > 1e-12 * self.tau:
            raise ValueError("tau = 4 sigma is required "
                             f"(tau={self.tau}, sigma={self.sigma})")


def pulse_for_gate(gate: GateSpec, tau: float, omega_d: float,
                   delta_zeta: float = 0.0, beta: float = 0.0) -> PulseSpec:
    """Pulse whose envelope area equals the (detuned) rotation angle
    theta + delta_zeta."""
    sigma = tau / 4.0
    amp_rad_ns = (gate.theta + delta_zeta) / (AREA_UNIT * sigma)
    return PulseSpec(amplitude=amp_rad_ns * 1e9, tau=tau, sigma=sigma,
                     delta_zeta=delta_zeta, beta=beta, omega_d=omega_d)


def gaussian_envelope(t: float, p: PulseSpec) -> float:
    """Truncated Gaussian (rad/s), zero at t = 0 and t = tau, peak at
    t = tau/2."""
    t = np.asarray(t, dtype=float)
    if np.any(t < -1e-12) or np.any(t > p.tau + 1e-12):
        raise ValueError(f"t outside [0, {p.tau}] ns")
    x = (t - 0.5 * p.tau) / p.sigma
    g = (np.exp(-0.5 * x * x) - math.exp(-2.0)) / (1.0 - math.exp(-2.0))
    return p.amplitude * g if g.ndim else float(p.amplitude * g)


def gaussian_area(p: PulseSpec) -> float:
    """Closed-form integral of the envelope over [0, tau] (rad, with the
    amplitude read in rad/ns)."""
    return p.amplitude * 1e-9 * AREA_UNIT * p.sigma


def drag_envelope(t: float, p: PulseSpec) -> Tuple[float, float]:
    """(in-phase, quadrature) envelope pair (rad/s).  The quadrature carries
    beta * d/dt of the Gaussian (analytic derivative, t in ns); with the
    quadrature flag cleared the correction is added in line instead."""
    g = gaussian_envelope(t, p)
    t = np.asarray(t, dtype=float)
    x = (t - 0.5 * p.tau) / p.sigma
    dg = p.amplitude * np.exp(-0.5 * x * x) / (1.0 - math.exp(-2.0)) * \
        (-x / p.sigma)
    q = p.beta * dg
    if not np.ndim(g):
        q = float(q)
    if p.quadrature:
        return g, q
    return g + q, 0.0 * q


@dataclass
class DriveHamiltonian:
    static: np.ndarray          # level energies (GHz), length d
    drive_op: np.ndarray        # coupling matrix, eigenbasis, <0|.|1> = 1
    envelope: Callable          # t (ns) -> (in-phase, quadrature) rad/s
    epsilon: float              # half transition frequency (rad/s)
    omega_d: float              # drive frequency (GHz)
    pulse: PulseSpec

    @property
    def dim(self) -> int:
        return len(self.static)


def _charge_matrix(spectrum: EnergySpectrum, d: int) -> np.ndarray:
    p = spectrum.params
    v = spectrum.states[:, :d]
    if spectrum.basis_tag == "charge":
        n = np.arange(-p.n_cut, p.n_cut + 1, dtype=float)
        return (v.T * n) @ v
    n_zpf = 1.0 / (2.0 * p.phi_zpf)
    k = np.sqrt(np.arange(1, spectrum.dim, dtype=float))
    a_on_v = np.zeros_like(v)
    a_on_v[:-1] = k[:, None] * v[1:]          # a |v>
    adag_on_v = np.zeros_like(v)
    adag_on_v[1:] = k[:, None] * v[:-1]       # a^dag |v>
    return 1j * n_zpf * (v.T @ (adag_on_v - a_on_v))


def _gauge_real(n_mat: np.ndarray) -> np.ndarray:
    """Rephase levels so adjacent elements are real and nonnegative."""
    d = n_mat.shape[0]
    gamma = np.zeros(d)
    for k in range(d - 1):
        el = n_mat[k, k + 1]
        gamma[k + 1] = gamma[k] + (np.angle(el) if abs(el) > 1e-14 else 0.0)
    g = np.exp(1j * gamma)
    out = (g[:, None] * n_mat) * np.conj(g)[None, :]
    if np.max(np.abs(out.imag)) > 1e-9 * max(np.max(np.abs(out)), 1e-300):
        raise RuntimeError("charge matrix could not be gauged real")
    return out.real


def drive_hamiltonian(spectrum: EnergySpectrum, p: PulseSpec,
                      d: int = 4) -> DriveHamiltonian:
    """Truncated driven qubit: static level energies plus the charge-coupled
    drive, with the coupling normalized so the 0-1 element is 1 (leakage
    ratios preserved)."""
    if d > spectrum.dim:
        raise ValueError(f"d={d} exceeds spectrum dimension {spectrum.dim}")
    if d < 2:
        raise ValueError("drive_hamiltonian needs at least 2 levels")
    n_mat = _gauge_real(np.asarray(_charge_matrix(spectrum, d),
                                   dtype=complex))
    n01 = n_mat[0, 1]
    if abs(n01) < 1e-14:
        raise RuntimeError("0-1 charge matrix element vanishes; the drive "
                           "cannot address the qubit transition")
    n_mat = n_mat / n01

    def envelope(t):
        return drag_envelope(t, p)

    return DriveHamiltonian(static=spectrum.levels[:d].copy(),
                            drive_op=n_mat, envelope=envelope,
                            epsilon=0.5 * ghz_to_angular(
                                spectrum.transition(0, 1)),
                            omega_d=p.omega_d, pulse=p)


def rotating_frame(h: DriveHamiltonian, rwa: bool = True,
                   phase: float = 0.0) -> Callable[[float], np.ndarray]:
    """Hamiltonian in the frame exp(-i w_d t diag(0..d-1)), returned as a
    callable t (ns) -> matrix (rad/ns).  With rwa=True counter-rotating
    terms are dropped; on resonance the two-level static part vanishes."""
    d = h.dim
    k = np.arange(d, dtype=float)
    w_d = 2.0 * math.pi * h.omega_d          # rad/ns
    static = 2.0 * math.pi * h.static - w_d * k

    if rwa:
        upper = np.triu(h.drive_op, 1) * (np.abs(
            np.subtract.outer(k, k)) == 1)[: d, : d]

        def ham(t: float) -> np.ndarray:
            gi, gq = h.envelope(t)
            gi, gq = gi * 1e-9, gq * 1e-9    # rad/s -> rad/ns
            blade = 0.5 * (gi + 1j * gq) * np.exp(1j * phase)
            drive = blade * upper + np.conj(blade) * upper.T
            return np.diag(static).astype(complex) + drive
    else:
        def ham(t: float) -> np.ndarray:
            gi, gq = h.envelope(t)
            gi, gq = gi * 1e-9, gq * 1e-9
            carrier = w_d * t + phase
            u = gi * math.cos(carrier) - gq * math.sin(carrier)
            frame = np.exp(1j * w_d * t * k)
            lab = np.diag(2.0 * math.pi * h.static).astype(complex) + \
                u * h.drive_op
            return (frame[:, None] * lab) * np.conj(frame)[None, :] - \
                np.diag(w_d * k).astype(complex)
    return ham


def rabi_population(omega_times_tau: float) -> float:
    """<sigma_z> = -cos(Omega tau) for resonant two-level driving."""
    return -math.cos(omega_times_tau)


def _check_density_matrix(rho: np.ndarray, name: str, atol: float = 1e-9):
    if abs(np.trace(rho).real - 1.0) > atol or abs(np.trace(rho).imag) > atol:
        raise ValueError(f"{name} violates unit trace")
    if np.max(np.abs(rho - rho.conj().T)) > atol:
        raise ValueError(f"{name} violates hermiticity")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w.min() < -atol:
        raise ValueError(f"{name} violates positive semidefiniteness")


def state_fidelity(rho: np.ndarray, chi: np.ndarray,
                   atol: float = 1e-7) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho) chi sqrt(rho)))^2.  States from
    a numerical integrator carry discretization error, so the physicality
    checks allow slack atol (eigenvalues above -atol, trace within atol)."""
    rho = np.asarray(rho, dtype=complex)
    chi = np.asarray(chi, dtype=complex)
    _check_density_matrix(rho, "rho", atol=atol)
    _check_density_matrix(chi, "chi", atol=atol)
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    sqrt_rho = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    m = sqrt_rho @ chi @ sqrt_rho
    ev = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    # rank-deficient products scatter round-off eigenvalues ~eps around 0
    # whose square roots would pollute the sum; drop them
    floor = 1e-13 * max(float(ev[-1]), 0.0)
    ev = np.where(ev > floor, ev, 0.0)
    f = float(np.sqrt(ev).sum() ** 2)
    return min(max(f, 0.0), 1.0)
