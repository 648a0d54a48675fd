"""Transmon and fluxonium Hamiltonians: construction, diagonalization, and
derived spectral quantities (transition frequencies, anharmonicity, charge
dispersion, flux dependence, wavefunctions).

Energies are in GHz (h = 1).  The transmon lives in the charge basis
(dimension 2*n_cut + 1), the fluxonium in the harmonic-oscillator basis of
its quadratic part.  The cosine argument uses the reduced-phase convention:
cos(phi_hat - 2*pi*phi_ext) with phi_ext in units of the flux quantum, so
phi_ext = 0.5 is the symmetric double-well point.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal


class ConvergenceError(RuntimeError):
    """Raised when a basis-cutoff doubling check fails."""


_REL_CONV_TOL = 1e-9


@dataclass(frozen=True)
class TransmonParams:
    e_j: float                 # Josephson energy (GHz)
    e_c: float                 # charging energy (GHz)
    n_g: float = 0.0           # offset charge (Cooper pairs)
    n_cut: int = 30            # charge basis runs n = -n_cut..+n_cut

    def __post_init__(self):
        if self.e_j <= 0.0:
            raise ValueError(f"e_j must be > 0, got {self.e_j}")
        if self.e_c <= 0.0:
            raise ValueError(f"e_c must be > 0, got {self.e_c}")
        if self.n_cut < 10:
            raise ValueError(f"n_cut must be >= 10, got {self.n_cut}")

    @property
    def dim(self) -> int:
        return 2 * self.n_cut + 1


@dataclass(frozen=True)
class FluxoniumParams:
    e_j: float                 # Josephson energy (GHz)
    e_c: float                 # charging energy (GHz)
    e_l: float                 # inductive energy (GHz)
    phi_ext: float = 0.5       # external flux in units of Phi0
    osc_dim: int = 110         # oscillator basis dimension

    def __post_init__(self):
        for name in ("e_j", "e_c", "e_l"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0.0 <= self.phi_ext <= 1.0:
            raise ValueError(f"phi_ext must lie in [0, 1], got {self.phi_ext}")
        if self.osc_dim < 60:
            raise ValueError(f"osc_dim must be >= 60, got {self.osc_dim}")

    @property
    def dim(self) -> int:
        return self.osc_dim

    @property
    def phi_zpf(self) -> float:
        """Zero-point phase fluctuation (2 E_C / E_L)^(1/4)."""
        return (2.0 * self.e_c / self.e_l) ** 0.25


@dataclass(frozen=True)
class EnergySpectrum:
    levels: np.ndarray         # eigenvalues (GHz), sorted ascending, E0 = 0
    states: np.ndarray         # eigenvector columns in the construction basis
    basis_tag: str             # "charge" | "oscillator"
    params: object             # TransmonParams | FluxoniumParams

    @property
    def dim(self) -> int:
        return len(self.levels)

    def transition(self, i: int, j: int) -> float:
        """omega_{i->j} = E_j - E_i in GHz."""
        return float(self.levels[j] - self.levels[i])


@dataclass
class QubitProfile:
    omega01: float                      # GHz
    alpha: float                        # GHz, signed
    delta_omega: Optional[float] = None  # GHz, charge dispersion
    t1_eff: Optional[float] = None       # us, filled by the noise module
    t2_eff: Optional[float] = None       # us


def _canonical_order(levels: np.ndarray, states: np.ndarray):
    """Sort ascending; break exact/near ties by the basis index of the
    dominant amplitude so degenerate outputs are deterministic."""
    order = np.argsort(levels, kind="stable")
    levels = levels[order]
    states = states[:, order]
    scale = max(abs(levels[0]), abs(levels[-1]), 1.0)
    i = 0
    n = len(levels)
    while i < n:
        j = i + 1
        while j < n and abs(levels[j] - levels[i]) < 1e-10 * scale:
            j += 1
        if j - i > 1:
            dom = np.argmax(np.abs(states[:, i:j]), axis=0)
            sub = np.argsort(dom, kind="stable")
            states[:, i:j] = states[:, i:j][:, sub]
        i = j
    # sign gauge: dominant amplitude positive
    for k in range(n):
        m = np.argmax(np.abs(states[:, k]))
        if states[m, k] < 0:
            states[:, k] = -states[:, k]
    return levels, states


def _transmon_eigs(p: TransmonParams, eigvals_only=False):
    n = np.arange(-p.n_cut, p.n_cut + 1, dtype=float)
    diag = 4.0 * p.e_c * (n - p.n_g) ** 2
    off = np.full(p.dim - 1, -0.5 * p.e_j)
    if eigvals_only:
        return eigh_tridiagonal(diag, off, eigvals_only=True)
    return eigh_tridiagonal(diag, off)


def transmon_spectrum(p: TransmonParams) -> EnergySpectrum:
    """Diagonalize 4 E_C (N - n_g)^2 - E_J cos(phi) in the charge basis."""
    vals, vecs = _transmon_eigs(p)
    vals, vecs = _canonical_order(vals, vecs)

    check = dataclasses.replace(p, n_cut=2 * p.n_cut)
    vals2 = np.sort(_transmon_eigs(check, eigvals_only=True))
    w01, w01c = vals[1] - vals[0], vals2[1] - vals2[0]
    al = (vals[2] - vals[1]) - w01
    alc = (vals2[2] - vals2[1]) - w01c
    if abs(w01 - w01c) > _REL_CONV_TOL * abs(w01) or \
            abs(al - alc) > max(_REL_CONV_TOL * abs(al), 1e-12):
        raise ConvergenceError(
            f"transmon spectrum not converged at n_cut={p.n_cut}: doubling the "
            f"cutoff moves omega01 by {abs(w01 - w01c):.3e} GHz")
    return EnergySpectrum(vals - vals[0], vecs, "charge", p)


def _fluxonium_hamiltonian(p: FluxoniumParams, dim: int) -> np.ndarray:
    phi_z = p.phi_zpf
    k = np.arange(dim, dtype=float)
    # quadratic part is the oscillator: omega_p (k + 1/2), omega_p = sqrt(8 Ec El)
    omega_p = np.sqrt(8.0 * p.e_c * p.e_l)
    h = np.diag(omega_p * (k + 0.5))
    # phase operator phi_zpf (a + a^dag), tridiagonal
    off = phi_z * np.sqrt(k[1:])
    phi_vals, phi_vecs = eigh_tridiagonal(np.zeros(dim), off)
    theta = 2.0 * np.pi * p.phi_ext
    cos_mat = (phi_vecs * np.cos(phi_vals - theta)) @ phi_vecs.T
    h -= p.e_j * cos_mat
    return h


def fluxonium_spectrum(p: FluxoniumParams) -> EnergySpectrum:
    """Diagonalize 4 E_C N^2 + E_L phi^2 / 2 - E_J cos(phi - 2 pi phi_ext)
    in the oscillator basis of the quadratic part."""
    h = _fluxonium_hamiltonian(p, p.osc_dim)
    vals, vecs = eigh(h)
    vals, vecs = _canonical_order(vals, vecs)

    vals2 = np.sort(eigh(_fluxonium_hamiltonian(p, 2 * p.osc_dim),
                         eigvals_only=True))
    w01, w01c = vals[1] - vals[0], vals2[1] - vals2[0]
    al = (vals[2] - vals[1]) - w01
    alc = (vals2[2] - vals2[1]) - w01c
    if abs(w01 - w01c) > _REL_CONV_TOL * abs(w01) or \
            abs(al - alc) > max(_REL_CONV_TOL * abs(al), 1e-12):
        raise ConvergenceError(
            f"fluxonium spectrum not converged at osc_dim={p.osc_dim}: doubling "
            f"the dimension moves omega01 by {abs(w01 - w01c):.3e} GHz")
    return EnergySpectrum(vals - vals[0], vecs, "oscillator", p)


def spectrum_of(params) -> EnergySpectrum:
    if isinstance(params, TransmonParams):
        return transmon_spectrum(params)
    if isinstance(params, FluxoniumParams):
        return fluxonium_spectrum(params)
    raise ValueError(f"unsupported parameter record {type(params).__name__}")


def qubit_profile(s: EnergySpectrum,
                  s_half: Optional[EnergySpectrum] = None) -> QubitProfile:
    """omega01, anharmonicity, and (given the n_g = 0.5 twin spectrum) the
    charge dispersion |omega01(n_g=0) - omega01(n_g=0.5)|."""
    if s.dim < 3:
        raise ValueError("qubit_profile needs at least 3 levels")
    w01 = s.transition(0, 1)
    alpha = s.transition(1, 2) - w01
    d_omega = None
    if s_half is not None:
        if s_half.dim < 2:
            raise ValueError("qubit_profile needs at least 2 levels in s_half")
        d_omega = abs(w01 - s_half.transition(0, 1))
    return QubitProfile(omega01=w01, alpha=alpha, delta_omega=d_omega)


def charge_dispersion_decay(e_j_over_e_c, e_c: float, n_levels: int = 4,
                            n_cut: int = 30):
    """Per-level charge dispersion |omega_k(n_g=0) - omega_k(n_g=0.5)| for a
    sweep of E_J/E_C ratios at fixed E_C.  Ratios must exceed 5."""
    out = []
    for ratio in e_j_over_e_c:
        if ratio <= 5.0:
            raise ValueError(f"E_J/E_C ratios must exceed 5, got {ratio}")
        p0 = TransmonParams(e_j=ratio * e_c, e_c=e_c, n_g=0.0, n_cut=n_cut)
        ph = dataclasses.replace(p0, n_g=0.5)
        s0, sh = transmon_spectrum(p0), transmon_spectrum(ph)
        disp = np.array([abs(s0.transition(0, k) - sh.transition(0, k))
                         for k in range(1, n_levels + 1)])
        out.append((float(ratio), disp))
    return out


def flux_sweep(p: FluxoniumParams, phi_grid):
    """(phi_ext, omega01, alpha) per grid point."""
    out = []
    for phi in phi_grid:
        if not 0.0 <= phi <= 1.0:
            raise ValueError(f"phi_ext grid point {phi} outside [0, 1]")
        s = fluxonium_spectrum(dataclasses.replace(p, phi_ext=float(phi)))
        prof = qubit_profile(s)
        out.append((float(phi), prof.omega01, prof.alpha))
    return out


def _oscillator_basis_on_grid(phi, dim: int, phi_zpf: float) -> np.ndarray:
    """Harmonic-oscillator eigenfunctions chi_k(phi) with length scale
    phi_zpf, via the stable normalized recurrence.  Shape (dim, len(phi))."""
    x = np.asarray(phi, dtype=float) / phi_zpf
    chi = np.zeros((dim, len(x)))
    chi[0] = np.pi ** -0.25 * phi_zpf ** -0.5 * np.exp(-0.5 * x * x)
    if dim > 1:
        chi[1] = np.sqrt(2.0) * x * chi[0]
    for k in range(2, dim):
        chi[k] = np.sqrt(2.0 / k) * x * chi[k - 1] - \
            np.sqrt((k - 1) / k) * chi[k - 2]
    return chi


def wavefunction(s: EnergySpectrum, level: int, phi_grid) -> np.ndarray:
    """Real phase-space amplitude of one eigenstate on a phi grid, normalized
    to unit L2 norm under the trapezoid rule."""
    if not 0 <= level < s.dim:
        raise ValueError(f"level {level} out of range for dim {s.dim}")
    phi = np.asarray(phi_grid, dtype=float)
    c = s.states[:, level]
    if s.basis_tag == "charge":
        n = np.arange(-s.params.n_cut, s.params.n_cut + 1)
        psi_c = (c[:, None] * np.exp(1j * np.outer(n, phi))).sum(axis=0)
        psi_c /= np.sqrt(2.0 * np.pi)
        peak = psi_c[np.argmax(np.abs(psi_c))]
        psi = np.real(psi_c * np.exp(-1j * np.angle(peak)))
    elif s.basis_tag == "oscillator":
        chi = _oscillator_basis_on_grid(phi, s.dim, s.params.phi_zpf)
        psi = c @ chi
    else:
        raise ValueError(f"unknown basis tag {s.basis_tag!r}")
    norm = np.sqrt(np.trapezoid(psi * psi, phi))
    if norm == 0.0:
        raise RuntimeError("wavefunction vanishes on the supplied grid")
    psi = psi / norm
    if psi[np.argmax(np.abs(psi))] < 0:
        psi = -psi
    return psi
