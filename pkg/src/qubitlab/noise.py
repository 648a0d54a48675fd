"""Noise channels: spectral densities, golden-rule relaxation rates, 1/f
dephasing rates, and effective T1/T2 aggregation.

Relaxation kinds (dielectric, quasiparticle_inductive, flux_bias) use
thermal loss PSDs with a frequency-dependent quality factor
Q(w) = Q_ref (w_ref / |w|)^0.7, w_ref = 2 pi x 6 GHz, and detailed-balance
thermal weights; reported relaxation rates are the total (emission plus
absorption) rates.  1/f kinds (critical_current_1f, charge_1f, and the 1/f
part of flux_bias) dephase through the first-order sensitivity
Gamma_phi = sqrt(2) A |d omega01 / d lambda| sqrt(|ln(w_low t_exp)|).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .constants import (E_CHARGE, H_PLANCK, HBAR, K_BOLTZMANN, PHI0,
                        PHI0_REDUCED, ghz_to_angular)
from .spectra import (EnergySpectrum, FluxoniumParams, TransmonParams,
                      spectrum_of)

RELAXATION_KINDS = ("dielectric", "flux_bias", "quasiparticle_inductive")
DEPHASING_KINDS = ("critical_current_1f", "charge_1f", "flux_bias")
_KINDS = ("dielectric", "flux_bias", "quasiparticle_inductive",
          "critical_current_1f", "charge_1f")

_OMEGA_REF = 2.0 * math.pi * 6.0e9      # rad/s pivot of the Q power law
_Q_EXPONENT = 0.7

_COUPLING_TAG = {
    "dielectric": "charge (2e N)",
    "quasiparticle_inductive": "flux (phi0 phi)",
    "flux_bias": "dH/dPhi_ext",
    "critical_current_1f": "dH/dE_J",
    "charge_1f": "dH/dn_g",
}


@dataclass(frozen=True)
class NoiseChannelSpec:
    kind: str
    q_cap: float = 1.3e6            # dielectric quality factor at 6 GHz
    q_ind: float = 392.0e6          # inductive quality factor at 6 GHz
    impedance_ohm: float = 50.0     # flux-bias line impedance
    mutual_phi0_per_a: float = 400.0  # flux-bias mutual inductance (Phi0/A)
    amplitude: Optional[float] = None  # 1/f amplitude (units depend on kind)
    # charging / inductive energy of the coupled mode; filled from the device
    # when rates are computed, required for a standalone psd() call
    e_c_ghz: Optional[float] = None
    e_l_ghz: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown noise channel kind {self.kind!r}")
        if self.amplitude is None:
            default = {"critical_current_1f": 1e-7, "charge_1f": 1e-4,
                       "flux_bias": 1e-6}.get(self.kind)
            object.__setattr__(self, "amplitude", default)
        if self.amplitude is not None and self.amplitude <= 0:
            raise ValueError("noise amplitude must be positive")
        for name in ("q_cap", "q_ind", "impedance_ohm", "mutual_phi0_per_a"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def coupling_operator(self) -> str:
        return _COUPLING_TAG[self.kind]


@dataclass(frozen=True)
class DephasingContext:
    omega_low: float = 2.0 * math.pi   # IR cutoff (rad/s)
    t_exp: float = 10.0e-6             # experiment duration (s)
    temperature: float = 0.02          # K

    def __post_init__(self):
        if self.omega_low <= 0 or self.t_exp <= 0 or self.temperature <= 0:
            raise ValueError("omega_low, t_exp, temperature must be positive")
        if self.omega_low * self.t_exp >= 1.0:
            raise ValueError("omega_low * t_exp must be < 1")

    @property
    def log_factor(self) -> float:
        return math.sqrt(abs(math.log(self.omega_low * self.t_exp)))


@dataclass
class CoherenceReport:
    channel_gamma1: Dict[str, float]      # 1/s per channel
    channel_gamma_phi: Dict[str, float]   # 1/s per channel
    t1_eff: float                         # us
    t_phi_eff: float                      # us (inf when no dephasing)
    t2_eff: float                         # us


def _q_of_omega(q_ref: float, omega: float) -> float:
    return q_ref * (_OMEGA_REF / abs(omega)) ** _Q_EXPONENT


def _occupation_weight(omega: float, temperature: float) -> float:
    """|1 / (1 - exp(-hbar w / kT))|: emission weight (nbar + 1) for w > 0,
    absorption weight nbar for w < 0; ratio is the detailed-balance factor
    exp(hbar w / kT)."""
    theta = HBAR * omega / (K_BOLTZMANN * temperature)
    return abs(1.0 / (1.0 - math.exp(-theta)))


def psd(channel: NoiseChannelSpec, omega: float,
        ctx: DephasingContext) -> float:
    """Noise spectral density at angular frequency omega (rad/s), in SI
    units of the coupled variable squared per rad/s.

    1/f kinds return A^2/|f| with f = omega / 2 pi.  Dielectric returns the
    voltage PSD of a lossy capacitor 2 hbar W(w) / (C Q_cap(|w|)), inductive
    the current PSD of a lossy inductor 2 hbar W(w) / (L Q_ind(|w|)), and
    flux_bias the quantum Johnson current noise (2 hbar w / Z) N(w); the
    thermal weights W, N satisfy S(w)/S(-w) = exp(hbar w / kT).
    """
    t = ctx.temperature
    if channel.kind in ("critical_current_1f", "charge_1f"):
        if omega == 0.0:
            raise ValueError("1/f spectral density diverges at omega = 0")
        return channel.amplitude ** 2 / abs(omega / (2.0 * math.pi))
    if channel.kind == "dielectric":
        if channel.e_c_ghz is None:
            raise ValueError("dielectric psd needs e_c_ghz (the charging "
                             "energy of the coupled mode)")
        c_farad = E_CHARGE ** 2 / (2.0 * channel.e_c_ghz * 1e9 * H_PLANCK)
        return 2.0 * HBAR * _occupation_weight(omega, t) / \
            (c_farad * _q_of_omega(channel.q_cap, omega))
    if channel.kind == "quasiparticle_inductive":
        if channel.e_l_ghz is None:
            raise ValueError("inductive psd needs e_l_ghz (the inductive "
                             "energy of the coupled mode)")
        l_henry = PHI0_REDUCED ** 2 / (channel.e_l_ghz * 1e9 * H_PLANCK)
        return 2.0 * HBAR * _occupation_weight(omega, t) / \
            (l_henry * _q_of_omega(channel.q_ind, omega))
    if channel.kind == "flux_bias":
        theta = HBAR * omega / (K_BOLTZMANN * t)
        return 2.0 * HBAR * omega / channel.impedance_ohm / \
            (1.0 - math.exp(-theta))
    raise ValueError(f"unknown channel kind {channel.kind!r}")


def _fluxonium_phase_ops(p: FluxoniumParams, dim: int):
    """(sin, cos) of (phi_hat - 2 pi phi_ext) in the oscillator basis."""
    off = p.phi_zpf * np.sqrt(np.arange(1, dim, dtype=float))
    from scipy.linalg import eigh_tridiagonal
    vals, vecs = eigh_tridiagonal(np.zeros(dim), off)
    theta = 2.0 * math.pi * p.phi_ext
    sin_m = (vecs * np.sin(vals - theta)) @ vecs.T
    cos_m = (vecs * np.cos(vals - theta)) @ vecs.T
    return sin_m, cos_m


def charge_matrix_element(spectrum: EnergySpectrum, i: int, j: int) -> float:
    """|<i| N |j>| in Cooper pairs."""
    ci, cj = spectrum.states[:, i], spectrum.states[:, j]
    p = spectrum.params
    if spectrum.basis_tag == "charge":
        n = np.arange(-p.n_cut, p.n_cut + 1, dtype=float)
        return abs(float(np.dot(ci, n * cj)))
    n_zpf = 1.0 / (2.0 * p.phi_zpf)
    k = np.sqrt(np.arange(1, spectrum.dim, dtype=float))
    # N = i n_zpf (a^dag - a); for real eigenvectors the element is
    # n_zpf (sum_k sqrt(k) (ci_k cj_{k-1} - ci_{k-1} cj_k)) up to phase
    lower = float(np.dot(ci[:-1], k * cj[1:]))   # <i| a |j>
    raise_ = float(np.dot(ci[1:], k * cj[:-1]))  # <i| a^dag |j>
    return n_zpf * abs(raise_ - lower)


def phase_matrix_element(spectrum: EnergySpectrum, i: int, j: int) -> float:
    """|<i| phi |j>| in radians (oscillator basis only)."""
    if spectrum.basis_tag != "oscillator":
        raise ValueError("phase operator is only available in the "
                         "oscillator basis")
    p = spectrum.params
    ci, cj = spectrum.states[:, i], spectrum.states[:, j]
    k = np.sqrt(np.arange(1, spectrum.dim, dtype=float))
    lower = float(np.dot(ci[:-1], k * cj[1:]))
    raise_ = float(np.dot(ci[1:], k * cj[:-1]))
    return p.phi_zpf * abs(raise_ + lower)


def _flux_derivative_element(spectrum: EnergySpectrum, i: int,
                             j: int) -> float:
    """|<i| dH/dPhi_ext |j>| in J/Wb (fluxonium only)."""
    if spectrum.basis_tag != "oscillator":
        raise ValueError("flux-bias relaxation requires a fluxonium spectrum")
    p = spectrum.params
    sin_m, _ = _fluxonium_phase_ops(p, spectrum.dim)
    e_j_joule = p.e_j * 1e9 * H_PLANCK
    op = e_j_joule * (2.0 * math.pi / PHI0) * sin_m
    return abs(float(spectrum.states[:, i] @ op @ spectrum.states[:, j]))


def t1_rate(channel: NoiseChannelSpec, spectrum: EnergySpectrum,
            ctx: DephasingContext, levels: Tuple[int, int] = (1, 0)) -> float:
    """Golden-rule relaxation rate |<f| S |i>|^2 S_noise(w_if) / hbar^2 for
    one channel, total (emission + absorption) in 1/s."""
    if channel.kind not in RELAXATION_KINDS:
        raise ValueError(f"channel kind {channel.kind!r} does not relax the "
                         f"qubit (dephasing-only)")
    hi, lo = levels
    omega_ghz = spectrum.transition(lo, hi)
    omega = ghz_to_angular(omega_ghz)
    p = spectrum.params

    if channel.kind == "dielectric":
        if channel.e_c_ghz is None:
            channel = dataclasses.replace(channel, e_c_ghz=p.e_c)
        elem = 2.0 * E_CHARGE * charge_matrix_element(spectrum, lo, hi)
    elif channel.kind == "quasiparticle_inductive":
        if channel.e_l_ghz is None:
            if not isinstance(p, FluxoniumParams):
                raise ValueError("inductive channel requires an inductive "
                                 "energy (fluxonium device)")
            channel = dataclasses.replace(channel, e_l_ghz=p.e_l)
        elem = PHI0_REDUCED * phase_matrix_element(spectrum, lo, hi)
    else:  # flux_bias
        mutual_henry = channel.mutual_phi0_per_a * PHI0
        elem = mutual_henry * _flux_derivative_element(spectrum, lo, hi)

    down = psd(channel, omega, ctx)
    up = psd(channel, -omega, ctx)
    return float(elem ** 2 * (down + up) / HBAR ** 2)


def _omega01_derivative(params, name: str, step: float = 1e-4) -> float:
    """d omega01 / d lambda (GHz per natural unit), central difference with
    one Richardson extrapolation.  Periodic parameters wrap modulo 1."""
    periodic = name in ("n_g", "phi_ext")

    def w01(value: float) -> float:
        if periodic:
            value = value % 1.0
        return spectrum_of(dataclasses.replace(params, **{name: value})
                           ).transition(0, 1)

    lam = getattr(params, name)

    def central(h: float) -> float:
        return (w01(lam + h) - w01(lam - h)) / (2.0 * h)

    d_h = central(step)
    d_h2 = central(step / 2.0)
    d = (4.0 * d_h2 - d_h) / 3.0
    if not math.isfinite(d):
        raise RuntimeError(f"omega01 derivative with respect to {name} is "
                           f"not finite")
    return d


_DEPHASING_PARAM = {"critical_current_1f": "e_j", "charge_1f": "n_g",
                    "flux_bias": "phi_ext"}


def tphi_rate(channel: NoiseChannelSpec, params,
              ctx: DephasingContext) -> float:
    """First-order 1/f dephasing rate
    sqrt(2) A |d omega01/d lambda| sqrt(|ln(w_low t_exp)|) in 1/s."""
    if channel.kind not in DEPHASING_KINDS:
        raise ValueError(f"channel kind {channel.kind!r} is relaxation-only")
    name = _DEPHASING_PARAM[channel.kind]
    if not hasattr(params, name):
        raise ValueError(f"device has no parameter {name!r} for "
                         f"{channel.kind} dephasing")
    d_ghz = _omega01_derivative(params, name)
    d_angular = abs(d_ghz) * 2.0 * math.pi * 1e9
    return float(math.sqrt(2.0) * channel.amplitude * d_angular *
                 ctx.log_factor)


def t_phi_from_t1_t2(t1_us: float, t2_us: float) -> float:
    """Back out the pure-dephasing time from 1/T2 = 1/Tphi + 1/(2 T1)."""
    if t1_us <= 0.0 or t2_us <= 0.0:
        raise ValueError("coherence times must be positive")
    inv = 1.0 / t2_us - 1.0 / (2.0 * t1_us)
    if inv <= 0:
        return math.inf
    return 1.0 / inv


def effective_coherence(channels: List[NoiseChannelSpec],
                        spectrum: EnergySpectrum,
                        ctx: DephasingContext) -> CoherenceReport:
    """Aggregate channel rates: 1/T1_eff = sum Gamma1, 1/Tphi = sum
    Gamma_phi, 1/T2 = 1/Tphi + 1/(2 T1)."""
    if not channels:
        raise ValueError("effective_coherence needs at least one channel")
    g1: Dict[str, float] = {}
    gphi: Dict[str, float] = {}
    for idx, ch in enumerate(channels):
        key = ch.kind if ch.kind not in g1 and ch.kind not in gphi \
            else f"{ch.kind}_{idx}"
        if ch.kind in RELAXATION_KINDS:
            g1[key] = t1_rate(ch, spectrum, ctx)
        if ch.kind in DEPHASING_KINDS:
            gphi[key] = tphi_rate(ch, spectrum.params, ctx)
    gamma1 = sum(g1.values())
    gamma_phi = sum(gphi.values())
    t1 = math.inf if gamma1 == 0 else 1e6 / gamma1
    tphi = math.inf if gamma_phi == 0 else 1e6 / gamma_phi
    inv_t2 = gamma_phi + 0.5 * gamma1
    t2 = math.inf if inv_t2 == 0 else 1e6 / inv_t2
    return CoherenceReport(channel_gamma1=g1, channel_gamma_phi=gphi,
                           t1_eff=t1, t_phi_eff=tphi, t2_eff=t2)


def coherence_sweep(params, channels: List[NoiseChannelSpec],
                    ctx: DephasingContext, parameter: str, grid):
    """(value, T1_eff, T2_eff) per grid point of one device parameter."""
    if parameter not in ("e_j", "e_c", "e_l", "n_g", "phi_ext"):
        raise ValueError(f"unsupported sweep parameter {parameter!r}")
    if not hasattr(params, parameter):
        raise ValueError(f"device has no parameter {parameter!r}")
    out = []
    for value in grid:
        p = dataclasses.replace(params, **{parameter: float(value)})
        rep = effective_coherence(channels, spectrum_of(p), ctx)
        out.append((float(value), rep.t1_eff, rep.t2_eff))
    return out


def default_channels(params) -> List[NoiseChannelSpec]:
    """The channel sets used for the reference devices."""
    if isinstance(params, TransmonParams):
        return [NoiseChannelSpec("dielectric"),
                NoiseChannelSpec("critical_current_1f"),
                NoiseChannelSpec("charge_1f")]
    if isinstance(params, FluxoniumParams):
        return [NoiseChannelSpec("dielectric"),
                NoiseChannelSpec("quasiparticle_inductive"),
                NoiseChannelSpec("flux_bias"),
                NoiseChannelSpec("critical_current_1f")]
    raise ValueError(f"unsupported parameter record {type(params).__name__}")
