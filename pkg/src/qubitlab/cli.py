"""Command-line front end.

Subcommands: spectrum | sweep | capmatrix | coherence | calibrate |
benchmark | drag.  Configuration is a flat INI file (key = value inside
named sections) with units spelled out in key names (e_j_ghz, tau_ns).
Reports are JSON with a schema_version and the resolved config echo; data
tables are CSV with a mandatory header row, UTF-8, LF line endings.

Exit codes: 0 success, 2 config or usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import math
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import calibrate as cal
from . import em, noise, spectra
from .control import GateSpec, HADAMARD_GATE, X_GATE, pulse_for_gate

SCHEMA_VERSION = "1"

_GATES = {"x": X_GATE, "h": HADAMARD_GATE}

_SWEEP_KEYS = {
    "e_j": ("e_j_min_ghz", "e_j_max_ghz", "e_j_points"),
    "e_c": ("e_c_min_ghz", "e_c_max_ghz", "e_c_points"),
    "e_l": ("e_l_min_ghz", "e_l_max_ghz", "e_l_points"),
    "n_g": ("n_g_min", "n_g_max", "n_g_points"),
    "phi_ext": ("phi_ext_min", "phi_ext_max", "phi_ext_points"),
}


def _load_config(path: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = cp.read(path)
    if not read:
        raise ValueError(f"config file not found: {path}")
    return cp


def _get(cp, section: str, key: str, cast, default=None, required=False):
    if not cp.has_section(section) or not cp.has_option(section, key):
        if required:
            raise ValueError(f"missing [{section}] {key}")
        return default
    raw = cp.get(section, key)
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"bad value for [{section}] {key}: {raw!r}") from exc


def _device_params(cp):
    if not cp.has_section("device"):
        raise ValueError("missing [device] section")
    kind = _get(cp, "device", "type", str, required=True).strip().lower()
    if kind == "transmon":
        return spectra.TransmonParams(
            e_j=_get(cp, "device", "e_j_ghz", float, required=True),
            e_c=_get(cp, "device", "e_c_ghz", float, required=True),
            n_g=_get(cp, "device", "n_g", float, 0.0),
            n_cut=_get(cp, "device", "n_cut", int, 30))
    if kind == "fluxonium":
        return spectra.FluxoniumParams(
            e_j=_get(cp, "device", "e_j_ghz", float, required=True),
            e_c=_get(cp, "device", "e_c_ghz", float, required=True),
            e_l=_get(cp, "device", "e_l_ghz", float, required=True),
            phi_ext=_get(cp, "device", "phi_ext", float, 0.5),
            osc_dim=_get(cp, "device", "osc_dim", int, 110))
    raise ValueError(f"unknown device type {kind!r}")


def _dephasing_context(cp) -> noise.DephasingContext:
    return noise.DephasingContext(
        omega_low=_get(cp, "noise", "omega_low_rad_s", float,
                       2.0 * math.pi),
        t_exp=_get(cp, "noise", "t_exp_s", float, 1.0e-5),
        temperature=_get(cp, "noise", "temperature_k", float, 0.020))


def _noise_channels(cp, params) -> List[noise.NoiseChannelSpec]:
    raw = _get(cp, "noise", "channels", str, None)
    if raw is None:
        return noise.default_channels(params)
    channels = []
    for kind in (s.strip() for s in raw.split(",")):
        if not kind:
            continue
        kwargs = {}
        for key, cast in (("q_cap", float), ("q_ind", float),
                          ("impedance_ohm", float),
                          ("mutual_phi0_per_a", float)):
            val = _get(cp, "noise", key, cast, None)
            if val is not None:
                kwargs[key] = val
        amp = _get(cp, "noise", f"amplitude_{kind}", float, None)
        if amp is not None:
            kwargs["amplitude"] = amp
        channels.append(noise.NoiseChannelSpec(kind, **kwargs))
    if not channels:
        raise ValueError("[noise] channels is empty")
    return channels


def _build_device(cp, params) -> cal.DeviceModel:
    return cal.build_device(
        params, channels=_noise_channels(cp, params),
        context=_dephasing_context(cp),
        t1_eff_us=_get(cp, "noise", "t1_eff_us", float, None),
        t2_eff_us=_get(cp, "noise", "t2_eff_us", float, None),
        dim=_get(cp, "pulse", "levels", int, 4))


def _gate(cp) -> GateSpec:
    name = _get(cp, "pulse", "gate", str, "x").strip().lower()
    if name in _GATES:
        return _GATES[name]
    if name == "custom":
        return GateSpec(theta=_get(cp, "pulse", "theta_rad", float,
                                   required=True),
                        phi=_get(cp, "pulse", "phi_rad", float, 0.0),
                        lam=_get(cp, "pulse", "lam_rad", float, 0.0))
    raise ValueError(f"unknown gate {name!r} (use x, h, or custom)")


def _calibration_config(cp) -> cal.CalibrationConfig:
    return cal.CalibrationConfig(
        tau_grid=(_get(cp, "pulse", "tau_min_ns", float, 20.0),
                  _get(cp, "pulse", "tau_max_ns", float, 40.0),
                  _get(cp, "pulse", "tau_step_ns", float, 2.0)),
        dzeta_grid=(_get(cp, "pulse", "dzeta_min_rad", float, -0.05),
                    _get(cp, "pulse", "dzeta_max_rad", float, 0.05),
                    _get(cp, "pulse", "dzeta_step_rad", float, 0.01)),
        max_outer_iterations=_get(cp, "pulse", "max_outer_iterations",
                                  int, 4),
        tolerance=_get(cp, "pulse", "tolerance", float, 1e-7),
        shrink=_get(cp, "pulse", "shrink", float, 0.2),
        refine_points=_get(cp, "pulse", "refine_points", int, 9),
        steps_per_ns=_get(cp, "pulse", "steps_per_ns", int, None))


def _config_echo(cp, args) -> Dict:
    echo = {section: dict(cp.items(section)) for section in cp.sections()}
    echo["invocation"] = {"config": args.config, "out": str(args.out),
                          "seed": args.seed, "threads": args.threads}
    return echo


def _write_json(path: Path, payload: Dict) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2,
                      ensure_ascii=False) + "\n"
    path.write_text(text, encoding="utf-8", newline="\n")
    print(f"wrote {path}")


def _write_csv(path: Path, header: List[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    print(f"wrote {path}")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _profile_payload(params) -> Dict:
    spectrum = spectra.spectrum_of(params)
    payload = {
        "omega01_ghz": spectrum.transition(0, 1),
        "alpha_ghz": (spectrum.transition(1, 2) -
                      spectrum.transition(0, 1)),
        "levels_ghz": [float(x) for x in spectrum.levels[:6]],
    }
    if isinstance(params, spectra.TransmonParams):
        half = spectra.transmon_spectrum(
            dataclasses.replace(params, n_g=params.n_g + 0.5))
        payload["delta_omega_mhz"] = abs(
            half.transition(0, 1) - spectrum.transition(0, 1)) * 1e3
    else:
        payload["delta_omega_mhz"] = None
    return payload


def cmd_spectrum(cp, args) -> int:
    params = _device_params(cp)
    payload = {"schema_version": SCHEMA_VERSION,
               "config": _config_echo(cp, args)}
    payload.update(_profile_payload(params))
    _write_json(args.out / "spectrum_report.json", payload)

    spectrum = spectra.spectrum_of(params)
    if isinstance(params, spectra.TransmonParams):
        grid = np.linspace(-math.pi, math.pi, 401)
    else:
        grid = np.linspace(-2.0 * math.pi, 2.0 * math.pi, 401)
    n_levels = min(4, spectrum.dim)
    cols = [spectra.wavefunction(spectrum, k, grid) for k in range(n_levels)]
    rows = [[grid[i]] + [c[i] for c in cols] for i in range(grid.size)]
    _write_csv(args.out / "spectrum_wavefunctions.csv",
               ["phi_rad"] + [f"psi_{k}" for k in range(n_levels)], rows)
    return 0


def _sweep_axis(cp, name: str) -> np.ndarray:
    if name not in _SWEEP_KEYS:
        raise ValueError(f"unsupported sweep parameter {name!r}")
    kmin, kmax, kpts = _SWEEP_KEYS[name]
    lo = _get(cp, "sweep", kmin, float, required=True)
    hi = _get(cp, "sweep", kmax, float, required=True)
    n = _get(cp, "sweep", kpts, int, required=True)
    if n < 1:
        raise ValueError(f"[sweep] {kpts} must be at least 1")
    return np.linspace(lo, hi, n)


def cmd_sweep(cp, args) -> int:
    if not cp.has_section("sweep"):
        raise ValueError("missing [sweep] section")
    params = _device_params(cp)
    p1 = _get(cp, "sweep", "parameter", str, required=True).strip()
    p2 = _get(cp, "sweep", "parameter2", str, None)
    axis1 = _sweep_axis(cp, p1)
    axis2 = _sweep_axis(cp, p2.strip()) if p2 else None
    transmon = isinstance(params, spectra.TransmonParams)

    header = [p1] + ([p2.strip()] if p2 else []) + \
        ["omega01_ghz", "alpha_ghz"] + \
        (["delta_omega_mhz"] if transmon else [])
    rows = []
    for v1 in axis1:
        for v2 in (axis2 if axis2 is not None else [None]):
            upd = {p1: float(v1)}
            if v2 is not None:
                upd[p2.strip()] = float(v2)
            p = dataclasses.replace(params, **upd)
            payload = _profile_payload(p)
            row = [v1] + ([v2] if v2 is not None else []) + \
                [payload["omega01_ghz"], payload["alpha_ghz"]]
            if transmon:
                row.append(payload["delta_omega_mhz"])
            rows.append(row)
    _write_csv(args.out / "sweep_grid.csv", header, rows)
    return 0


def cmd_capmatrix(cp, args) -> int:
    path = _get(cp, "em", "layout_file", str, required=True)
    if not Path(path).exists():
        raise ValueError(f"layout file not found: {path}")
    layout = em.load_layout(path)
    matrix = em.maxwell_capacitance(layout)
    matrix.validate()
    rows = [[label] + list(matrix.c[i])
            for i, label in enumerate(matrix.labels)]
    _write_csv(args.out / "capmatrix_maxwell.csv",
               ["conductor"] + [f"c_{lab}_ff" for lab in matrix.labels],
               rows)

    keep_raw = _get(cp, "em", "keep", str, None)
    keep = [s.strip() for s in keep_raw.split(",")] if keep_raw \
        else list(matrix.labels[:2])
    reduced = em.reduce_capacitance(matrix, keep)
    c_eff = em.differential_capacitance(reduced)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": _config_echo(cp, args),
        "labels": list(matrix.labels),
        "asymmetry": matrix.asymmetry,
        "kept": list(reduced.labels),
        "reduced_matrix_ff": [[float(x) for x in row] for row in reduced.c],
        "c_eff_ff": c_eff,
        "e_c_mhz": em.effective_charging_energy(c_eff) * 1e3,
    }
    _write_json(args.out / "capmatrix_report.json", payload)
    return 0


def cmd_coherence(cp, args) -> int:
    params = _device_params(cp)
    spectrum = spectra.spectrum_of(params)
    ctx = _dephasing_context(cp)
    channels = _noise_channels(cp, params)
    report = noise.effective_coherence(channels, spectrum, ctx)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": _config_echo(cp, args),
        "channel_gamma1_per_s": dict(report.channel_gamma1),
        "channel_gamma_phi_per_s": dict(report.channel_gamma_phi),
        "t1_eff_us": report.t1_eff,
        "t_phi_eff_us": report.t_phi_eff,
        "t2_eff_us": report.t2_eff,
    }
    _write_json(args.out / "coherence_report.json", payload)

    if cp.has_section("sweep"):
        p1 = _get(cp, "sweep", "parameter", str, required=True).strip()
        axis = _sweep_axis(cp, p1)
        table = noise.coherence_sweep(params, channels, ctx, p1, axis)
        _write_csv(args.out / "coherence_sweep.csv",
                   [p1, "t1_eff_us", "t2_eff_us"], table)
    return 0


def _fixed_pulse(cp, device, gate):
    tau = _get(cp, "pulse", "tau_ns", float, None)
    if tau is None:
        return None
    return pulse_for_gate(
        gate, tau, device.omega01,
        delta_zeta=_get(cp, "pulse", "delta_zeta_rad", float, 0.0),
        beta=_get(cp, "pulse", "beta", float, 0.0))


def cmd_calibrate(cp, args) -> int:
    params = _device_params(cp)
    device = _build_device(cp, params)
    gate = _gate(cp)
    result = cal.calibrate_pulse(device, gate, _calibration_config(cp),
                                 beta=_get(cp, "pulse", "beta", float, 0.0))
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": _config_echo(cp, args),
        "gate": {"theta_rad": gate.theta, "phi_rad": gate.phi,
                 "lam_rad": gate.lam},
        "tau_star_ns": result.tau_star,
        "delta_zeta_star_rad": result.delta_zeta_star,
        "beta": result.beta,
        "fidelity": result.fidelity,
        "epsilon": result.epsilon,
        "budget_gates": result.budget,
        "t1_eff_us": device.t1_eff_us,
        "t2_eff_us": device.t2_eff_us,
    }
    _write_json(args.out / "calibrate_report.json", payload)
    _write_csv(args.out / "calibrate_history.csv",
               ["tau_ns", "delta_zeta_rad", "fidelity"], result.history)
    return 0


def cmd_benchmark(cp, args) -> int:
    params = _device_params(cp)
    device = _build_device(cp, params)
    gate = _gate(cp)
    pulse = _fixed_pulse(cp, device, gate)
    if pulse is None:
        result = cal.calibrate_pulse(device, gate, _calibration_config(cp),
                                     beta=_get(cp, "pulse", "beta",
                                               float, 0.0))
        pulse = result.pulse(device.omega01)
    n_gates = _get(cp, "pulse", "n_gates", int, 2000)
    bench = cal.benchmark_gate(device, gate, pulse, n_gates,
                               steps_per_ns=_get(cp, "pulse",
                                                 "steps_per_ns", int, None))
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": _config_echo(cp, args),
        "n_gates": n_gates,
        "tau_ns": pulse.tau,
        "delta_zeta_rad": pulse.delta_zeta,
        "beta": pulse.beta,
        "fit_amplitude": bench.amplitude,
        "fit_rate_per_gate": bench.rate,
        "fit_offset": bench.offset,
        "epsilon_per_gate": bench.epsilon,
        "p0_final": float(bench.populations[-1, 0]),
        "trace_drift": bench.trace_drift,
        "budget_gates": cal.coherence_budget(device.t1_eff_us,
                                             device.t2_eff_us, pulse.tau),
    }
    _write_json(args.out / "benchmark_report.json", payload)
    rows = [[int(k)] + list(bench.populations[k])
            for k in range(bench.populations.shape[0])]
    _write_csv(args.out / "benchmark_trace.csv",
               ["gate"] + [f"p{i}" for i in
                           range(bench.populations.shape[1])], rows)
    return 0


def cmd_drag(cp, args) -> int:
    params = _device_params(cp)
    device = _build_device(cp, params)
    gate = _gate(cp)
    pulse = _fixed_pulse(cp, device, gate)
    if pulse is not None:
        base = cal.CalibrationResult(
            gate=gate, tau_star=pulse.tau,
            delta_zeta_star=pulse.delta_zeta, beta=0.0,
            fidelity=cal.gate_fidelity(device, gate, dataclasses.replace(
                pulse, beta=0.0)),
            epsilon=math.nan)
        base.epsilon = 1.0 - base.fidelity
    else:
        base = cal.calibrate_pulse(device, gate, _calibration_config(cp))
    lo = _get(cp, "pulse", "beta_min", float, -0.6)
    hi = _get(cp, "pulse", "beta_max", float, 0.6)
    n = _get(cp, "pulse", "beta_points", int, 13)
    if n < 3:
        raise ValueError("[pulse] beta_points must be at least 3")
    grid = np.linspace(lo, hi, n)
    curve = []
    for b in grid:
        p = pulse_for_gate(gate, base.tau_star, device.omega01,
                           delta_zeta=base.delta_zeta_star, beta=float(b))
        curve.append((float(b), cal.gate_fidelity(device, gate, p)))
    refined = cal.optimize_drag(device, gate, base, grid)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": _config_echo(cp, args),
        "tau_star_ns": base.tau_star,
        "delta_zeta_star_rad": base.delta_zeta_star,
        "fidelity_no_drag": base.fidelity,
        "beta_star": refined.beta,
        "fidelity": refined.fidelity,
        "epsilon": refined.epsilon,
    }
    _write_json(args.out / "drag_report.json", payload)
    _write_csv(args.out / "drag_curve.csv", ["beta", "fidelity"], curve)
    return 0


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
    "capmatrix": cmd_capmatrix,
    "coherence": cmd_coherence,
    "calibrate": cmd_calibrate,
    "benchmark": cmd_benchmark,
    "drag": cmd_drag,
}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qubitlab",
        description="Superconducting-qubit pipeline: spectra, capacitance "
                    "extraction, coherence budgets, pulse calibration, and "
                    "gate benchmarking.")
    ap.add_argument("subcommand", choices=sorted(_COMMANDS))
    ap.add_argument("--config", required=True, help="INI config file")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--seed", type=int, default=0,
                    help="seed for any randomized sampling")
    ap.add_argument("--threads", type=int, default=1,
                    help="worker threads for library sweeps")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage to stderr
        return int(exc.code) if exc.code else 0
    try:
        cp = _load_config(args.config)
        args.out = Path(args.out)
        args.out.mkdir(parents=True, exist_ok=True)
        np.random.seed(args.seed)
        return _COMMANDS[args.subcommand](cp, args)
    except (ValueError, configparser.Error, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
