"""Command-line front end: reproducible experiment recipes with file I/O.

Every quantity crossing the CLI boundary is in ordinary frequency (Hz) or
seconds; the conversion to angular frequency happens here and nowhere else.
Outputs are CSV files with a JSON sidecar carrying the fully resolved
configuration; rerunning with the same config and seed reproduces the files
byte for byte apart from the timestamp comment line.  Exit codes: 0 success,
2 validation error, 3 solver or analysis failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, ats, calib, hetero, jumps, liouville, meanfield, models
from .qcore import coherent

TWO_PI = 2.0 * np.pi


class ConfigError(ValueError):
    """Invalid or missing configuration."""


SOLVER_ERRORS = (
    liouville.SteadyStateError,
    liouville.StiffnessError,
    liouville.DegenerateSteadyStateError,
    jumps.DecayFitError,
    jumps.NotBimodalError,
    jumps.TooFewDwellsError,
    calib.NoLinearTailError,
    hetero.UnresolvableJumpsError,
)


def thread_count() -> int:
    try:
        return max(int(os.environ.get("TWOPHOTON_THREADS", "1")), 1)
    except ValueError:
        return 1


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def resolve(cfg: dict, args: argparse.Namespace, keys) -> dict:
    """Merge config-file values with CLI flags; flags win when given."""
    out = dict(cfg)
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            out[key] = val
    return out


def need(cfg: dict, key: str, kind=float, positive=False, nonnegative=False):
    if key not in cfg:
        raise ConfigError(f"missing required parameter '{key}'")
    try:
        val = kind(cfg[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"parameter '{key}' must be {kind.__name__}") from exc
    if positive and not val > 0:
        raise ConfigError(f"parameter '{key}' must be positive")
    if nonnegative and val < 0:
        raise ConfigError(f"parameter '{key}' must be nonnegative")
    return val


def optional(cfg: dict, key: str, default, kind=float):
    if key not in cfg or cfg[key] is None:
        return default
    return kind(cfg[key])


def out_path(args, name: str) -> Path:
    out = Path(getattr(args, "out", ".") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def write_sidecar(path: Path, command: str, cfg: dict):
    sidecar = path.with_suffix(path.suffix + ".config.json")
    payload = {"command": command, "config": cfg, "version": __version__}
    with open(sidecar, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def write_table(path: Path, command: str, cfg: dict, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(f"# created {datetime.now(timezone.utc).isoformat()}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    write_sidecar(path, command, cfg)


def write_map(path: Path, command: str, cfg: dict, corner: str,
              col_axis, row_axis, body):
    with open(path, "w", newline="") as fh:
        fh.write(f"# created {datetime.now(timezone.utc).isoformat()}\n")
        w = csv.writer(fh)
        w.writerow([corner] + [_fmt(v) for v in col_axis])
        for rv, row in zip(row_axis, body):
            w.writerow([_fmt(rv)] + [_fmt(v) for v in row])
    write_sidecar(path, command, cfg)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{v:.12g}"
    return v


def _grid(cfg, prefix: str, default_num: int = 41):
    lo = need(cfg, f"{prefix}_min_hz", float)
    hi = need(cfg, f"{prefix}_max_hz", float)
    num = int(optional(cfg, f"{prefix}_points", default_num))
    if hi <= lo or num < 2:
        raise ConfigError(f"invalid grid for '{prefix}'")
    return np.linspace(lo, hi, num)


# ---------------------------------------------------------------- commands


def cmd_steady_scan(args) -> int:
    cfg = resolve(load_config(args.config), args,
                  ["g2_hz", "kappa_a_hz", "kappa_b_hz", "dim"])
    g2 = TWO_PI * need(cfg, "g2_hz", positive=True)
    ka = TWO_PI * need(cfg, "kappa_a_hz", positive=True)
    kb = TWO_PI * need(cfg, "kappa_b_hz", positive=True)
    quantum = bool(optional(cfg, "quantum", not args.no_quantum, bool))
    dim = int(optional(cfg, "dim", 40))

    eps_c_hz = meanfield.critical_drive(g2, ka, kb) / TWO_PI
    if "eps_d_min_hz" in cfg or "eps_d_max_hz" in cfg:
        eps_hz = _grid(cfg, "eps_d")
    else:
        eps_hz = np.linspace(0.0, 3.0 * eps_c_hz, int(optional(cfg, "eps_d_points", 61)))
    classical, quantum_nbar = meanfield.quantum_vs_classical_curve(
        g2, ka, kb, TWO_PI * eps_hz, dim=dim, quantum=quantum)

    header = ["eps_d_hz", "nbar_classical"]
    cols = [eps_hz, classical]
    if quantum_nbar is not None:
        header.append("nbar_quantum")
        cols.append(quantum_nbar)
    path = out_path(args, "steady_scan.csv")
    write_table(path, "steady-scan", dict(cfg, critical_drive_hz=eps_c_hz),
                header, zip(*cols))
    print(f"steady-scan: classical threshold at eps_d = {eps_c_hz:.6g} Hz "
          f"-> {path}")
    return 0


def cmd_diamond(args) -> int:
    cfg = resolve(load_config(args.config), args,
                  ["g2_hz", "eps_d_hz", "kappa_a_hz", "kappa_b_hz", "points"])
    g2 = TWO_PI * need(cfg, "g2_hz", positive=True)
    eps_d = TWO_PI * need(cfg, "eps_d_hz", positive=True)
    ka = TWO_PI * need(cfg, "kappa_a_hz", positive=True)
    kb = TWO_PI * need(cfg, "kappa_b_hz", positive=True)
    n = int(optional(cfg, "points", 101))
    product = eps_d * g2 / TWO_PI ** 2  # Hz^2
    half_a = optional(cfg, "delta_a_half_hz", 1.3 * 4 * product / (kb / TWO_PI))
    half_b = optional(cfg, "delta_b_half_hz", 1.3 * 4 * product / (ka / TWO_PI))

    da_hz = meanfield.symmetric_grid(half_a, n)
    db_hz = meanfield.symmetric_grid(half_b, n)
    grid = meanfield.nbar_map(g2, eps_d, ka, kb, TWO_PI * da_hz, TWO_PI * db_hz)
    path = out_path(args, "diamond.csv")
    write_map(path, "diamond", dict(cfg), "delta_b_hz\\delta_a_hz",
              da_hz, db_hz, grid)
    bright = float((grid > 0).mean())
    print(f"diamond: {grid.shape[0]}x{grid.shape[1]} map, bright fraction "
          f"{bright:.3f} -> {path}")
    return 0


def _record_meta(cfg) -> hetero.RecordMeta:
    return hetero.RecordMeta(
        gain=optional(cfg, "gain", 1.0),
        t_m=need(cfg, "tm_s", positive=True),
        eta=need(cfg, "eta"),
        kappa_c=TWO_PI * need(cfg, "kappa_c_hz", nonnegative=True),
    )


def cmd_trajectory(args) -> int:
    cfg = resolve(load_config(args.config), args,
                  ["nbar", "tbf_s", "tm_s", "eta", "kappa_c_hz", "gain",
                   "duration_s", "seed", "eps2_hz", "kappa2_hz", "kappa_a_hz",
                   "dim"])
    seed = int(need(cfg, "seed", int))
    duration = need(cfg, "duration_s", positive=True)
    meta = _record_meta(cfg)

    if args.sme:
        eps2 = TWO_PI * need(cfg, "eps2_hz")
        kappa2 = TWO_PI * need(cfg, "kappa2_hz", nonnegative=True)
        kappa_a = TWO_PI * need(cfg, "kappa_a_hz", nonnegative=True)
        if meta.kappa_c > kappa_a:
            raise ConfigError("kappa_c_hz cannot exceed the total kappa_a_hz")
        dim = int(optional(cfg, "dim", 20))
        p = models.ReducedParams(eps2=eps2, kappa2=kappa2, kappa_a=kappa_a)
        spec = models.reduced_model(p, dim)
        alpha = np.sqrt(p.pointer_nbar())
        rho0 = coherent(dim, alpha).to_density() if alpha > 0 else None
        series = hetero.synth_sme(spec, meta, duration, seed, rho0=rho0)
    else:
        nbar = need(cfg, "nbar", nonnegative=True)
        tbf = need(cfg, "tbf_s", positive=True)
        series = hetero.synth_telegraph(nbar, tbf, meta, duration, seed)

    path = out_path(args, "trajectory.csv")
    series.save_csv(path)
    write_sidecar(path, "trajectory", dict(cfg))
    print(f"trajectory: {len(series.samples)} samples of T_m = {meta.t_m} s "
          f"-> {path}")
    return 0


def cmd_jumps(args) -> int:
    cfg = resolve(load_config(args.config), args, ["input", "hysteresis"])
    src = need(cfg, "input", str)
    series = hetero.IQSeries.load_csv(src)
    hyst = optional(cfg, "hysteresis", 0.5)
    dwells = jumps.detect_jumps(series, hysteresis=hyst)
    est = jumps.bitflip_time(dwells)
    report = {
        "n_jumps": int(dwells.n_jumps),
        "n_dwells": int(len(dwells.durations)),
        "T_bf_s": est.t_bf,
        "ci_s": [est.ci[0], est.ci[1] if np.isfinite(est.ci[1]) else None],
        "is_lower_bound": est.is_lower_bound,
        "censored_flags": dwells.censored.tolist(),
    }
    try:
        cdf = jumps.dwell_cdf(dwells)
        report["ks_pvalue"] = cdf.ks_pvalue
        report["mean_dwell_s"] = cdf.mean
    except jumps.TooFewDwellsError:
        report["ks_pvalue"] = None
    path = out_path(args, "jumps_report.json")
    with open(path, "w") as fh:
        json.dump({"command": "jumps", "config": cfg, "report": report,
                   "version": __version__}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"jumps: {report['n_jumps']} jumps, T_bf = {est.t_bf:.6g} s -> {path}")
    return 0


def cmd_bitflip_scan(args) -> int:
    cfg = resolve(load_config(args.config), args,
                  ["seed", "tm_s", "eta", "kappa_c_hz", "gain", "duration_s",
                   "kappa2_hz", "kappa_a_hz"])
    nbars = np.asarray(cfg.get("nbar_list", [11.0, 17.0, 23.0, 28.0, 34.0, 40.0, 46.0, 52.0]),
                       dtype=float)
    if args.quantum:
        kappa2 = TWO_PI * need(cfg, "kappa2_hz", positive=True)
        kappa_a = TWO_PI * need(cfg, "kappa_a_hz", nonnegative=True)
        rows = []
        for nb in nbars:
            eps2 = kappa2 * nb / 2 + kappa_a / 4
            dim = int(np.ceil(4 * nb)) + 8
            p = models.ReducedParams(eps2=eps2, kappa2=kappa2, kappa_a=kappa_a)
            spec = models.reduced_model(p, dim)
            gap = liouville.spectral_gap(liouville.build_liouvillian(spec), "odd")
            rows.append((nb, 1.0 / gap))
        slope = float(np.polyfit(nbars, np.log([r[1] for r in rows]), 1)[0])
        path = out_path(args, "bitflip_quantum.csv")
        write_table(path, "bitflip-scan", dict(cfg, slope_per_photon=slope),
                    ["nbar", "t_bf_s"], rows)
        print(f"bitflip-scan --quantum: ln T slope {slope:.3f}/photon -> {path}")
        return 0

    seed = int(need(cfg, "seed", int))
    t0 = optional(cfg, "t0_s", 2.5e-5)
    factor = optional(cfg, "factor", 1.4)
    tsat = optional(cfg, "tsat_s", 127.0)
    meta = _record_meta(cfg)
    duration = need(cfg, "duration_s", positive=True)
    rows = []
    points = []
    for i, nb in enumerate(nbars):
        t_true = min(tsat, t0 * factor ** nb)
        series = hetero.synth_telegraph(nb, t_true, meta, duration, seed + i)
        est = jumps.bitflip_time(jumps.detect_jumps(series))
        rows.append((nb, t_true, est.t_bf, est.ci[0], est.ci[1]))
        points.append((nb, est.t_bf))
    fit = jumps.scaling_fit(points)
    path = out_path(args, "bitflip_scan.csv")
    write_table(path, "bitflip-scan", dict(cfg),
                ["nbar", "t_bf_true_s", "t_bf_est_s", "ci_lo_s", "ci_hi_s"], rows)
    fit_path = out_path(args, "bitflip_fit.json")
    with open(fit_path, "w") as fh:
        json.dump({"command": "bitflip-scan", "config": cfg, "version": __version__,
                   "fit": {"factor_per_photon": fit.factor,
                           "t_sat_s": fit.t_sat if np.isfinite(fit.t_sat) else None,
                           "t0_s": fit.t0,
                           "breakpoint_nbar": fit.breakpoint if np.isfinite(fit.breakpoint) else None}},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"bitflip-scan: factor {fit.factor:.3f}/photon, saturation "
          f"{fit.t_sat:.4g} s -> {path}")
    return 0


def cmd_calibrate(args) -> int:
    cfg = resolve(load_config(args.config), args, ["curve", "rates", "dim"])
    curve_path = need(cfg, "curve", str)
    data = np.loadtxt(curve_path, delimiter=",", skiprows=1, comments="#")
    if data.ndim != 2 or data.shape[1] < 2:
        raise ConfigError("curve CSV must have two columns: drive, power")
    curve = calib.CalibCurve(data[:, 0], data[:, 1])

    rates = load_config(need(cfg, "rates", str))
    dim = int(optional(cfg, "dim", 40))

    def rng(key):
        val = rates.get(key)
        if val is None:
            raise ConfigError(f"rates file missing '{key}'")
        lohi = val if isinstance(val, (list, tuple)) else [val, val]
        return [TWO_PI * float(lohi[0]), TWO_PI * float(lohi[-1])]

    ka_i = rng("kappa_a_i_hz")
    ka_c = rng("kappa_a_c_hz")
    kb = rng("kappa_b_hz")
    ka_mid = (ka_i[0] + ka_i[1] + ka_c[0] + ka_c[1]) / 2
    kb_mid = (kb[0] + kb[1]) / 2

    resc = calib.rescale_axes(curve, ka_mid, kb_mid)
    fit = calib.fit_g2(resc, ka_mid, kb_mid, dim)
    lo, hi, _ = calib.propagate_g2_interval(curve, ka_i, ka_c, kb, dim)
    report = {
        "g2_hz": fit.g2 / TWO_PI,
        "interval_hz": [lo / TWO_PI, hi / TWO_PI],
        "residual": fit.residual,
        "settings": {"dim": dim, "fit_domain": list(fit.domain),
                     "n_points": fit.n_points},
    }
    path = out_path(args, "calibration.json")
    with open(path, "w") as fh:
        json.dump({"command": "calibrate", "config": cfg, "report": report,
                   "version": __version__}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"calibrate: g2 = {report['g2_hz']:.6g} Hz in "
          f"[{report['interval_hz'][0]:.6g}, {report['interval_hz'][1]:.6g}] -> {path}")
    return 0


def _ats_params(cfg) -> ats.AtsParams:
    return ats.AtsParams(
        e_c=need(cfg, "e_c_hz", positive=True),
        e_l=need(cfg, "e_l_hz", positive=True),
        e_j=need(cfg, "e_j_hz", positive=True),
        de_j=need(cfg, "de_j_hz", nonnegative=True),
        upsilon=need(cfg, "upsilon", positive=True),
        f_a0=need(cfg, "f_a0_hz", positive=True),
    )


def cmd_flux_map(args) -> int:
    cfg = resolve(load_config(args.config), args, ["params", "points", "dim_a", "dim_b"])
    pfile = cfg.get("params")
    pcfg = dict(load_config(pfile)) if pfile else dict(cfg)
    p = _ats_params(pcfg)
    n = int(optional(cfg, "points", 51))
    dims = (int(optional(cfg, "dim_a", 8)), int(optional(cfg, "dim_b", 12)))
    s_grid = np.linspace(0.0, np.pi, n)
    d_grid = np.linspace(-np.pi / 2, np.pi / 2, n)
    fm = ats.flux_map(p, s_grid, d_grid, dims=dims, max_workers=thread_count())

    full_cfg = dict(cfg, resolved_params=pcfg)
    for name, body in (("fluxmap_buffer.csv", fm.f_buffer),
                       ("fluxmap_memory.csv", fm.f_memory),
                       ("fluxmap_ambiguous.csv", fm.ambiguous.astype(int))):
        write_map(out_path(args, name), "flux-map", full_cfg,
                  "phi_sum\\phi_diff", d_grid, s_grid, body)
    print(f"flux-map: {n}x{n} maps, buffer range "
          f"[{fm.f_buffer.min():.4g}, {fm.f_buffer.max():.4g}] Hz -> "
          f"{out_path(args, 'fluxmap_buffer.csv')}")
    return 0


def cmd_extract(args) -> int:
    cfg = resolve(load_config(args.config), args, ["fb1", "fb2", "fbmax", "ec"])
    e_l, de_j, e_j = ats.extract_params(
        need(cfg, "fb1", positive=True), need(cfg, "fb2", positive=True),
        need(cfg, "fbmax", positive=True), need(cfg, "ec", positive=True))
    report = {"e_l_hz": e_l, "de_j_hz": de_j, "e_j_hz": e_j}
    path = out_path(args, "extract.json")
    with open(path, "w") as fh:
        json.dump({"command": "extract", "config": cfg, "report": report,
                   "version": __version__}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"extract: E_L = {e_l:.6g} Hz, dE_J = {de_j:.6g} Hz, "
          f"E_J = {e_j:.6g} Hz -> {path}")
    return 0


def cmd_efficiency_rig(args) -> int:
    cfg = resolve(load_config(args.config), args,
                  ["params", "omega_a_hz", "omega_q_hz", "dim_a", "points", "seed"])
    pfile = cfg.get("params")
    pcfg = dict(load_config(pfile)) if pfile else dict(cfg)
    rig = calib.EfficiencyRigSpec(
        t1=need(pcfg, "t1_s", positive=True),
        t2=need(pcfg, "t2_s", positive=True),
        chi=TWO_PI * need(pcfg, "chi_hz", positive=True),
        kappa_a_c=TWO_PI * need(pcfg, "kappa_a_c_hz", positive=True),
        kappa_a_i=TWO_PI * need(pcfg, "kappa_a_i_hz", nonnegative=True),
    )
    omega_a = TWO_PI * need(cfg, "omega_a_hz", nonnegative=True)
    omega_q = TWO_PI * need(cfg, "omega_q_hz", nonnegative=True)
    n = int(optional(cfg, "points", 61))
    dim_a = int(optional(cfg, "dim_a", 10))
    span = optional(cfg, "delta_q_span_chi", 3.2)
    grid = np.linspace(-0.6, span - 0.6, n) * rig.chi
    resp = calib.qubit_numbersplit(rig, grid, omega_a, omega_q, dim_a=dim_a)

    rows = zip(grid / TWO_PI, resp.a_amp.real, resp.a_amp.imag, resp.nbar,
               resp.qubit_pop)
    path = out_path(args, "efficiency_rig.csv")
    write_table(path, "efficiency-rig", dict(cfg, resolved_params=pcfg),
                ["delta_q_hz", "re_a", "im_a", "nbar", "qubit_pop"], rows)

    summary = f"efficiency-rig: {n} detunings"
    if cfg.get("emulate_eta") is not None:
        seed = int(need(cfg, "seed", int))
        eta_true = float(cfg["emulate_eta"])
        far = int(np.argmax(np.abs(grid)))  # far-detuned, qubit idle
        nbar = float(resp.nbar[far])
        meta = hetero.RecordMeta(gain=optional(cfg, "gain", 1.0),
                                 t_m=optional(cfg, "tm_s", 1e-3),
                                 eta=eta_true, kappa_c=rig.kappa_a_c)
        series = hetero.synth_telegraph(nbar, np.inf, meta,
                                        optional(cfg, "duration_s", 50.0), seed)
        eta_est = hetero.efficiency_from_coherent(series, nbar, rig.kappa_a_c)
        report = {"eta_true": eta_true, "eta_recovered": eta_est, "nbar": nbar}
        jpath = out_path(args, "efficiency_rig.json")
        with open(jpath, "w") as fh:
            json.dump({"command": "efficiency-rig", "config": cfg,
                       "report": report, "version": __version__},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
        summary += f", eta round trip {eta_true} -> {eta_est:.4g}"
    print(summary + f" -> {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="twophoton",
        description="Two-photon dissipative oscillator simulation toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("steady-scan", help="classical vs quantum drive sweep")
    common(p)
    p.add_argument("--g2-hz", dest="g2_hz", type=float)
    p.add_argument("--kappa-a-hz", dest="kappa_a_hz", type=float)
    p.add_argument("--kappa-b-hz", dest="kappa_b_hz", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--no-quantum", action="store_true")
    p.set_defaults(func=cmd_steady_scan)

    p = sub.add_parser("diamond", help="detuning-plane photon number map")
    common(p)
    p.add_argument("--g2-hz", dest="g2_hz", type=float)
    p.add_argument("--eps-d-hz", dest="eps_d_hz", type=float)
    p.add_argument("--kappa-a-hz", dest="kappa_a_hz", type=float)
    p.add_argument("--kappa-b-hz", dest="kappa_b_hz", type=float)
    p.add_argument("--points", type=int)
    p.set_defaults(func=cmd_diamond)

    p = sub.add_parser("trajectory", help="synthesize a heterodyne record")
    common(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--surrogate", action="store_true", default=True)
    group.add_argument("--sme", action="store_true")
    p.add_argument("--nbar", type=float)
    p.add_argument("--tbf", dest="tbf_s", type=float)
    p.add_argument("--tm", dest="tm_s", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--kappa-c-hz", dest="kappa_c_hz", type=float)
    p.add_argument("--gain", type=float)
    p.add_argument("--dur", dest="duration_s", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--eps2-hz", dest="eps2_hz", type=float)
    p.add_argument("--kappa2-hz", dest="kappa2_hz", type=float)
    p.add_argument("--kappa-a-hz", dest="kappa_a_hz", type=float)
    p.add_argument("--dim", type=int)
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("jumps", help="dwell statistics of a recorded trajectory")
    common(p)
    p.add_argument("--input", help="trajectory CSV")
    p.add_argument("--hysteresis", type=float)
    p.set_defaults(func=cmd_jumps)

    p = sub.add_parser("bitflip-scan", help="bit-flip time vs photon number")
    common(p)
    p.add_argument("--quantum", action="store_true",
                   help="spectral-gap scan of the reduced model")
    p.add_argument("--seed", type=int)
    p.add_argument("--tm", dest="tm_s", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--kappa-c-hz", dest="kappa_c_hz", type=float)
    p.add_argument("--gain", type=float)
    p.add_argument("--dur", dest="duration_s", type=float)
    p.add_argument("--kappa2-hz", dest="kappa2_hz", type=float)
    p.add_argument("--kappa-a-hz", dest="kappa_a_hz", type=float)
    p.set_defaults(func=cmd_bitflip_scan)

    p = sub.add_parser("calibrate", help="fit g2 from a radiated-power curve")
    common(p)
    p.add_argument("--curve", help="CSV with drive, power columns")
    p.add_argument("--rates", help="JSON with kappa ranges")
    p.add_argument("--dim", type=int)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("flux-map", help="mode frequencies over one flux cell")
    common(p)
    p.add_argument("--params", help="JSON with circuit energies")
    p.add_argument("--points", type=int)
    p.add_argument("--dim-a", dest="dim_a", type=int)
    p.add_argument("--dim-b", dest="dim_b", type=int)
    p.set_defaults(func=cmd_flux_map)

    p = sub.add_parser("extract", help="circuit energies from landmark frequencies")
    common(p)
    p.add_argument("--fb1", type=float)
    p.add_argument("--fb2", type=float)
    p.add_argument("--fbmax", type=float)
    p.add_argument("--ec", type=float)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("efficiency-rig", help="dispersive qubit calibration rig")
    common(p)
    p.add_argument("--params", help="JSON with rig parameters")
    p.add_argument("--omega-a-hz", dest="omega_a_hz", type=float)
    p.add_argument("--omega-q-hz", dest="omega_q_hz", type=float)
    p.add_argument("--dim-a", dest="dim_a", type=int)
    p.add_argument("--points", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_efficiency_rig)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except SOLVER_ERRORS as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
