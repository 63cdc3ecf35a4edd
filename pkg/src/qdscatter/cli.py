"""Command-line driver: one scenario per invocation, data files out.

    qdscatter SCENARIO [--config PATH] [--out DIR] [--set section.key=value ...]

Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .atomic import AtomicParams, atomic_bundle
from .correlations import fringe_contrast
from .fitting import (area_fractions_from_spectra, extract_fractions_from_plateaus,
                      fit_phonon_params, g1_fit_model, gaussian_fwhm_mev,
                      synthetic_spectra)
from .pipeline import omega_for_saturation, purcell_rate, run_point, saturation_of, tables_for
from .sweeps import detuning_sweep, saturation_sweep
from .units import (HBAR, DriveParams, ParameterError, apply_overrides, bundle_from_mapping,
                    mev_to_angfreq, read_config)

log = logging.getLogger("qdscatter")

SCENARIOS = ("g1-trace", "spectrum", "saturation-sweep", "detuning-sweep", "fit-phonon",
             "fit-spectra")
CONFIG_DIR_ENV = "QDSCATTER_CONFIG_DIR"

DEFAULTS = {
    "saturation": "0.25",
    "saturations": "0.01,0.03,0.1,0.25,0.5,1,2,4,10",
    "deltas_mev": "-1.0:1.0:0.01",
    "spectra_at_mev": "-0.27,0,0.27",
    "window_mev": "5",
    "frame": "laser",
    "t_phonon": "15",
    "t_rad": "200",
    "noise_level": "0.01",
    "low_dtau": "20",
    "high_dtau": "1000",
    "source": "model",
}


class UsageError(ValueError):
    pass


# --- config plumbing -----------------------------------------------------------

def resolve_config_path(name):
    if name is None:
        return None
    p = Path(name)
    if not p.is_file() and not p.is_absolute() and os.environ.get(CONFIG_DIR_ENV):
        alt = Path(os.environ[CONFIG_DIR_ENV]) / name
        if alt.is_file():
            return alt
    return p


def load(args):
    path = resolve_config_path(args.config)
    values = read_config(path) if path is not None else {}
    apply_overrides(values, args.set)
    user = values.pop("scenario", {})
    scen = dict(DEFAULTS)
    scen.update(user)
    scen["_user"] = set(user)
    bundle = bundle_from_mapping(values)
    return bundle, scen


def floats(text):
    """'a,b,c' or 'start:stop:step' (inclusive stop)."""
    text = str(text).strip()
    try:
        if ":" in text:
            a, b, c = (float(x) for x in text.split(":"))
            n = int(round((b - a) / c))
            return np.round(a + c * np.arange(n + 1), 10)
        return np.array([float(x) for x in text.split(",") if x.strip()])
    except ValueError:
        raise UsageError(f"cannot parse number list {text!r}") from None


def scen_float(scen, key):
    try:
        return float(scen[key])
    except (KeyError, ValueError):
        raise UsageError(f"scenario.{key} must be a number, got {scen.get(key)!r}") from None


def drive_for(bundle, scen, tables):
    """A configured scenario.saturation sets the drive; else a non-zero drive.omega is kept."""
    if bundle.drive.omega > 0 and "saturation" not in scen["_user"]:
        return bundle
    gp = purcell_rate(bundle, tables)
    om = omega_for_saturation(scen_float(scen, "saturation"), gp, tables.b_factor,
                              bundle.drive.delta_lx)
    return replace(bundle, drive=DriveParams(om, bundle.drive.delta_lx))


# --- scenarios -----------------------------------------------------------------

def run_g1_trace(bundle, scen, out, args):
    tables = tables_for(bundle)
    bundle = drive_for(bundle, scen, tables)
    res = run_point(bundle, tables)
    eps = bundle.noise.epsilon
    gd = res.g_detected
    v = fringe_contrast(gd, eps)
    gp = res.liouvillian.em.gamma_p
    t1 = 1 / gp
    ap = AtomicParams(t1, 2 * t1, res.liouvillian.omega_r, bundle.drive.delta_lx)
    ab = atomic_bundle(ap, bundle.numerics, bundle.cavity)
    ar = run_point(replace(ab, options=bundle.options), pure_dephasing=ap.pure_dephasing)
    av = fringe_contrast(ar.g_detected, eps)
    meta = io.metadata_block(args.scenario, bundle, _public(scen))
    io.write_csv(out / "g1.csv", {
        "tau_ps": gd.taus, "re_g1": gd.values.real, "im_g1": gd.values.imag,
        "abs_g1_norm": np.abs(gd.values) / gd.values[0].real, "v": v,
        "atomic_abs_g1_norm": np.abs(ar.g_detected.values) / ar.g_detected.values[0].real,
        "atomic_v": av}, meta)
    io.write_csv(out / "fringe.csv", {"tau_ps": gd.taus, "v": v, "atomic_v": av}, meta)
    try:
        plateau = extract_fractions_from_plateaus(gd.taus, v, scen_float(scen, "t_phonon"),
                                                  scen_float(scen, "t_rad")).as_dict()
        plateau_note = None
    except ValueError as e:
        # a short trace is still a valid trace; only the plateau reading is skipped
        log.warning("plateau fractions skipped: %s", e)
        plateau, plateau_note = None, str(e)
    result = {"fractions": res.fractions.as_dict(), "plateau_fractions": plateau,
              "plateau_note": plateau_note,
              "atomic_fractions": ar.fractions.as_dict(),
              "saturation": saturation_of(bundle.drive.omega, gp, res.liouvillian.b_factor,
                                          bundle.drive.delta_lx),
              "omega_ps_inv": bundle.drive.omega, "gamma_p_ps_inv": gp,
              "b_squared": res.liouvillian.b_factor**2}
    io.write_json(out / "fractions.json", result, meta)
    _extras(res, tables, out, meta, args)
    return result


def _spectrum_columns(res, scen, delta_lx):
    sp = res.spectrum
    e = sp.omegas * HBAR
    keep = np.abs(e) <= scen_float(scen, "window_mev")
    shift = delta_lx * HBAR if scen.get("frame", "laser") == "exciton" else 0.0
    h = sp.h if sp.h is not None else np.ones_like(sp.omegas)
    return {"omega_ps_inv": sp.omegas[keep] + shift / HBAR, "omega_meV": e[keep] + shift,
            "s_opt": sp.s_opt[keep], "s_sb": sp.s_sb[keep],
            "s_total_filtered": (h * (sp.s_opt + sp.s_sb))[keep]}


def run_spectrum(bundle, scen, out, args):
    if scen.get("frame", "laser") not in ("laser", "exciton"):
        raise UsageError("scenario.frame must be 'laser' or 'exciton'")
    tables = tables_for(bundle)
    bundle = drive_for(bundle, scen, tables)
    res = run_point(bundle, tables)
    meta = io.metadata_block(args.scenario, bundle, _public(scen))
    io.write_csv(out / "spectrum.csv", _spectrum_columns(res, scen, bundle.drive.delta_lx), meta)
    result = {"fractions": res.fractions.as_dict(),
              "coherent_weight_filtered": res.powers[0],
              "coherent_line_omega_ps_inv": 0.0}
    io.write_json(out / "fractions.json", result, meta)
    _extras(res, tables, out, meta, args)
    return result


def run_saturation_sweep(bundle, scen, out, args):
    tables = tables_for(bundle)
    sw = saturation_sweep(bundle, floats(scen["saturations"]), tables, args.workers)
    meta = io.metadata_block(args.scenario, bundle, _public(scen))
    io.write_csv(out / "saturation_sweep.csv", sw.columns(), meta)
    return {"gamma_p_ps_inv": sw.gamma_p}


def run_detuning_sweep(bundle, scen, out, args):
    if bundle.drive.omega <= 0:
        raise UsageError("detuning-sweep needs drive.omega > 0 (e.g. --set drive.omega=25.6ueV)")
    tables = tables_for(bundle)
    deltas = mev_to_angfreq(floats(scen["deltas_mev"]))
    sw = detuning_sweep(bundle, deltas, tables, args.workers)
    meta = io.metadata_block(args.scenario, bundle, _public(scen))
    io.write_csv(out / "detuning_sweep.csv", sw.columns(HBAR), meta)
    for d in floats(scen["spectra_at_mev"]):
        b = replace(bundle, drive=DriveParams(bundle.drive.omega, mev_to_angfreq(d)))
        res = run_point(b, tables)
        io.write_csv(out / f"spectrum_{d:+.3f}meV.csv", _spectrum_columns(res, scen, b.drive.delta_lx),
                     meta)
    return {"points": int(deltas.size)}


def run_fit_phonon(bundle, scen, out, args):
    tables = tables_for(bundle)
    cav = None
    if "data" in scen:
        tau, v, err = io.read_g1_data(scen["data"])
    else:
        # synthesize data from the configured parameters: the fit model itself
        # (source=model) or the full driven pipeline (source=pipeline)
        source = scen.get("source", "model")
        if source not in ("model", "pipeline"):
            raise UsageError("scenario.source must be 'model' or 'pipeline'")
        bundle = drive_for(bundle, scen, tables)
        res = run_point(bundle, tables)
        cav = res.filter
        keep = tables.taus <= scen_float(scen, "t_phonon")
        tau = tables.taus[keep]
        if source == "model":
            p = bundle.phonon
            v = (1 - bundle.noise.epsilon) * g1_fit_model(tau, p.alpha, p.nu_c, cav, p.temperature)
        else:
            v = fringe_contrast(res.g_detected, bundle.noise.epsilon)[keep]
        level = scen_float(scen, "noise_level")
        rng = np.random.default_rng(args.seed)
        v = v * (1 + level * rng.standard_normal(v.size))
        err = np.full(v.size, level) * v if level > 0 else None
        io.write_csv(out / "synthetic_g1.csv",
                     {"tau_ps": tau, "v": v, **({"v_err": err} if err is not None else {})},
                     io.metadata_block(args.scenario, bundle, _public(scen)))
    if cav is None:
        from .cavity import filter_from_params
        cav = filter_from_params(bundle.cavity, bundle.drive, bundle.options)
    init = (float(scen.get("init_alpha", bundle.phonon.alpha)),
            float(scen.get("init_nu_c", bundle.phonon.nu_c)))
    fr = fit_phonon_params(tau, v, err, cav, init, bundle.noise.epsilon,
                           bundle.phonon.temperature, scen_float(scen, "t_phonon"))
    meta = io.metadata_block(args.scenario, bundle, _public(scen))
    io.write_json(out / "fit_phonon.json", fr.as_dict(), meta)
    keep = tau <= scen_float(scen, "t_phonon")
    model = (1 - bundle.noise.epsilon) * g1_fit_model(tau[keep], fr.params["alpha"],
                                                      fr.params["nu_c"], cav,
                                                      bundle.phonon.temperature)
    io.write_csv(out / "fit_overlay.csv", {"tau_ps": tau[keep], "v": v[keep], "model": model}, meta)
    if not fr.converged:
        raise RuntimeError("phonon fit did not converge")
    return fr.as_dict()


def run_fit_spectra(bundle, scen, out, args):
    direct = None
    if "low_res" in scen and "high_res" in scen:
        low = io.read_spectrum_data(scen["low_res"])
        high = io.read_spectrum_data(scen["high_res"])
    else:
        tables = tables_for(bundle)
        bundle = drive_for(bundle, scen, tables)
        res = run_point(bundle, tables)
        direct = res.fractions.as_dict()
        low, high = synthetic_spectra(res, scen_float(scen, "low_dtau"), scen_float(scen, "high_dtau"))
        meta = io.metadata_block(args.scenario, bundle, _public(scen))
        io.write_csv(out / "synthetic_low_res.csv", {"energy_meV": low[0], "counts": low[1]}, meta)
        io.write_csv(out / "synthetic_high_res.csv", {"energy_meV": high[0], "counts": high[1]}, meta)
        if not np.isfinite(bundle.noise.instrument_dtau):
            bundle = replace(bundle, noise=replace(bundle.noise,
                                                   instrument_dtau=scen_float(scen, "low_dtau")))
        scen.setdefault("high_res_fwhm_ueV",
                        str(gaussian_fwhm_mev(scen_float(scen, "high_dtau")) * 1e3))
    meta = io.metadata_block(args.scenario, bundle, _public(scen))
    hw = float(scen["high_res_fwhm_ueV"]) * 1e-3 if "high_res_fwhm_ueV" in scen else None
    fsr = float(scen["fsr_ueV"]) * 1e-3 if "fsr_ueV" in scen else None
    fr, details = area_fractions_from_spectra(low, high, bundle.noise, hw, fsr)
    result = {"fractions": fr.as_dict(), "areas": details}
    if direct is not None:
        result["forward_model_fractions"] = direct
    io.write_json(out / "fit_spectra.json", result, meta)
    return result


def _extras(res, tables, out, meta, args):
    if args.phonon_csv:
        g = tables.g_corr()
        io.write_csv(out / "phonon.csv", {"tau_ps": tables.taus, "re_phi": tables.phi.real,
                                          "im_phi": tables.phi.imag, "re_G": g.real,
                                          "im_G": g.imag}, meta)
    if args.verbose:
        io.write_json(out / "diagnostics.json", res.diagnostics(), meta)


def _public(scen):
    return {k: v for k, v in sorted(scen.items()) if not k.startswith("_")}


RUNNERS = {
    "g1-trace": run_g1_trace,
    "spectrum": run_spectrum,
    "saturation-sweep": run_saturation_sweep,
    "detuning-sweep": run_detuning_sweep,
    "fit-phonon": run_fit_phonon,
    "fit-spectra": run_fit_spectra,
}


def build_parser():
    p = argparse.ArgumentParser(prog="qdscatter", description=__doc__.split("\n")[0])
    p.add_argument("scenario", choices=SCENARIOS)
    p.add_argument("--config", help=f"INI config file (relative names also searched in ${CONFIG_DIR_ENV})")
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override, e.g. phonon.alpha=0 or scenario.saturation=1")
    p.add_argument("--workers", type=int, default=1, help="processes for sweep points")
    p.add_argument("--seed", type=int, default=0, help="seed for synthetic noise")
    p.add_argument("--phonon-csv", action="store_true", help="also dump the phonon tables")
    p.add_argument("--verbose", "-v", action="store_true", help="log progress, write diagnostics.json")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")
        bundle, scen = load(args)
        for w in bundle.warnings:
            log.warning("%s: %s", w.field, w.message)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise UsageError(f"output directory not writable: {out}")
        RUNNERS[args.scenario](bundle, scen, out, args)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ParameterError as e:
        print("error: invalid parameters:\n  " + "\n  ".join(e.problems), file=sys.stderr)
        return 2
    except (UsageError, io.DataError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (RuntimeError, ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
