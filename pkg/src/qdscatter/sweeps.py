"""Parameter sweeps over drive strength and laser detuning.

Points are independent; with ``workers > 1`` they run in a process pool that
receives the phonon tables once. Results always come back in input order.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .atomic import AtomicParams, coherent_fraction_atomic
from .noise import PowerCurves, wandering_fraction
from .pipeline import dephasing_for, omega_for_saturation, purcell_rate, run_point, tables_for
from .units import DriveParams

_TABLES = None


def _init(tables):
    global _TABLES
    _TABLES = tables


def _summary(args):
    bundle, dephasing = args
    r = run_point(bundle, _TABLES, pure_dephasing=dephasing)
    p_coh, p_inc, p_psb = r.powers
    fr = r.fractions
    return {"p_coh": p_coh, "p_inc": p_inc, "p_psb": p_psb,
            "f_cs": fr.f_cs, "f_inc": fr.f_inc, "f_psb": fr.f_psb,
            "rho_xx": float(r.rho_ss[1, 1].real)}


def map_points(jobs, tables, workers=1):
    """Evaluate [(bundle, pure_dephasing), ...] with shared tables."""
    if workers <= 1 or len(jobs) < 2:
        _init(tables)
        return [_summary(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init, initargs=(tables,)) as ex:
        return list(ex.map(_summary, jobs))


@dataclass(frozen=True)
class SaturationSweep:
    saturations: np.ndarray
    omegas: np.ndarray
    f_cs: np.ndarray
    f_inc: np.ndarray
    f_psb: np.ndarray
    atomic_f_cs: np.ndarray
    gamma_p: float

    def columns(self):
        return {"s": self.saturations, "omega_ps_inv": self.omegas, "f_cs": self.f_cs,
                "f_inc": self.f_inc, "f_psb": self.f_psb, "atomic_f_cs": self.atomic_f_cs,
                "atomic_f_inc": 1 - self.atomic_f_cs}


def saturation_sweep(bundle, saturations, tables=None, workers=1):
    """Resonant-or-detuned sweep labelled by saturation (T1 = 1/Gamma_P, T2 = 2 T1)."""
    tables = tables or tables_for(bundle)
    gp = purcell_rate(bundle, tables)
    d = bundle.drive.delta_lx
    s = np.asarray(saturations, dtype=float)
    oms = np.array([omega_for_saturation(x, gp, tables.b_factor, d) for x in s])
    jobs = [(replace(bundle, drive=DriveParams(om, d)), None) for om in oms]
    res = map_points(jobs, tables, workers)
    t1 = 1 / gp
    atomic = np.array([coherent_fraction_atomic(AtomicParams(t1, 2 * t1, om * tables.b_factor, d))
                       for om in oms])
    col = lambda k: np.array([r[k] for r in res])
    return SaturationSweep(s, oms, col("f_cs"), col("f_inc"), col("f_psb"), atomic, gp)


@dataclass(frozen=True)
class DetuningSweep:
    deltas: np.ndarray
    p_tot: np.ndarray
    p_coh: np.ndarray
    f_cs_raw: np.ndarray
    f_cs_dephased: np.ndarray
    f_cs_wandered: np.ndarray
    p_tot_dephased: np.ndarray
    p_coh_dephased: np.ndarray

    def columns(self, hbar):
        return {"delta_meV": self.deltas * hbar, "p_tot": self.p_tot, "p_coh": self.p_coh,
                "f_cs_raw": self.f_cs_raw, "f_cs_dephased": self.f_cs_dephased,
                "f_cs_wandered": self.f_cs_wandered}

    def at(self, delta, which="wandered"):
        arr = {"raw": self.f_cs_raw, "dephased": self.f_cs_dephased,
               "wandered": self.f_cs_wandered}[which]
        return float(np.interp(delta, self.deltas, arr))


def detuning_sweep(bundle, deltas, tables=None, workers=1):
    """F_CS versus laser detuning at fixed bare Rabi frequency.

    Raw: no extra dephasing. Dephased: gamma(Delta) from the noise section.
    Wandered: dephased powers smeared by the wandering FWHM (unchanged if 0).
    """
    tables = tables or tables_for(bundle)
    deltas = np.asarray(deltas, dtype=float)
    om = bundle.drive.omega
    bundles = [replace(bundle, drive=DriveParams(om, float(d))) for d in deltas]
    jobs = [(b, 0.0) for b in bundles]
    noisy = bundle.noise.gamma_max > 0
    if noisy:
        jobs += [(b, dephasing_for(b, tables)) for b in bundles]
    res = map_points(jobs, tables, workers)
    n = deltas.size

    def curves(part):
        p_coh = np.array([r["p_coh"] for r in part])
        p_tot = np.array([r["p_coh"] + r["p_inc"] + r["p_psb"] for r in part])
        return p_tot, p_coh

    tot, coh = curves(res[:n])
    tot_d, coh_d = curves(res[n:]) if noisy else (tot, coh)
    fw = bundle.noise.wandering_fwhm
    wand = wandering_fraction(PowerCurves(deltas, tot_d, coh_d), fw) if fw > 0 else coh_d / tot_d
    return DetuningSweep(deltas, tot, coh, coh / tot, coh_d / tot_d, wand, tot_d, coh_d)
