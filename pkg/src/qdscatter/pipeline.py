"""One parameter point end to end: generator, correlations, spectra, fractions."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .cavity import detect_g1, filter_from_params
from .correlations import g1_opt, polaron_g1
from .dynamics import build_liouvillian, eigensystem, em_rates, steady_state
from .noise import gamma_of_detuning
from .phonons import build_tables
from .spectra import compute_spectrum, fractions, powers
from .units import PhononParams, validate_params


@dataclass(frozen=True)
class PointResult:
    bundle: object
    liouvillian: object
    rho_ss: object
    g_opt: object
    g_pol: object
    g_detected: object
    spectrum: object
    fractions: object
    filter: object
    powers: tuple
    pure_dephasing: float

    def diagnostics(self):
        d = self.liouvillian.diagnostics()
        d["rho_xx"] = float(self.rho_ss[1, 1].real)
        d["min_eig_rho"] = float(min(abs_eig.real for abs_eig in _eigvals(self.rho_ss)))
        d["warnings"] = [f"{w.field}: {w.message}" for w in self.bundle.warnings]
        return d


def _eigvals(rho):
    import numpy as np
    return np.linalg.eigvalsh(rho)


def tables_for(bundle):
    return build_tables(bundle.phonon, bundle.numerics)


def purcell_rate(bundle, tables=None):
    tables = tables or tables_for(bundle)
    return em_rates(tables, bundle.cavity, bundle.drive, bundle.options).gamma_p


def natural_linewidth(bundle, tables=None):
    """Emitter natural linewidth (angular FWHM), the Purcell rate of the phonon-on model."""
    return purcell_rate(bundle, tables)


def omega_for_saturation(s, gamma_p, b_factor=1.0, delta_lx=0.0, t1=None, t2=None):
    """Bare Rabi frequency giving saturation s.

    Defaults T1 = 1/Gamma_P and T2 = 2 T1. The saturation is defined on the
    Rabi frequency that drives the zero-phonon line, Omega_R = Omega B.
    """
    t1 = t1 if t1 is not None else 1.0 / gamma_p
    t2 = t2 if t2 is not None else 2.0 * t1
    omega_r = math.sqrt(s * (1 + (delta_lx * t2) ** 2) / (t1 * t2))
    return omega_r / b_factor


def saturation_of(omega, gamma_p, b_factor=1.0, delta_lx=0.0):
    t1 = 1.0 / gamma_p
    t2 = 2 * t1
    return (omega * b_factor) ** 2 * t1 * t2 / (1 + (delta_lx * t2) ** 2)


def dephasing_for(bundle, tables):
    n = bundle.noise
    if not n.gamma_max:
        return 0.0
    xi = n.xi if n.xi is not None else natural_linewidth(bundle, tables)
    return gamma_of_detuning(bundle.drive.delta_lx, replace(n, xi=xi))


def run_point(bundle, tables=None, pure_dephasing=None, filtered=True):
    """Evaluate every observable at one parameter point."""
    bundle = validate_params(bundle)
    tables = tables or tables_for(bundle)
    if pure_dephasing is None:
        pure_dephasing = dephasing_for(bundle, tables)
    L = build_liouvillian(tables, bundle.drive, bundle.cavity, bundle.noise,
                          pure_dephasing=pure_dephasing, options=bundle.options)
    es = eigensystem(L)
    rho = steady_state(L, bundle.numerics.ss_tol, es=es)
    g = g1_opt(L, rho, tables.taus, es=es)
    gp = polaron_g1(g, tables)
    f = filter_from_params(bundle.cavity, bundle.drive, bundle.options)
    gd = detect_g1(gp, f)
    # resolve the zero-phonon line: frequency step at most Gamma_P / 20
    spec = compute_spectrum(g, tables, f, bundle.numerics.fft_size,
                            max_domega=L.em.gamma_p / 20 if L.em.gamma_p > 0 else None)
    use_f = f if filtered else None
    fr = fractions(spec, use_f)
    return PointResult(bundle, L, rho, g, gp, gd, spec, fr, f, powers(spec, use_f),
                       float(pure_dephasing))


def default_bundle(**drive):
    """Default parameter set: quantum dot in a low-Q micropillar at 4.2 K."""
    from .units import DriveParams
    b = validate_params(phonon=PhononParams())
    if drive:
        b = replace(b, drive=DriveParams(**drive))
    return b
