"""Parameter extraction: short-time phonon fit, plateau and area-based fractions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit, least_squares
from scipy.special import voigt_profile

from .cavity import FilterSpec, detect_g1
from .correlations import CorrelationTrace
from .phonons import build_tables
from .spectra import EmissionFractions
from .units import HBAR, NumericsParams, PhononParams

T_PHONON = 15.0
T_RAD = 200.0


class FitError(RuntimeError):
    def __init__(self, component, message):
        self.component = component
        super().__init__(f"{component}: {message}")


@dataclass
class FitResult:
    params: dict
    residual_rms: float
    iterations: int
    converged: bool
    covariance_estimate: np.ndarray | None = None
    flags: list = field(default_factory=list)

    def as_dict(self):
        cov = None if self.covariance_estimate is None else self.covariance_estimate.tolist()
        return {"params": self.params, "residual_rms": self.residual_rms,
                "iterations": self.iterations, "converged": self.converged,
                "covariance_estimate": cov, "flags": list(self.flags)}


# --- short-time phonon model -------------------------------------------------

def _fit_grid(tau_max, dtau=0.02):
    n = int(math.ceil(max(tau_max + 10.0, 40.0) / dtau))
    return np.arange(n + 1) * dtau


def g1_fit_model(tau, alpha, nu_c, cavity, temperature=4.2, quad_points=1024, dtau=0.02):
    """Normalised cavity-filtered phonon correlation with the zero-phonon part frozen.

    |g_F(tau)| with g_F(0) = 1. Valid for the first ~15 ps where radiative decay
    of the zero-phonon line is negligible.
    """
    tau = np.asarray(tau, dtype=float)
    taus = _fit_grid(float(np.max(tau)) if tau.size else 0.0, dtau)
    p = PhononParams(alpha=max(alpha, 0.0), nu_c=nu_c, temperature=temperature)
    num = NumericsParams(quad_points=quad_points, tau_max=taus[-1], dtau=dtau)
    tables = build_tables(p, num, taus)
    g = tables.g_corr()
    trace = CorrelationTrace(taus, g, tables.b2 + 0j)
    if not isinstance(cavity, FilterSpec):
        cavity = FilterSpec(0.0, cavity.kappa)
    gd = detect_g1(trace, cavity)
    mag = np.abs(gd.values) / gd.values[0].real
    return np.interp(tau, taus, mag)


def fit_phonon_params(tau, v, err=None, cavity=None, init=(0.0447, 1.28), epsilon=0.02,
                      temperature=4.2, t_max=T_PHONON, max_nfev=200):
    """Least-squares fit of (alpha, nu_c) to fringe-contrast data below t_max.

    Residuals are error-weighted when errors are supplied, uniform otherwise.
    Uses a bounded trust-region solver with central-difference Jacobian.
    """
    tau = np.asarray(tau, dtype=float)
    v = np.asarray(v, dtype=float)
    keep = tau <= t_max
    tau, v = tau[keep], v[keep]
    if err is not None:
        err = np.asarray(err, dtype=float)[keep]
        if np.any(err <= 0):
            err = None
    if tau.size < 8:
        raise FitError("phonon", f"need at least 8 points below {t_max} ps, got {tau.size}")
    cavity = cavity or FilterSpec(0.0, 2.51 / HBAR)
    w = 1.0 / err if err is not None else np.ones_like(v)
    scale = np.array([max(init[0], 1e-3), max(init[1], 1e-2)])

    def resid(x):
        a, nc = x * scale
        model = (1 - epsilon) * g1_fit_model(tau, a, nc, cavity, temperature)
        return (model - v) * w

    x0 = np.array([max(init[0], 0.0), init[1]]) / scale
    res = least_squares(resid, x0, jac="3-point", diff_step=1e-4, method="trf",
                        bounds=([0.0, 1e-6], [np.inf, np.inf]), x_scale=1.0,
                        xtol=1e-10, ftol=1e-12, gtol=1e-10, max_nfev=max_nfev)
    a, nc = res.x * scale
    fun = res.fun
    # flat data: the alpha = 0 boundary fits as well as any interior point
    at_zero = resid(np.array([0.0, res.x[1]]))
    if np.sum(at_zero**2) <= np.sum(fun**2) * (1 + 1e-6) + 1e-14:
        a, fun = 0.0, at_zero
    r = fun / w
    rms = float(np.sqrt(np.mean(r**2)))
    cov = None
    flags = []
    try:
        jtj = res.jac.T @ res.jac
        dof = max(tau.size - 2, 1)
        s2 = float(np.sum(fun**2) / dof) if err is None else 1.0
        cov = np.linalg.inv(jtj) * s2 * np.outer(scale, scale)
    except np.linalg.LinAlgError:
        flags.append("singular_jacobian")
    if a == 0.0 or res.active_mask[0] != 0:
        flags.append("alpha_at_lower_bound")
    return FitResult({"alpha": float(a), "nu_c": float(nc)}, rms, int(res.nfev),
                     bool(res.success and np.isfinite(rms)), cov, flags)


# --- fractions from the fringe contrast --------------------------------------

def extract_fractions_from_plateaus(tau, v, t_phonon=T_PHONON, t_rad=T_RAD, slope_tol=2e-3):
    """Split a fringe-contrast trace into sideband, incoherent and coherent parts.

    f_psb = 1 - v(t_phonon)/v(0), f_cs = plateau/v(0), f_inc the remainder.
    The plateau is the mean over tau >= max(t_rad, 0.6 tau_max); its drift
    across that window must stay below ``slope_tol`` v(0). Because v(0)
    carries the (1 - eps) factor, the ratios are eps-corrected.
    """
    tau = np.asarray(tau, dtype=float)
    v = np.asarray(v, dtype=float)
    tmax = tau[-1]
    if not 0 < t_phonon < t_rad < tmax:
        raise ValueError("markers must satisfy 0 < t_phonon < t_rad < tau_max")
    v0 = v[0]
    if not v0 > 0:
        raise ValueError("v(0) must be positive")
    tail = tau >= max(t_rad, 0.6 * tmax)
    if tail.sum() < 3:
        raise ValueError("too few points in the plateau window")
    slope = np.polyfit(tau[tail], v[tail], 1)[0]
    span = tau[tail][-1] - tau[tail][0]
    if abs(slope) * span > slope_tol * v0:
        raise ValueError(f"tail has not plateaued (drift {abs(slope) * span / v0:.2g} of v(0))")
    plateau = float(np.mean(v[tail]))
    v_ph = float(np.interp(t_phonon, tau, v))
    f_psb = 1.0 - v_ph / v0
    f_cs = plateau / v0
    return EmissionFractions(f_cs, 1.0 - f_cs - f_psb, f_psb)


# --- fractions from spectral areas -------------------------------------------

def instrument_fwhm_mev(noise):
    """Gaussian FWHM (meV) of the spectrometer response.

    The envelope exp(-tau^2/dtau^2) transforms to exp(-w^2 dtau^2/4), whose
    full width at half maximum is 4 sqrt(ln 2) / dtau.
    """
    if not np.isfinite(noise.instrument_dtau) or noise.instrument_dtau <= 0:
        return 0.0
    return gaussian_fwhm_mev(noise.instrument_dtau)


def gaussian_fwhm_mev(dtau):
    return 4 * math.sqrt(math.log(2)) / dtau * HBAR


def _gauss(x, area, x0, fwhm):
    s = fwhm / (2 * math.sqrt(2 * math.log(2)))
    return area * np.exp(-0.5 * ((x - x0) / s) ** 2) / (s * math.sqrt(2 * math.pi))


def _lorentz(x, area, x0, fwhm):
    hw = fwhm / 2
    return area * hw / math.pi / ((x - x0) ** 2 + hw**2)


def _voigt(x, area, x0, lor_fwhm, gau_fwhm):
    s = gau_fwhm / (2 * math.sqrt(2 * math.log(2)))
    return area * voigt_profile(x - x0, s, abs(lor_fwhm) / 2)


def fit_low_resolution(x, y, gauss_fwhm, core=None):
    """Voigt zero-phonon line (Gaussian width fixed) plus Gaussian sideband.

    A joint fit locates the line. The two components are then refined
    alternately: the sideband Gaussian on the wings (outside half-width
    ``core``, default three times the Voigt width) of the data minus the
    line, the Voigt on the data minus the sideband. The sideband extends
    under the line with a flat top that a joint fit lets the Voigt's
    Lorentzian wings absorb.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = abs(x[1] - x[0])
    i0 = int(np.argmax(y))
    total = float(np.sum(y) * dx)
    gw = max(gauss_fwhm, dx)
    span = x[-1] - x[0]

    def voigt(x, a_z, x0, lw):
        return _voigt(x, a_z, x0, lw, gw)

    def model(x, a_z, x0, lw, a_p, xp, wp):
        return voigt(x, a_z, x0, lw) + _gauss(x, a_p, xp, wp)

    def moments(wing, yy=y):
        a_w = float(np.sum(yy[wing]) * dx)
        if a_w <= 0:
            return [1e-12, x[i0], 10 * gw]
        xp = float(np.sum(x[wing] * yy[wing]) * dx / a_w)
        var = float(np.sum((x[wing] - xp) ** 2 * yy[wing]) * dx / a_w)
        return [a_w, xp, min(2.355 * math.sqrt(max(var, dx**2)), span)]

    g0 = moments(np.abs(x - x[i0]) > 3 * gw)
    p0 = [max(total - g0[0], 1e-12), x[i0], gw / 2] + g0
    lo = [0, x[0], 1e-9, 0, x[0], 2 * dx]
    hi = [np.inf, x[-1], span, np.inf, x[-1], span]
    try:
        popt, _ = curve_fit(model, x, y, p0=p0, bounds=(lo, hi), maxfev=20000)
        pz, pp = popt[:3], popt[3:]
        core = core if core is not None else 3 * (gw + pz[2])
        wing = np.abs(x - pz[1]) > core
        if wing.sum() < 5:
            raise ValueError("no sideband wings outside the line core")
        # alternate: sideband on the wings of (data - line), line on (data - sideband)
        for _ in range(4):
            rest = y - voigt(x, *pz)
            if np.sum(rest[wing]) * dx > 1e-9 * total:
                pp, _ = curve_fit(_gauss, x[wing], rest[wing], p0=moments(wing, rest), bounds=(lo[3:], hi[3:]),
                                  maxfev=20000)
            else:
                pp = np.array([0.0, pp[1], pp[2]])
            pz, _ = curve_fit(voigt, x, y - _gauss(x, *pp), p0=pz, bounds=(lo[:3], hi[:3]),
                              maxfev=20000)
    except (RuntimeError, ValueError) as e:
        raise FitError("zpl+psb (low resolution)", str(e)) from None
    return {"a_zpl": pz[0], "zpl_center": pz[1], "zpl_lorentz_fwhm": pz[2],
            "a_psb": pp[0], "psb_center": pp[1], "psb_fwhm": pp[2], "core": core}


def fit_high_resolution(x, y, gauss_fwhm=None, fsr=None):
    """Lorentzian (incoherent) plus Gaussian (coherent) with optional FSR replicas."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = abs(x[1] - x[0])
    i0 = int(np.argmax(y))
    total = float(np.sum(y) * dx)
    shifts = (0.0,) if not fsr else (-fsr, 0.0, fsr)

    def model(x, a_l, xl, wl, a_g, xg, wg):
        out = 0.0
        for s in shifts:
            out = out + _lorentz(x, a_l, xl + s, wl) + _gauss(x, a_g, xg + s, wg)
        return out

    span = x[-1] - x[0]
    wg0 = gauss_fwhm if gauss_fwhm else 3 * dx
    p0 = [0.5 * total, x[i0], span / 20, 0.5 * total, x[i0], wg0]
    lo = [0, x[0], dx / 2, 0, x[0], dx / 4]
    hi = [np.inf, x[-1], 2 * span, np.inf, x[-1], span]
    if gauss_fwhm:
        lo[5], hi[5] = gauss_fwhm * (1 - 1e-6), gauss_fwhm * (1 + 1e-6)
    try:
        popt, _ = curve_fit(model, x, y, p0=p0, bounds=(lo, hi), maxfev=20000)
    except (RuntimeError, ValueError) as e:
        raise FitError("coherent+incoherent (high resolution)", str(e)) from None
    return {"a_inc": popt[0], "inc_center": popt[1], "inc_fwhm": popt[2],
            "a_cs": popt[3], "cs_center": popt[4], "cs_fwhm": popt[5]}


def area_fractions_from_spectra(low_res, high_res, instrument, high_res_fwhm=None, fsr=None):
    """Fractions from fitted areas of a low- and a high-resolution spectrum.

    ``low_res`` and ``high_res`` are (energy_meV, counts) pairs.
    F_PSB = A_PSB / (A_PSB + A_ZPL); F_CS and F_INC split the zero-phonon
    share by the high-resolution areas.
    """
    low = fit_low_resolution(*low_res, instrument_fwhm_mev(instrument))
    high = fit_high_resolution(*high_res, high_res_fwhm, fsr)
    zpl_share = low["a_zpl"] / (low["a_psb"] + low["a_zpl"])
    cs_share = high["a_cs"] / (high["a_cs"] + high["a_inc"])
    f_cs = cs_share * zpl_share
    f_inc = (1 - cs_share) * zpl_share
    return EmissionFractions(f_cs, f_inc, 1 - f_cs - f_inc), {"low": low, "high": high}


def _extend(trace, t_end):
    """Continue a decayed trace with its coherent plateau out to t_end."""
    if trace.taus[-1] >= t_end:
        return trace
    h = trace.dtau
    extra = np.arange(trace.taus.size, int(math.ceil(t_end / h)) + 1) * h
    vals = np.concatenate([trace.values, np.full(extra.size, trace.coherent_weight)])
    return CorrelationTrace(np.concatenate([trace.taus, extra]), vals, trace.coherent_weight)


def synthetic_spectra(result, low_dtau=20.0, high_dtau=1000.0, low_window=6.0, high_window=0.4):
    """Forward-model (energy_meV, counts) spectra as seen through two instruments.

    Low resolution: the full detected emission (cavity-filtered, sideband
    included) with a Gaussian response of time constant ``low_dtau``.
    High resolution: the zero-phonon part only, as behind a spectral filter
    that removes the sideband, with response ``high_dtau``. Energies are
    relative to the laser.
    """
    from .cavity import detect_g1
    from .correlations import apply_instrument_response
    from .spectra import fft_size, frequency_grid, one_sided_transform
    from .units import NoiseParams

    def spectrum(trace, dtau_inst, window):
        t = apply_instrument_response(_extend(trace, 4 * dtau_inst),
                                      NoiseParams(instrument_dtau=dtau_inst))
        n = fft_size(t.taus.size)
        w = frequency_grid(n, t.dtau)
        s = one_sided_transform(t.values, t.dtau, n)
        e = w * HBAR
        keep = np.abs(e) <= window
        return e[keep], s[keep]

    zpl = detect_g1(result.g_opt.scaled(result.liouvillian.b_factor**2), result.filter)
    return spectrum(result.g_detected, low_dtau, low_window), spectrum(zpl, high_dtau, high_window)
