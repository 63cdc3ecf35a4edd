"""The low-Q cavity as a spectral filter on emitted light.

Frequencies are in the laser rotating frame, omega = omega_emit - omega_L.
The filter is the unit-peak Lorentzian H(omega) = (kappa/2)^2 / ((omega - c)^2 + (kappa/2)^2),
whose time-domain kernel is k(t) = (kappa/4) exp(i c t - kappa |t| / 2), so that
the filtered correlation is g_D(tau) = int k(tau - s) g(s) ds over all s.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .correlations import CorrelationError, CorrelationTrace


@dataclass(frozen=True)
class FilterSpec:
    center_offset: float  # omega_c - omega_L, ps^-1
    kappa: float
    amplitude_convention: str = "unit-peak"

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")


def filter_center(delta_lx, delta_xc, at_exciton=False):
    """Filter centre relative to the laser.

    The coherent line sits at 0, the zero-phonon line at -delta_lx and the
    cavity at delta_xc - delta_lx. ``at_exciton`` keeps the filter at delta_xc
    whatever the laser detuning.
    """
    return delta_xc if at_exciton else delta_xc - delta_lx


def filter_from_params(cavity, drive, options=None):
    at_exciton = bool(options and options.filter_at_exciton)
    return FilterSpec(filter_center(drive.delta_lx, cavity.delta_xc, at_exciton), cavity.kappa)


def filter_lorentzian(omega, f):
    hw = f.kappa / 2
    return hw**2 / ((np.asarray(omega) - f.center_offset) ** 2 + hw**2)


def _exp_conv_causal(x, lam, h):
    """y_n = int_{-inf}^{t_n} exp(lam (t_n - s)) x(s) ds for piecewise-linear x.

    Exact for linear interpolation between nodes; x is taken as zero before
    the first node. Requires Re(lam) < 0.
    """
    e = np.exp(lam * h)
    if abs(lam * h) < 1e-6:
        w1 = h / 2 * (1 + lam * h / 3)
        w0 = h / 2 * (1 + 2 * lam * h / 3)
    else:
        w1 = -1 / lam + (e - 1) / (lam**2 * h)  # weight of x_n
        w0 = e / lam - (e - 1) / (lam**2 * h)  # weight of x_{n-1}
    return lfilter([w1, w0], [1.0, -e], x)


def convolve_kernel(x, h, center, kappa):
    """int k(t - s) x(s) ds on a uniform grid covering the support of x."""
    lam = 1j * center - kappa / 2
    fwd = _exp_conv_causal(x, lam, h)
    # anti-causal part: s > t with kernel exp(conj-like branch)
    mu = -1j * center - kappa / 2
    bwd = _exp_conv_causal(x[::-1], mu, h)[::-1]
    # the node s = t is counted in both halves with zero-width overlap, no correction needed
    return (kappa / 4) * (fwd + bwd)


def detect_g1(trace, f):
    """Cavity-filtered correlation function on the same grid.

    The incoherent part is extended to tau < 0 by conjugation and convolved
    exactly (piecewise-linear); the plateau passes through as a delta line at
    the laser frequency, scaled by H(0).
    """
    h = trace.dtau
    if h * f.kappa > 0.5:
        raise CorrelationError(f"grid too coarse for the filter: dtau*kappa = {h * f.kappa:.3g} > 0.5")
    inc = trace.incoherent_values()
    n = inc.size
    full = np.concatenate([np.conj(inc[:0:-1]), inc])
    out = convolve_kernel(full, h, f.center_offset, f.kappa)[n - 1:]
    h0 = float(filter_lorentzian(0.0, f))
    coh = trace.coherent_weight * h0
    return CorrelationTrace(trace.taus, out + coh, coh)


def filtered_power(trace, f):
    """(1/2pi) int H(w) S(w) dw computed in the time domain: g_D(0)."""
    inc = trace.incoherent_values()
    t = trace.taus
    lam = -(1j * f.center_offset + f.kappa / 2)
    # 2 Re int_0^inf k(-s) x(s) ds, x piecewise linear
    seg = _exp_conv_causal(inc[::-1], lam, trace.dtau)[-1]
    val = (f.kappa / 2) * seg.real
    return float(val + (trace.coherent_weight * filter_lorentzian(0.0, f)).real)
