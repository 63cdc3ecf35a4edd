"""Emission spectra and coherent / incoherent / sideband emission fractions.

Spectra are per unit angular frequency in the laser rotating frame,
S(w) = int g(t) exp(-i w t) dt = 2 Re int_0^inf g(t) exp(-i w t) dt, so that
(1/2pi) int S dw = g(0). The coherent line is a delta of weight B^2 g_coh
at w = 0 and is never sampled.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .cavity import filter_lorentzian

log = logging.getLogger(__name__)


class SpectrumError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectrumResult:
    omegas: np.ndarray
    s_opt: np.ndarray
    s_sb: np.ndarray
    coherent_weight: float
    filter_applied: bool = False
    h: np.ndarray | None = None

    @property
    def domega(self):
        return float(self.omegas[1] - self.omegas[0])

    def total_filtered(self):
        h = self.h if self.h is not None else 1.0
        return h * (self.s_opt + self.s_sb)


@dataclass(frozen=True)
class EmissionFractions:
    f_cs: float
    f_inc: float
    f_psb: float

    def __post_init__(self):
        total = self.f_cs + self.f_inc + self.f_psb
        if abs(total - 1) > 1e-6:
            raise SpectrumError(f"fractions sum to {total}")

    def as_dict(self):
        return {"f_cs": self.f_cs, "f_inc": self.f_inc, "f_psb": self.f_psb}


def fft_size(n_trace, requested=0, dtau=None, max_domega=None):
    """Transform length: at least 4x zero padding, and fine enough that the
    frequency step 2 pi / (n dtau) stays below ``max_domega`` when given."""
    if requested:
        if requested < n_trace:
            raise SpectrumError("fft_size shorter than the trace")
        return requested
    need = 4 * n_trace
    if dtau and max_domega:
        need = max(need, int(np.ceil(2 * np.pi / (max_domega * dtau))))
    return 1 << int(np.ceil(np.log2(need)))


def frequency_grid(n_fft, dtau):
    return np.fft.fftshift(np.fft.fftfreq(n_fft, d=dtau)) * 2 * np.pi


def one_sided_transform(values, dtau, n_fft):
    """2 Re int_0^inf g(t) exp(-i w t) dt on the zero-padded FFT grid (trapezoid)."""
    x = np.zeros(n_fft, dtype=complex)
    x[: values.size] = values
    x[0] *= 0.5
    x[values.size - 1] *= 0.5
    spec = 2 * dtau * np.fft.fft(x).real
    return np.fft.fftshift(spec)


def _leakage_check(values, label):
    peak = np.max(np.abs(values))
    if peak > 0 and abs(values[-1]) > 0.01 * peak:
        log.warning("%s trace has not decayed at tau_max; spectrum will leak", label)


def spectrum_opt(incoherent_trace, tables, n_fft=0):
    """B^2 times the transform of the incoherent optical correlation."""
    v = incoherent_trace.incoherent_values()
    _leakage_check(v, "incoherent")
    n = fft_size(v.size, n_fft)
    return tables.b2 * one_sided_transform(v, incoherent_trace.dtau, n)


def spectrum_sb(full_trace, tables, n_fft=0):
    """Transform of (G(t) - B^2) g_opt(t), plateau included."""
    if not tables.matches(full_trace.taus):
        raise SpectrumError("phonon table grid does not match trace grid")
    x = (tables.g_corr() - tables.b2) * full_trace.values
    _leakage_check(x, "sideband")
    n = fft_size(x.size, n_fft)
    return one_sided_transform(x, full_trace.dtau, n)


def compute_spectrum(opt_trace, tables, f=None, n_fft=0, max_domega=None):
    """All spectral parts of g_opt on a common grid."""
    n = fft_size(opt_trace.taus.size, n_fft, opt_trace.dtau, max_domega)
    omegas = frequency_grid(n, opt_trace.dtau)
    s_opt = spectrum_opt(opt_trace, tables, n)
    s_sb = spectrum_sb(opt_trace, tables, n)
    h = filter_lorentzian(omegas, f) if f is not None else None
    coh = float((tables.b2 * opt_trace.coherent_weight).real)
    return SpectrumResult(omegas, s_opt, s_sb, coh, f is not None, h)


def powers(spec, f=None):
    """(P_coh, P_inc, P_psb) with the filter if given (else unfiltered)."""
    dw = spec.domega
    h = filter_lorentzian(spec.omegas, f) if f is not None else np.ones_like(spec.omegas)
    h0 = float(filter_lorentzian(0.0, f)) if f is not None else 1.0
    p_inc = float(np.sum(h * spec.s_opt) * dw / (2 * np.pi))
    p_psb = float(np.sum(h * spec.s_sb) * dw / (2 * np.pi))
    p_coh = spec.coherent_weight * h0
    return p_coh, p_inc, p_psb


def fractions(spec, f=None):
    p_coh, p_inc, p_psb = powers(spec, f)
    total = p_coh + p_inc + p_psb
    if not total > 0:
        raise SpectrumError("total emitted power is zero")
    f_cs, f_inc = p_coh / total, p_inc / total
    return EmissionFractions(f_cs, f_inc, 1.0 - f_cs - f_inc)


def parseval_total(spec):
    """(1/2pi) int (S_opt + S_SB) dw + coherent weight; equals g1_0(0)."""
    return float(np.sum(spec.s_opt + spec.s_sb) * spec.domega / (2 * np.pi) + spec.coherent_weight)


def band_weights(omegas, s, center=0.0):
    """Integrated weight below and above ``center`` (red, blue)."""
    dw = omegas[1] - omegas[0]
    red = float(np.sum(s[omegas < center]) * dw)
    blue = float(np.sum(s[omegas > center]) * dw)
    return red, blue


def blue_edge(omegas, s, line=0.0, level=0.5):
    """Highest frequency above ``line`` where s still reaches level * max(s above line)."""
    above = omegas > line
    w, v = omegas[above], s[above]
    peak = v.max()
    idx = np.nonzero(v >= level * peak)[0][-1]
    if idx + 1 >= v.size:
        return float(w[idx])
    # linear interpolation to the crossing
    y0, y1 = v[idx], v[idx + 1]
    t = (y0 - level * peak) / (y0 - y1) if y0 != y1 else 0.0
    return float(w[idx] + t * (w[idx + 1] - w[idx]))
