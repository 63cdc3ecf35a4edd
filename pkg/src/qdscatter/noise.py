"""Detuning-dependent pure dephasing and spectral wandering of power curves."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class NoiseError(ValueError):
    pass


def gamma_of_detuning(delta_lx, n):
    """gamma(D) = gamma_max (1 - xi^2 / (D^2 + xi^2)); zero on resonance."""
    xi = n.xi or 0.0
    d2 = np.asarray(delta_lx, dtype=float) ** 2
    if xi == 0:
        out = np.where(d2 > 0, n.gamma_max, 0.0)
    else:
        out = n.gamma_max * d2 / (d2 + xi**2)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class PowerCurves:
    deltas: np.ndarray
    p_tot: np.ndarray
    p_coh: np.ndarray

    def __post_init__(self):
        tol = 1e-12 * max(1.0, float(np.max(np.abs(self.p_tot))))
        if np.any(self.p_coh < -tol) or np.any(self.p_tot < self.p_coh - tol):
            raise NoiseError("power curves must satisfy p_tot >= p_coh >= 0")

    def fraction(self):
        return self.p_coh / self.p_tot


def gaussian_smooth(x, y, fwhm, cutoff=5.0):
    """Convolve y(x) with a unit-area Gaussian by direct summation.

    The kernel is truncated at ``cutoff`` standard deviations and renormalised
    over the points inside the grid, so constants are preserved at the edges.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if fwhm == 0:
        return y.copy()
    dx = np.diff(x)
    if not np.allclose(dx, dx[0], rtol=1e-6, atol=0):
        raise NoiseError("detuning grid must be uniform")
    sigma = fwhm / (2 * math.sqrt(2 * math.log(2)))
    if sigma < 1e-3 * dx[0]:
        return y.copy()  # kernel narrower than the grid: a delta
    half = int(math.ceil(cutoff * sigma / dx[0]))
    k = np.exp(-0.5 * (np.arange(-half, half + 1) * dx[0] / sigma) ** 2)
    num = np.convolve(y, k, mode="same") if y.size >= k.size else _direct(y, k)
    den = np.convolve(np.ones_like(y), k, mode="same") if y.size >= k.size else _direct(np.ones_like(y), k)
    return num / den


def _direct(y, k):
    half = k.size // 2
    out = np.zeros_like(y)
    for i in range(y.size):
        for j in range(k.size):
            m = i + j - half
            if 0 <= m < y.size:
                out[i] += k[j] * y[m]
    return out


def wandering_fraction(curves, fwhm):
    """Coherent fraction after Gaussian spectral wandering of the detuning."""
    span = curves.deltas[-1] - curves.deltas[0]
    if fwhm > span / 4:
        raise NoiseError(f"wandering FWHM {fwhm:.3g} exceeds a quarter of the grid span {span:.3g}")
    tot = gaussian_smooth(curves.deltas, curves.p_tot, fwhm)
    coh = gaussian_smooth(curves.deltas, curves.p_coh, fwhm)
    return coh / tot
