"""Super-Ohmic phonon bath: spectral density, propagator and Franck-Condon factor."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .units import NumericsParams, PhononParams, thermal_freq


def spectral_density(nu, p):
    """J(nu) = alpha nu^3 exp(-nu^2/nu_c^2)."""
    nu = np.asarray(nu, dtype=float)
    return p.alpha * nu**3 * np.exp(-(nu / p.nu_c) ** 2)


def _nu_grid(p, numerics):
    nu_max = numerics.nu_max_factor * p.nu_c
    return np.linspace(0.0, nu_max, numerics.quad_points + 1)


def _cos_weight(nu, p):
    """nu * coth(nu / 2kT) * exp(-nu^2/nu_c^2), with the nu -> 0 limit substituted."""
    kt = thermal_freq(p.temperature)
    gauss = np.exp(-(nu / p.nu_c) ** 2)
    if kt == 0:
        return nu * gauss
    out = np.empty_like(nu)
    small = nu < 1e-6 * p.nu_c
    x = nu[~small] / (2 * kt)
    out[~small] = nu[~small] / np.tanh(x) * gauss[~small]
    out[small] = 2 * kt * gauss[small]
    return out


def phonon_propagator(tau, p, numerics=None):
    """phi(tau) for scalar or array tau (negative tau via conjugation).

    Trapezoid rule on a uniform frequency grid truncated at nu_max_factor * nu_c.
    Both integrands are even in nu for T > 0, which makes the rule spectrally
    accurate; at T = 0 the cosine integrand is odd and the leading endpoint
    correction h^2 alpha / 12 is added.

    The discrete sum is periodic in tau with period 2 pi / h, so phi is set to
    zero beyond the half period pi / h; the physical phi has long decayed there.
    """
    numerics = numerics or NumericsParams()
    tau = np.asarray(tau, dtype=float)
    scalar = tau.ndim == 0
    t = np.atleast_1d(tau)
    if p.alpha == 0:
        out = np.zeros(t.shape, dtype=complex)
        return out[0] if scalar else out

    nu = _nu_grid(p, numerics)
    h = nu[1] - nu[0]
    w = np.full(nu.shape, h)
    w[0] = w[-1] = h / 2
    fc = _cos_weight(nu, p) * w
    fs = nu * np.exp(-(nu / p.nu_c) ** 2) * w
    endpoint = h * h / 12.0 if thermal_freq(p.temperature) == 0 else 0.0

    ta = np.abs(t)
    out = np.zeros(t.shape, dtype=complex)
    valid = np.nonzero(ta <= math.pi / h)[0]
    chunk = max(1, 4_000_000 // nu.size)
    for i in range(0, valid.size, chunk):
        idx = valid[i:i + chunk]
        arg = np.outer(ta[idx], nu)
        re = np.cos(arg) @ fc + endpoint
        im = -(np.sin(arg) @ fs)
        out[idx] = p.alpha * (re + 1j * im)
    neg = t < 0
    out[neg] = np.conj(out[neg])
    return out[0] if scalar else out


def franck_condon(p, numerics=None):
    """B = exp(-phi(0)/2)."""
    if p.alpha == 0:
        return 1.0
    phi0 = phonon_propagator(0.0, p, numerics).real
    return math.exp(-phi0 / 2)


def polaron_shift(p):
    """Continuum polaron shift, integral of J(nu)/nu = alpha sqrt(pi) nu_c^3 / 4."""
    return p.alpha * math.sqrt(math.pi) * p.nu_c**3 / 4


def bath_correlations(tau, p, numerics=None, phi=None):
    """Return (G, Lambda_xx, Lambda_yy) from one propagator evaluation."""
    if phi is None:
        phi = phonon_propagator(tau, p, numerics)
    b2 = franck_condon(p, numerics) ** 2
    ep = np.exp(phi)
    em = np.exp(-phi)
    return b2 * ep, b2 * (ep + em - 2), b2 * (ep - em)


@dataclass(frozen=True)
class PhononTables:
    """phi(tau) and derived quantities cached on a uniform tau grid."""

    params: PhononParams
    b_factor: float
    polaron_shift: float
    taus: np.ndarray
    phi: np.ndarray

    @property
    def b2(self):
        return self.b_factor**2

    @property
    def dtau(self):
        return self.taus[1] - self.taus[0]

    def g_corr(self):
        """G(tau) = B^2 exp(phi(tau)) on the grid."""
        return self.b2 * np.exp(self.phi)

    def lambdas(self):
        ep = np.exp(self.phi)
        em = np.exp(-self.phi)
        return self.b2 * (ep + em - 2), self.b2 * (ep - em)

    def phi_at(self, tau):
        """Linear interpolation of the cached phi; conjugate symmetry for tau < 0."""
        tau = np.asarray(tau, dtype=float)
        ta = np.abs(tau)
        re = np.interp(ta, self.taus, self.phi.real, right=0.0)
        im = np.interp(ta, self.taus, self.phi.imag, right=0.0)
        out = re + 1j * np.where(tau < 0, -im, im)
        return out

    def matches(self, taus):
        return taus.shape == self.taus.shape and np.allclose(taus, self.taus, rtol=0, atol=1e-12)


def time_grid(numerics):
    n = int(round(numerics.tau_max / numerics.dtau))
    return np.arange(n + 1) * numerics.dtau


def build_tables(p, numerics=None, taus=None):
    numerics = numerics or NumericsParams()
    if taus is None:
        taus = time_grid(numerics)
    phi = phonon_propagator(taus, p, numerics)
    # phi(0) is real by construction; drop round-off in the sine sum
    phi[0] = phi[0].real
    b = math.exp(-phi[0].real / 2) if p.alpha else 1.0
    return PhononTables(p, b, polaron_shift(p), np.asarray(taus, dtype=float), phi)
