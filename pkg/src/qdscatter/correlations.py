"""First-order correlation functions from the quantum regression theorem."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dynamics import SIGMA, SIGMA_DAG, eigensystem, expectation, propagate, vec


class CorrelationError(RuntimeError):
    pass


@dataclass(frozen=True)
class CorrelationTrace:
    """g1(tau) sampled on a uniform grid tau >= 0.

    ``values`` always include the non-decaying plateau; ``coherent_weight`` is
    that plateau carried exactly (zero once an envelope has destroyed it).
    g(-tau) = conj(g(tau)) is implied.
    """

    taus: np.ndarray
    values: np.ndarray
    coherent_weight: complex = 0j

    @property
    def normalization(self):
        return float(self.values[0].real)

    @property
    def dtau(self):
        return float(self.taus[1] - self.taus[0])

    def incoherent_values(self):
        return self.values - self.coherent_weight

    def __add__(self, other):
        _check_grid(self, other)
        return replace(self, values=self.values + other.values,
                       coherent_weight=self.coherent_weight + other.coherent_weight)

    def scaled(self, c):
        return replace(self, values=c * self.values, coherent_weight=c * self.coherent_weight)


def _check_grid(a, b):
    if a.taus.shape != b.taus.shape or not np.allclose(a.taus, b.taus, rtol=0, atol=1e-12):
        raise CorrelationError("trace grids do not match")


def g1_opt(L, rho_ss, taus, es=None):
    """<sigma^+(tau) sigma>_ss via the regression theorem."""
    taus = np.asarray(taus, dtype=float)
    es = es or eigensystem(L)
    x0 = SIGMA @ rho_ss
    # tr(A X) = vec(A.T) . vec(X) in row-major vectorisation
    left = vec(SIGMA_DAG.T) @ es.vectors
    if es.condition < 1e8:
        c = es.inverse @ vec(x0)
        values = np.exp(np.outer(taus, es.values)) @ (left * c)
    else:
        states = propagate(L, x0, taus, es=es)
        values = np.einsum("ij,nji->n", SIGMA_DAG, states)
    s = expectation(SIGMA, rho_ss)
    coh = complex(abs(s) ** 2)
    values = np.asarray(values, dtype=complex)
    values[0] = values[0].real
    return CorrelationTrace(taus, values, coh)


def polaron_g1(trace, tables):
    """Multiply by the phonon correlation G(tau) = B^2 exp(phi(tau))."""
    if not tables.matches(trace.taus):
        raise CorrelationError("phonon table grid does not match trace grid")
    g = tables.g_corr()
    return CorrelationTrace(trace.taus, trace.values * g, trace.coherent_weight * tables.b2)


def split_coherent(trace, tol=1e-4):
    """Return (incoherent trace, coherent weight)."""
    inc = trace.incoherent_values()
    g0 = abs(trace.values[0])
    if g0 > 0 and abs(inc[-1]) > tol * g0:
        raise CorrelationError(
            f"incoherent part not decayed at tau_max (|g_inc| = {abs(inc[-1]):.3g}); increase tau_max")
    return CorrelationTrace(trace.taus, inc, 0j), trace.coherent_weight


def fringe_contrast(trace, epsilon=0.0):
    """v(tau) = (1 - eps) |g1(tau)| / g1(0)."""
    g0 = trace.values[0].real
    if not g0 > 0:
        raise CorrelationError("no emission: g1(0) = 0")
    return (1 - epsilon) * np.abs(trace.values) / g0


def instrument_envelope(taus, noise):
    dtau = noise.instrument_dtau
    env = np.exp(-noise.laser_mu * np.abs(taus))
    if np.isfinite(dtau) and dtau > 0:
        env = env * np.exp(-(taus / dtau) ** 2)
    return env


def apply_instrument_response(trace, noise):
    """Gaussian spectrometer response and laser coherence decay.

    The envelope destroys the plateau, so the coherent weight is folded into
    the sampled values and reset to zero.
    """
    if not np.isfinite(noise.instrument_dtau) and noise.laser_mu == 0:
        return trace
    env = instrument_envelope(trace.taus, noise)
    return CorrelationTrace(trace.taus, trace.values * env, 0j)
