"""Polaron-frame master equation for the driven two-level emitter.

Basis ordering is (|0>, |X>) and density matrices are vectorised row-major,
vec(rho)[2*i + j] = rho[i, j], so that vec(A rho B) = kron(A, B.T) vec(rho).
Every superoperator here is built through spre/spost.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .units import ModelOptions

log = logging.getLogger(__name__)

SIGMA = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><X|
SIGMA_DAG = SIGMA.conj().T
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[-1, 0], [0, 1]], dtype=complex)  # |X><X| - |0><0|
NX = np.array([[0, 0], [0, 1]], dtype=complex)  # |X><X|
I2 = np.eye(2, dtype=complex)


class DynamicsError(RuntimeError):
    pass


def vec(rho):
    return np.asarray(rho, dtype=complex).reshape(4)


def unvec(v):
    return np.asarray(v, dtype=complex).reshape(2, 2)


def spre(a):
    return np.kron(a, I2)


def spost(a):
    return np.kron(I2, a.T)


def commutator(a):
    return spre(a) - spost(a)


def lindblad(op):
    """Superoperator of L_O[rho] = 2 O rho O^+ - {O^+ O, rho}."""
    od = op.conj().T
    return 2 * spre(op) @ spost(od) - spre(od @ op) - spost(od @ op)


def trace_functional():
    """Row vector t with t @ vec(rho) = tr(rho)."""
    return vec(I2)


@dataclass(frozen=True)
class PhononRates:
    gx0: complex = 0j
    gxc: complex = 0j
    gxs: complex = 0j
    gy0: complex = 0j
    gyc: complex = 0j
    gys: complex = 0j


@dataclass(frozen=True)
class EmRates:
    gamma_complex: complex

    @property
    def gamma_p(self):
        return self.gamma_complex.real

    @property
    def lamb_shift(self):
        return self.gamma_complex.imag


def _half_line(f, h):
    """Trapezoid integral of samples decayed at the far end, with the
    leading Euler-Maclaurin correction h^2 f'(0) / 12 (one-sided slope)."""
    w = np.full(f.shape[-1], h)
    w[0] = w[-1] = h / 2
    slope = (-3 * f[..., 0] + 4 * f[..., 1] - f[..., 2]) / (2 * h)
    return f @ w + h * h / 12 * slope


def phonon_rates(tables, eta, tol=1e-6):
    """Half-line integrals of Lambda_xx, Lambda_yy against 1, cos(eta t), sin(eta t)."""
    if eta < 0:
        raise ValueError("eta must be non-negative")
    if tables.params.alpha == 0:
        return PhononRates()
    lxx, lyy = tables.lambdas()
    scale = max(abs(lyy[0]), abs(lxx[0]), 1e-300)
    if abs(lyy[-1]) > tol * scale or abs(lxx[-1]) > tol * scale:
        raise DynamicsError("phonon correlation has not decayed at tau_max; increase tau_max")
    t = tables.taus
    h = tables.dtau
    ker = np.stack([np.ones_like(t), np.cos(eta * t), np.sin(eta * t)])
    x = _half_line(lxx[None, :] * ker, h)
    y = _half_line(lyy[None, :] * ker, h)
    return PhononRates(*(complex(v) for v in (*x, *y)))


def em_rates(tables, cavity, drive=None, options=None):
    """Cavity-mediated complex rate Gamma = Gamma_P + i S.

    Gamma = 2 g^2 B^2 int_0^inf exp(phi(t)) exp(-(i delta + kappa/2) t) dt with delta
    the cavity detuning from the polaron-shifted line. The e^phi - 1 part is
    integrated on the grid; the constant part analytically.
    """
    options = options or ModelOptions()
    delta = cavity_line_detuning(cavity, tables.polaron_shift, options)
    lam = 1j * delta + cavity.kappa / 2
    b2 = tables.b2
    total = 1.0 / lam
    if tables.params.alpha:
        t = tables.taus
        total += _half_line((np.exp(tables.phi) - 1) * np.exp(-lam * t), tables.dtau)
    return EmRates(complex(2 * cavity.g**2 * b2 * total))


# --- detuning bookkeeping ----------------------------------------------------

def rotating_detuning(delta_lx, shift, options=None):
    """Polaron-frame detuning delta_tilde = omega_X~ - omega_L entering the generator.

    Detunings are measured from the observed (polaron-shifted) line unless
    options.bare_detuning is set, in which case the shift is subtracted here.
    """
    options = options or ModelOptions()
    d = -delta_lx
    if options.bare_detuning:
        d -= shift
    return d


def cavity_line_detuning(cavity, shift, options=None):
    """omega_c - omega_X~ used inside the cavity rate integral."""
    options = options or ModelOptions()
    d = cavity.delta_xc
    if options.bare_detuning:
        d += shift
    return d


# --- generator ---------------------------------------------------------------

def rate_operators(rates, delta_t, omega_r, eta):
    """chi_x, chi_y = int_0^inf sigma_a(-tau) Lambda_aa(tau) dtau in closed form."""
    r = rates
    chi_x = (delta_t * omega_r * (r.gx0 - r.gxc) * SZ
             + (omega_r**2 * r.gx0 + delta_t**2 * r.gxc) * SX
             - delta_t * eta * r.gxs * SY) / eta**2
    chi_y = (-omega_r * r.gys * SZ + delta_t * r.gys * SX + eta * r.gyc * SY) / eta
    return chi_x, chi_y


@dataclass(frozen=True)
class Liouvillian:
    matrix: np.ndarray
    eta: float
    delta_tilde: float
    omega_r: float
    omega: float
    b_factor: float
    rates: PhononRates = field(default_factory=PhononRates)
    em: EmRates = field(default_factory=lambda: EmRates(0j))
    pure_dephasing: float = 0.0

    def diagnostics(self):
        r = self.rates
        return {
            "eta": self.eta, "delta_tilde": self.delta_tilde, "omega_r": self.omega_r,
            "omega": self.omega, "b_factor": self.b_factor,
            "gamma_p": self.em.gamma_p, "lamb_shift": self.em.lamb_shift,
            "pure_dephasing": self.pure_dephasing,
            "phonon_rates": {k: [getattr(r, k).real, getattr(r, k).imag]
                             for k in ("gx0", "gxc", "gxs", "gy0", "gyc", "gys")},
        }


def build_liouvillian(tables, drive, cavity, noise=None, pure_dephasing=0.0, options=None,
                      em=None):
    options = options or ModelOptions()
    b = tables.b_factor
    omega = drive.omega
    omega_r = omega * b
    delta_t = rotating_detuning(drive.delta_lx, tables.polaron_shift, options)
    eta = math.hypot(delta_t, omega_r)
    if em is None:
        em = em_rates(tables, cavity, drive, options)

    omega_coh = omega if options.bare_omega_coherent else omega_r
    h = delta_t * NX + 0.5 * omega_coh * SX
    L = -1j * commutator(h)

    rates = PhononRates()
    if omega > 0 and tables.params.alpha > 0:
        rates = phonon_rates(tables, eta)
        chi_x, chi_y = rate_operators(rates, delta_t, omega_r, eta)
        k = np.zeros((4, 4), dtype=complex)
        for a, chi in ((SX, chi_x), (SY, chi_y)):
            cd = chi.conj().T
            k += spre(a @ chi) - spre(chi) @ spost(a)
            k += spost(cd @ a) - spre(a) @ spost(cd)
        L = L - (omega**2 / 4) * k

    L = L - 0.5j * em.lamb_shift * commutator(SIGMA_DAG @ SIGMA)
    L = L + 0.5 * em.gamma_p * lindblad(SIGMA)
    if pure_dephasing:
        # coherences decay at exactly pure_dephasing: 1/T2 = Gamma_P/2 + gamma
        L = L + pure_dephasing * lindblad(NX)
    return Liouvillian(L, eta, delta_t, omega_r, omega, b, rates, em, float(pure_dephasing))


# --- solutions ---------------------------------------------------------------

@dataclass(frozen=True)
class Eigensystem:
    values: np.ndarray
    vectors: np.ndarray
    inverse: np.ndarray
    condition: float


def eigensystem(L):
    m = L.matrix if isinstance(L, Liouvillian) else L
    w, v = np.linalg.eig(m)
    cond = np.linalg.cond(v)
    return Eigensystem(w, v, np.linalg.inv(v), float(cond))


def steady_state(L, ss_tol=1e-9, es=None):
    """Null vector of L, Hermitised and trace-normalised."""
    es = es or eigensystem(L)
    order = np.argsort(np.abs(es.values))
    if abs(es.values[order[1]]) < ss_tol:
        raise DynamicsError("steady state is not unique (degenerate null space)")
    if abs(es.values[order[0]]) > max(ss_tol, 1e-6):
        raise DynamicsError(f"no zero eigenvalue found (smallest |lambda| = {abs(es.values[order[0]]):.3g})")
    rho = unvec(es.vectors[:, order[0]])
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    return rho


def propagate(L, rho0, taus, es=None, diagnostics=None):
    """rho(tau) = exp(L tau) rho0 for each tau; returns an array (n, 2, 2)."""
    taus = np.asarray(taus, dtype=float)
    if taus.size and (taus[0] < 0 or np.any(np.diff(taus) < 0)):
        raise ValueError("taus must be ascending and non-negative")
    m = L.matrix if isinstance(L, Liouvillian) else L
    v0 = vec(rho0)
    es = es or eigensystem(m)
    if es.condition < 1e8:
        c = es.inverse @ v0
        out = (es.vectors[None, :, :] * np.exp(np.outer(taus, es.values))[:, None, :]) @ c
    else:
        if diagnostics is not None:
            diagnostics["defective_generator"] = True
        log.warning("generator near-defective (cond %.3g); using matrix exponential", es.condition)
        out = np.array([expm(m * t) @ v0 for t in taus])
    return out.reshape(-1, 2, 2)


def expectation(op, rho):
    return np.trace(op @ rho)
