"""Phonon-free reference model.

The closed forms below are kept separate from the machinery; the trace and
spectrum come from the polaron pipeline with alpha = 0 and an explicit
pure-dephasing channel, so a comparison isolates phonon physics.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .units import CavityParams, DriveParams, NumericsParams, ParamBundle, PhononParams


@dataclass(frozen=True)
class AtomicParams:
    t1: float
    t2: float
    omega: float = 0.0
    delta_lx: float = 0.0

    def __post_init__(self):
        if not (self.t1 > 0 and self.t2 > 0):
            raise ValueError("t1 and t2 must be positive")
        if self.t2 > 2 * self.t1 * (1 + 1e-12):
            raise ValueError("t2 cannot exceed 2 t1")

    @property
    def gamma_p(self):
        return 1.0 / self.t1

    @property
    def pure_dephasing(self):
        return max(1.0 / self.t2 - 0.5 / self.t1, 0.0)


def saturation(p):
    return p.omega**2 * p.t1 * p.t2 / (1 + (p.delta_lx * p.t2) ** 2)


def coherent_fraction_atomic(p):
    return p.t2 / (2 * p.t1) / (1 + saturation(p))


def atomic_bundle(p, numerics=None, cavity=None):
    """Parameter bundle for the pipeline with phonons off and Gamma_P = 1/T1.

    The cavity coupling is chosen so that 4 g^2 / kappa = 1/T1 on resonance.
    """
    cavity = cavity or CavityParams()
    g = (cavity.kappa / (4 * p.t1)) ** 0.5
    numerics = numerics or NumericsParams(tau_max=max(600.0, 30 * p.t1))
    return ParamBundle(
        phonon=replace(PhononParams(), alpha=0.0),
        drive=DriveParams(p.omega, p.delta_lx),
        cavity=CavityParams(g=g, kappa=cavity.kappa, delta_xc=0.0),
        numerics=numerics,
    )


def atomic_g1_and_spectrum(p, numerics=None, tables=None, filtered=False):
    """Run the alpha = 0 pipeline; returns (PointResult.g_opt, PointResult.spectrum, result).

    The cavity filter is off by default so the result follows the closed form.
    """
    from .pipeline import run_point

    b = atomic_bundle(p, numerics)
    res = run_point(b, tables=tables, pure_dephasing=p.pure_dephasing, filtered=filtered)
    return res.g_opt, res.spectrum, res
