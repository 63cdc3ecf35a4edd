"""Polaron-frame simulation of resonance fluorescence from a phonon-coupled
quantum dot in a low-Q cavity.

Units: time in ps, rates and energies in ps^-1 (hbar = 1); helpers in
``units`` convert from meV and ueV.
"""
from .pipeline import omega_for_saturation, default_bundle, run_point, tables_for
from .units import (CavityParams, DriveParams, ModelOptions, NoiseParams, NumericsParams,
                    ParamBundle, PhononParams, load_config)

__all__ = ["CavityParams", "DriveParams", "ModelOptions", "NoiseParams", "NumericsParams",
           "ParamBundle", "PhononParams", "load_config", "omega_for_saturation",
           "default_bundle", "run_point", "tables_for"]
