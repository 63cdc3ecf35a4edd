"""Constants, unit conversions and validated parameter records.

Internal units: time in ps, energies and angular frequencies in ps^-1 (hbar = 1).
Energies quoted in meV or ueV are converted once, at the boundary.
"""
from __future__ import annotations

import configparser
import dataclasses
import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

HBAR = 0.6582119569  # meV ps
K_BOLTZMANN = 0.0861733  # meV / K


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = HBAR
    k_boltzmann: float = K_BOLTZMANN


def mev_to_angfreq(e):
    """Energy in meV -> angular frequency in ps^-1."""
    return e / HBAR


def angfreq_to_mev(w):
    return w * HBAR


def uev_to_angfreq(e):
    return e * 1e-3 / HBAR


def thermal_freq(t):
    """k_B T / hbar in ps^-1 for a temperature in K."""
    if t < 0:
        raise ValueError("temperature must be non-negative")
    return K_BOLTZMANN * t / HBAR


class ParameterError(ValueError):
    """Raised when a parameter violates a hard invariant."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class PhononParams:
    alpha: float = 0.0447  # ps^2
    nu_c: float = 1.28  # ps^-1
    temperature: float = 4.2  # K


@dataclass(frozen=True)
class DriveParams:
    omega: float = 0.0  # bare Rabi frequency, ps^-1
    delta_lx: float = 0.0  # omega_L - omega_X, ps^-1


@dataclass(frozen=True)
class CavityParams:
    g: float = mev_to_angfreq(0.135)
    kappa: float = mev_to_angfreq(2.51)
    delta_xc: float = 0.0  # omega_c - omega_X, ps^-1


@dataclass(frozen=True)
class NoiseParams:
    gamma_max: float = 0.0
    xi: float | None = None  # None: use the emitter natural linewidth
    wandering_fwhm: float = 0.0
    epsilon: float = 0.02
    laser_mu: float = 0.0
    instrument_dtau: float = math.inf


@dataclass(frozen=True)
class NumericsParams:
    nu_max_factor: float = 8.0
    quad_points: int = 2048
    tau_max: float = 600.0
    dtau: float = 0.02
    fft_size: int = 0  # 0: power of two with >= 4x padding and step <= Gamma_P/20
    ss_tol: float = 1e-9


@dataclass(frozen=True)
class ModelOptions:
    """Switches for readings of the model that the source leaves ambiguous."""

    bare_omega_coherent: bool = False  # use Omega instead of Omega_R in the coherent part
    filter_at_exciton: bool = False  # centre the filter at delta_xc instead of delta_xc - delta_lx
    bare_detuning: bool = False  # treat detunings as relative to the un-shifted exciton line


@dataclass(frozen=True)
class Diagnostic:
    field: str
    message: str


@dataclass(frozen=True)
class ParamBundle:
    phonon: PhononParams = field(default_factory=PhononParams)
    drive: DriveParams = field(default_factory=DriveParams)
    cavity: CavityParams = field(default_factory=CavityParams)
    noise: NoiseParams = field(default_factory=NoiseParams)
    numerics: NumericsParams = field(default_factory=NumericsParams)
    options: ModelOptions = field(default_factory=ModelOptions)
    warnings: tuple = ()

    def with_(self, **sections):
        return replace(self, **sections)

    def as_dict(self):
        out = {}
        for name in ("phonon", "drive", "cavity", "noise", "numerics", "options"):
            out[name] = dataclasses.asdict(getattr(self, name))
        return out


def validate_params(phonon=None, drive=None, cavity=None, noise=None, numerics=None,
                    options=None, gamma_p=None):
    """Check hard invariants and collect soft-validity warnings.

    Accepts either the five records or an existing ParamBundle as the first
    argument. Returns a new ParamBundle; raises ParameterError listing every
    violated field.
    """
    if isinstance(phonon, ParamBundle):
        b = phonon
        phonon, drive, cavity, noise, numerics, options = (
            b.phonon, b.drive, b.cavity, b.noise, b.numerics, b.options)
    phonon = phonon or PhononParams()
    drive = drive or DriveParams()
    cavity = cavity or CavityParams()
    noise = noise or NoiseParams()
    numerics = numerics or NumericsParams()
    options = options or ModelOptions()

    errs = []
    if not phonon.alpha >= 0:
        errs.append("alpha must be non-negative")
    if not phonon.nu_c > 0:
        errs.append("nu_c must be positive")
    if not phonon.temperature >= 0:
        errs.append("temperature must be non-negative")
    if not drive.omega >= 0:
        errs.append("omega must be non-negative")
    if not math.isfinite(drive.delta_lx):
        errs.append("delta_lx must be finite")
    if not cavity.g > 0:
        errs.append("g must be positive")
    if not cavity.kappa > 0:
        errs.append("kappa must be positive")
    for name in ("gamma_max", "wandering_fwhm", "epsilon", "laser_mu", "instrument_dtau"):
        if not getattr(noise, name) >= 0:
            errs.append(f"{name} must be non-negative")
    if noise.xi is not None and not noise.xi >= 0:
        errs.append("xi must be non-negative")
    if not noise.epsilon < 1:
        errs.append("epsilon must be below 1")
    if not numerics.dtau > 0:
        errs.append("dtau must be positive")
    if not numerics.tau_max > numerics.dtau:
        errs.append("tau_max must exceed dtau")
    if numerics.quad_points < 16:
        errs.append("quad_points must be at least 16")
    if numerics.fft_size and numerics.fft_size & (numerics.fft_size - 1):
        errs.append("fft_size must be a power of two")
    if not numerics.nu_max_factor > 0:
        errs.append("nu_max_factor must be positive")
    if errs:
        raise ParameterError(errs)

    warns = []
    if cavity.kappa < 4 * cavity.g:
        warns.append(Diagnostic("kappa", "kappa < 4 g: outside the low-Q validity regime"))
    fastest = max(phonon.nu_c, cavity.kappa, drive.omega)
    if numerics.dtau > 0.1 / fastest:
        warns.append(Diagnostic("dtau", f"dtau should not exceed {0.1 / fastest:.4g} ps"))
    if gamma_p is not None and gamma_p > 0 and numerics.tau_max < 10 / gamma_p:
        warns.append(Diagnostic("tau_max", f"tau_max should be at least {10 / gamma_p:.4g} ps"))
    return ParamBundle(phonon, drive, cavity, noise, numerics, options, tuple(warns))


# --- configuration files -------------------------------------------------

_UNIT_RE = re.compile(r"^\s*([-+0-9.eE]+|inf|-inf)\s*([A-Za-z^\-0-9µμ]*)\s*$")

_ENERGY_UNITS = {
    "": 1.0,
    "ps^-1": 1.0,
    "1/ps": 1.0,
    "mev": 1.0 / HBAR,
    "uev": 1e-3 / HBAR,
    "µev": 1e-3 / HBAR,
    "μev": 1e-3 / HBAR,
}

_SECTIONS = {
    "phonon": PhononParams,
    "drive": DriveParams,
    "cavity": CavityParams,
    "noise": NoiseParams,
    "numerics": NumericsParams,
    "options": ModelOptions,
}

# fields that carry an energy / angular frequency and so accept meV or ueV
_ENERGY_FIELDS = {
    ("drive", "omega"), ("drive", "delta_lx"),
    ("cavity", "g"), ("cavity", "kappa"), ("cavity", "delta_xc"),
    ("noise", "gamma_max"), ("noise", "xi"), ("noise", "wandering_fwhm"), ("noise", "laser_mu"),
    ("phonon", "nu_c"),
}


def parse_quantity(text, section, key):
    """Parse '135 ueV', '2.51 meV', '0.2 ps^-1' or a bare number."""
    text = str(text).strip()
    m = _UNIT_RE.match(text)
    if not m:
        raise ParameterError([f"[{section}] {key}: cannot parse {text!r}"])
    value = float(m.group(1))
    unit = m.group(2).lower()
    if not unit:
        return value
    if (section, key) not in _ENERGY_FIELDS:
        if (section, key) == ("phonon", "temperature") and unit == "k":
            return value
        if unit in ("ps", "ps^2"):
            return value
        raise ParameterError([f"[{section}] {key}: unit {unit!r} not accepted here"])
    if unit not in _ENERGY_UNITS:
        raise ParameterError([f"[{section}] {key}: unknown unit {unit!r}"])
    return value * _ENERGY_UNITS[unit]


def _coerce(section, key, raw, ftype):
    if ftype in (bool, "bool"):
        if isinstance(raw, bool):
            return raw
        s = str(raw).strip().lower()
        if s in ("1", "true", "yes", "on"):
            return True
        if s in ("0", "false", "no", "off"):
            return False
        raise ParameterError([f"[{section}] {key}: expected a boolean, got {raw!r}"])
    if ftype in (int, "int"):
        try:
            return int(float(raw))
        except ValueError:
            raise ParameterError([f"[{section}] {key}: expected an integer, got {raw!r}"]) from None
    if isinstance(raw, str) and raw.strip().lower() in ("none", ""):
        return None
    return parse_quantity(raw, section, key)


def apply_overrides(values, overrides):
    """Merge 'section.key=value' strings into a nested dict of raw values."""
    for item in overrides or ():
        if "=" not in item:
            raise ParameterError([f"override {item!r} is not key=value"])
        key, val = item.split("=", 1)
        key = key.strip()
        if "." in key:
            section, name = key.split(".", 1)
        else:
            matches = [s for s, cls in _SECTIONS.items()
                       if name_in(cls, key)]
            if len(matches) != 1:
                raise ParameterError([f"override {key!r} is ambiguous or unknown; use section.key"])
            section, name = matches[0], key
        values.setdefault(section, {})[name] = val.strip()
    return values


def name_in(cls, key):
    return key in {f.name for f in fields(cls)}


def bundle_from_mapping(values):
    """Build a validated ParamBundle from {section: {key: raw}}."""
    parts = {}
    errs = []
    for section, raw in values.items():
        if section not in _SECTIONS:
            if section in ("scenario", "DEFAULT"):
                continue
            errs.append(f"unknown section [{section}]")
            continue
        cls = _SECTIONS[section]
        ftypes = {f.name: f.type for f in fields(cls)}
        kw = {}
        for key, val in raw.items():
            if key not in ftypes:
                errs.append(f"[{section}] unknown key {key!r}")
                continue
            try:
                kw[key] = _coerce(section, key, val, ftypes[key])
            except ParameterError as e:
                errs.extend(e.problems)
        try:
            parts[section] = cls(**kw)
        except TypeError as e:
            errs.append(f"[{section}] {e}")
    if errs:
        raise ParameterError(errs)
    return validate_params(**parts)


def read_config(path):
    """Read an INI-style file with [phonon], [drive], ... sections."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    cp.read(path, encoding="utf-8")
    return {s: dict(cp.items(s)) for s in cp.sections()}


def load_config(path=None, overrides=()):
    values = read_config(path) if path else {}
    apply_overrides(values, overrides)
    return bundle_from_mapping(values)
