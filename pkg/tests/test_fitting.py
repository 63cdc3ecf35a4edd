from dataclasses import replace

import numpy as np
import pytest

from qdscatter.cavity import FilterSpec
from qdscatter.fitting import (FitError, _gauss, _lorentz, _voigt, area_fractions_from_spectra,
                               extract_fractions_from_plateaus, fit_high_resolution,
                               fit_low_resolution, fit_phonon_params, g1_fit_model,
                               gaussian_fwhm_mev, synthetic_spectra)
from qdscatter.pipeline import omega_for_saturation, run_point
from qdscatter.units import HBAR, NoiseParams

CAV = FilterSpec(0.0, 2.51 / HBAR)
TAU = np.arange(751) * 0.02


def test_model_normalised_and_flat_without_phonons():
    v = g1_fit_model(TAU, 0.0447, 1.28, CAV)
    assert v[0] == pytest.approx(1.0, abs=1e-12)
    assert v[-1] < 0.96
    flat = g1_fit_model(TAU, 0.0, 1.28, CAV)
    np.testing.assert_allclose(flat, 1.0, atol=1e-9)


def test_model_matches_pipeline_at_short_times(point_025):
    g = point_025.g_detected
    m = g.taus <= 15
    v_pipe = np.abs(g.values[m]) / g.values[0].real
    v_mod = g1_fit_model(g.taus[m], 0.0447, 1.28, CAV)
    assert np.max(np.abs(v_mod - v_pipe) / v_pipe) < 0.02


def test_noiseless_fit_at_generator():
    v = 0.98 * g1_fit_model(TAU, 0.0447, 1.28, CAV)
    r = fit_phonon_params(TAU, v, cavity=CAV, init=(0.0447, 1.28))
    assert r.residual_rms < 1e-8
    r = fit_phonon_params(TAU, v, cavity=CAV, init=(0.03, 1.6))
    assert r.converged
    assert r.params["alpha"] == pytest.approx(0.0447, rel=1e-4)
    assert r.params["nu_c"] == pytest.approx(1.28, rel=1e-4)


def test_noisy_round_trip(rng):
    v = 0.98 * g1_fit_model(TAU, 0.0447, 1.28, CAV)
    v = v * (1 + 0.01 * rng.standard_normal(v.size))
    r = fit_phonon_params(TAU, v, err=0.01 * v, cavity=CAV, init=(0.06, 0.9))
    assert r.converged
    # 1% noise on this grid gives a ~3.4% standard error per parameter
    sd = np.sqrt(np.diag(r.covariance_estimate))
    assert 0.02 < sd[0] / 0.0447 < 0.05
    assert abs(r.params["alpha"] - 0.0447) < 3 * sd[0]
    assert abs(r.params["nu_c"] - 1.28) < 3 * sd[1]


def test_flat_data_flags_boundary():
    v = 0.98 * np.ones_like(TAU)
    r = fit_phonon_params(TAU, v, cavity=CAV)
    assert r.params["alpha"] == 0.0
    assert "alpha_at_lower_bound" in r.flags


def test_fit_needs_points():
    with pytest.raises(FitError, match="at least 8"):
        fit_phonon_params(TAU[:5], np.ones(5), cavity=CAV)


def synthetic_trace(f_cs=0.80, f_inc=0.14, f_psb=0.06, t1=23.0, eps=0.02):
    tau = np.arange(0, 1500.0, 0.5)
    inc = (1 + tau / (2 * t1)) * np.exp(-tau / (2 * t1))
    phon = np.exp(-(tau / 1.5) ** 2)
    return tau, (1 - eps) * (f_cs + f_inc * inc + f_psb * phon)


def test_plateau_fractions_recovered():
    tau, v = synthetic_trace()
    fr = extract_fractions_from_plateaus(tau, v)
    assert fr.f_cs == pytest.approx(0.80, abs=0.01)
    assert fr.f_inc == pytest.approx(0.14, abs=0.01)
    assert fr.f_psb == pytest.approx(0.06, abs=0.01)


def test_plateau_pure_laser():
    tau = np.arange(0, 1000.0, 1.0)
    fr = extract_fractions_from_plateaus(tau, np.full(tau.size, 0.98))
    assert (fr.f_cs, fr.f_inc, fr.f_psb) == pytest.approx((1.0, 0.0, 0.0), abs=1e-12)


def test_plateau_errors():
    tau, v = synthetic_trace(t1=400.0)
    with pytest.raises(ValueError, match="plateau"):
        extract_fractions_from_plateaus(tau, v)
    with pytest.raises(ValueError, match="markers"):
        extract_fractions_from_plateaus(tau, v, t_phonon=300.0, t_rad=200.0)


def test_instrument_width():
    assert gaussian_fwhm_mev(20.0) == pytest.approx(4 * np.sqrt(np.log(2)) / 20 * HBAR)


def test_high_resolution_constructed_ratio():
    x = np.linspace(-0.2, 0.2, 801)
    gw = 0.004
    y = _gauss(x, 0.7, 0.0, gw) + _lorentz(x, 0.3, 0.0, 0.03)
    r = fit_high_resolution(x, y, gauss_fwhm=gw)
    assert r["a_cs"] / (r["a_cs"] + r["a_inc"]) == pytest.approx(0.7, abs=2e-3)


def test_high_resolution_replicas():
    x = np.linspace(-0.1, 0.1, 801)
    fsr = 0.12
    gw = 0.004
    y = sum(_gauss(x, 0.6, s, gw) + _lorentz(x, 0.4, s, 0.02) for s in (-fsr, 0.0, fsr))
    r = fit_high_resolution(x, y, gauss_fwhm=gw, fsr=fsr)
    assert r["a_cs"] / (r["a_cs"] + r["a_inc"]) == pytest.approx(0.6, abs=2e-3)


def test_low_resolution_without_sideband():
    x = np.linspace(-6, 6, 1201)
    gw = gaussian_fwhm_mev(20.0)
    y = _voigt(x, 1.0, 0.0, 0.03, gw)
    low = fit_low_resolution(x, y, gw)
    share = low["a_psb"] / (low["a_psb"] + low["a_zpl"])
    assert share < 0.01


def test_low_resolution_constructed():
    x = np.linspace(-6, 6, 1201)
    gw = gaussian_fwhm_mev(20.0)
    y = _voigt(x, 0.9, 0.0, 0.03, gw) + _gauss(x, 0.1, -0.6, 1.5)
    low = fit_low_resolution(x, y, gw)
    assert low["a_psb"] / (low["a_psb"] + low["a_zpl"]) == pytest.approx(0.1, abs=0.01)


def test_high_resolution_failure_is_named():
    x = np.linspace(-1, 1, 11)
    with pytest.raises(FitError, match="high resolution"):
        fit_high_resolution(x, np.full(x.size, np.nan))


def test_low_resolution_sideband_share_weak_drive(point_025):
    (x, y), _ = synthetic_spectra(point_025)
    low = fit_low_resolution(x, y, gaussian_fwhm_mev(20.0))
    share = low["a_psb"] / (low["a_psb"] + low["a_zpl"])
    assert share == pytest.approx(point_025.fractions.f_psb, abs=0.005)


def test_area_round_trip_strong_drive(bundle, tables, gamma_p):
    om = omega_for_saturation(10.0, gamma_p, tables.b_factor)
    r = run_point(replace(bundle, drive=replace(bundle.drive, omega=om)), tables)
    low, high = synthetic_spectra(r)
    fr, _ = area_fractions_from_spectra(low, high, NoiseParams(instrument_dtau=20.0),
                                        high_res_fwhm=gaussian_fwhm_mev(1000.0))
    for a, b in zip(fr.as_dict().values(), r.fractions.as_dict().values()):
        assert a == pytest.approx(b, abs=0.02)
