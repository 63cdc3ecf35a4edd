"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in the
terminal summary under "acceptance criteria".
"""
import math
from dataclasses import replace

import numpy as np
import pytest

from qdscatter.atomic import AtomicParams, atomic_g1_and_spectrum, coherent_fraction_atomic
from qdscatter.cavity import FilterSpec
from qdscatter.cli import main
from qdscatter.correlations import fringe_contrast, g1_opt
from qdscatter.dynamics import SIGMA, SIGMA_DAG, build_liouvillian, steady_state, vec
from qdscatter.fitting import fit_phonon_params, g1_fit_model
from qdscatter.phonons import build_tables, franck_condon
from qdscatter.pipeline import omega_for_saturation, run_point, tables_for
from qdscatter.spectra import band_weights, blue_edge, parseval_total
from qdscatter.sweeps import detuning_sweep, saturation_sweep
from qdscatter.units import (HBAR, CavityParams, DriveParams, NoiseParams, NumericsParams,
                             PhononParams, mev_to_angfreq, uev_to_angfreq)

pytestmark = pytest.mark.acceptance


def test_criterion_01_atomic_limit(report):
    t1 = 23.0
    worst = (0.0, None)
    for t2 in (2 * t1, 1.3 * t1):
        for s in (0.01, 0.1, 0.25, 1, 4, 10):
            for d_mev in (0.0, 0.1, -0.1, 0.3, -0.3):
                d = mev_to_angfreq(d_mev)
                om = omega_for_saturation(s, 1 / t1, delta_lx=d, t1=t1, t2=t2)
                p = AtomicParams(t1, t2, om, d)
                _, _, res = atomic_g1_and_spectrum(p)
                ref = coherent_fraction_atomic(p)
                err = abs(res.fractions.f_cs / ref - 1)
                if err > worst[0]:
                    worst = (err, (t2 / t1, s, d_mev))
    report(1, worst[0] < 0.01, f"max relative F_CS error {worst[0]:.2e} "
                               f"(T2/T1, S, delta_meV = {worst[1]}), tolerance 1e-2")


def test_criterion_02_fractions_at_quarter_saturation(report, point_025):
    fr = point_025.fractions
    v = fringe_contrast(point_025.g_detected, 0.02)
    v500 = float(np.interp(500.0, point_025.g_detected.taus, v))
    checks = {
        "F_PSB": abs(fr.f_psb - 0.06) <= 0.02,
        "F_INC": abs(fr.f_inc - 0.14) <= 0.04,
        "F_CS": abs(fr.f_cs - 0.80) <= 0.05,
        "plateau": abs(v500 - 0.98 * fr.f_cs) <= 0.02,
    }
    bad = [k for k, ok in checks.items() if not ok]
    report(2, not bad,
           f"F_PSB={fr.f_psb:.4f} (0.06+-0.02), F_INC={fr.f_inc:.4f} (0.14+-0.04), "
           f"F_CS={fr.f_cs:.4f} (0.80+-0.05), v(500ps)={v500:.4f} vs (1-eps)F_CS="
           f"{0.98 * fr.f_cs:.4f} (+-0.02)" + (f"; out of tolerance: {', '.join(bad)}" if bad else ""))


def test_criterion_03_psb_constancy(report, bundle, tables):
    s = np.array([0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0])
    sw = saturation_sweep(bundle, s, tables, workers=4)
    psb_var = (sw.f_psb.max() - sw.f_psb.min()) / sw.f_psb.mean()
    prod = sw.f_cs * (1 + s)
    prod_var = (prod.max() - prod.min()) / prod.mean()
    report(3, psb_var < 0.05 and prod_var < 0.03,
           f"F_PSB spread {psb_var:.2e} (< 5e-2), F_CS(1+S) spread {prod_var:.2e} (< 3e-2) "
           f"over S in [0.01, 10]")


def test_criterion_04_detuning_asymmetry(report, bundle, tables):
    noise = NoiseParams(gamma_max=uev_to_angfreq(21.0), wandering_fwhm=uev_to_angfreq(66.0))
    b = replace(bundle, drive=DriveParams(uev_to_angfreq(25.6), 0.0), noise=noise)
    deltas = mev_to_angfreq(np.round(np.arange(-100, 101) * 0.01, 10))
    sw = detuning_sweep(b, deltas, tables, workers=4)
    at = lambda x: sw.at(mev_to_angfreq(x))
    asym = at(0.27) < at(-0.27)
    recover = at(-0.6) > at(-0.4)
    i = np.argmin(sw.f_cs_wandered[deltas < 0])
    dmin = deltas[deltas < 0][i] * HBAR
    report(4, asym and recover,
           f"F_CS(+0.27)={at(0.27):.4f} < F_CS(-0.27)={at(-0.27):.4f}: {asym}; "
           f"F_CS(-0.6)={at(-0.6):.4f} > F_CS(-0.4)={at(-0.4):.4f}: {recover} "
           f"(red-side minimum at {dmin:+.2f} meV)")


def test_criterion_05_phonon_identities(report, bundle):
    p = bundle.phonon
    taus = np.arange(0, 50.0 + 1e-9, 0.02)
    tb = build_tables(p, bundle.numerics, taus)
    g = tb.g_corr()
    e0 = abs(g[0] - 1)
    e_inf = abs(g[-1] - tb.b2)
    p0 = replace(p, temperature=0.0)
    e_b = abs(franck_condon(p0, bundle.numerics) - math.exp(-p.alpha * p.nu_c**2 / 4))
    phi15 = abs(np.interp(15.0, taus, tb.phi.real) + 1j * np.interp(15.0, taus, tb.phi.imag))
    ok = e0 < 1e-6 and e_inf < 1e-4 and e_b < 1e-8 and phi15 < 1e-3
    report(5, ok, f"|G(0)-1|={e0:.1e} (<1e-6), |G(50ps)-B^2|={e_inf:.1e} (<1e-4), "
                  f"|B(T=0)-closed form|={e_b:.1e} (<1e-8), |phi(15ps)|={phi15:.1e} (<1e-3)")


def test_criterion_06_parseval(report, bundle):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(5):
        ph = PhononParams(alpha=rng.uniform(0.01, 0.08), nu_c=rng.uniform(0.8, 2.0),
                          temperature=rng.uniform(2.0, 20.0))
        b = replace(bundle, phonon=ph)
        tb = tables_for(b)
        from qdscatter.pipeline import purcell_rate
        gp = purcell_rate(b, tb)
        d = mev_to_angfreq(rng.uniform(-0.3, 0.3))
        om = omega_for_saturation(rng.uniform(0.05, 5.0), gp, tb.b_factor, d)
        r = run_point(replace(b, drive=DriveParams(om, d)), tb)
        g0 = r.g_opt.values[0].real
        worst = max(worst, abs(parseval_total(r.spectrum) / g0 - 1))
    report(6, worst < 5e-3, f"max relative Parseval error {worst:.2e} over 5 random sets (< 5e-3)")


def test_criterion_07_rk4_oracle(report, bundle, tables, gamma_p):
    om = omega_for_saturation(1.0, gamma_p, tables.b_factor)
    L = build_liouvillian(tables, DriveParams(om, mev_to_angfreq(0.1)), bundle.cavity)
    rho = steady_state(L)
    n_out = int(round(200 / tables.dtau))
    taus = tables.taus[: n_out + 1]
    g = g1_opt(L, rho, taus).values
    m = L.matrix
    h = tables.dtau / 10
    x = vec(SIGMA @ rho)
    left = vec(SIGMA_DAG.T)
    ref = [left @ x]
    for _ in range(n_out):
        for _ in range(10):
            k1 = m @ x
            k2 = m @ (x + 0.5 * h * k1)
            k3 = m @ (x + 0.5 * h * k2)
            k4 = m @ (x + h * k3)
            x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ref.append(left @ x)
    err = float(np.max(np.abs(g - np.array(ref))))
    report(7, err < 1e-6, f"max |g1_eig - g1_rk4| on [0, 200] ps = {err:.1e} (< 1e-6)")


def test_criterion_08_sideband_asymmetry(report, bundle, tables, gamma_p):
    om = omega_for_saturation(0.25, gamma_p, tables.b_factor)
    r = run_point(replace(bundle, drive=DriveParams(om, 0.0)), tables, filtered=False)
    red, blue = band_weights(r.spectrum.omegas, r.spectrum.s_sb)
    p0 = replace(bundle.phonon, temperature=0.0)
    num = replace(bundle.numerics, tau_max=1200.0)
    tb0 = build_tables(p0, num)
    om0 = omega_for_saturation(0.25, gamma_p, tb0.b_factor)
    r0 = run_point(replace(bundle, phonon=p0, numerics=num, drive=DriveParams(om0, 0.0)), tb0,
                   filtered=False)
    red0, blue0 = band_weights(r0.spectrum.omegas, r0.spectrum.s_sb)
    share0 = blue0 / (red0 + blue0)
    report(8, red > blue and share0 < 1e-3,
           f"4.2 K Stokes/anti-Stokes = {red / blue:.3f} (> 1); "
           f"T = 0 anti-Stokes share {share0:.1e} (< 1e-3)")


def test_criterion_09_edge_shift(report, bundle, tables):
    om = uev_to_angfreq(25.6)
    d = mev_to_angfreq(0.27)
    edges = []
    for delta in (0.0, d):
        r = run_point(replace(bundle, drive=DriveParams(om, delta)), tables, filtered=False)
        sp = r.spectrum
        edges.append(blue_edge(sp.omegas + delta, sp.s_sb, line=delta))
    ratio = (edges[1] - edges[0]) / d
    report(9, abs(ratio - 1) <= 0.2,
           f"blue half-max edge shift {(edges[1] - edges[0]) * HBAR:.4f} meV = {ratio:.3f} x "
           f"Delta_LX (1 +- 0.2)")


def test_criterion_10_fit_round_trip(report):
    cav = FilterSpec(0.0, mev_to_angfreq(2.51))
    tau = np.arange(751) * 0.02
    clean = 0.98 * g1_fit_model(tau, 0.0447, 1.28, cav)
    worst = (0.0, None)
    for seed in range(5):
        v = clean * (1 + 0.01 * np.random.default_rng(seed).standard_normal(tau.size))
        for fa, fn in ((1.5, 1.5), (0.5, 0.5), (1.5, 0.5), (0.5, 1.5)):
            r = fit_phonon_params(tau, v, err=0.01 * v, cavity=cav, init=(0.0447 * fa, 1.28 * fn))
            e = max(abs(r.params["alpha"] / 0.0447 - 1), abs(r.params["nu_c"] / 1.28 - 1))
            if not r.converged:
                e = math.inf
            if e > worst[0]:
                worst = (e, (seed, fa, fn))
    report(10, worst[0] < 0.05, f"worst relative parameter error {worst[0]:.4f} (< 0.05) "
                                f"at (seed, alpha init x, nu_c init x) = {worst[1]}")


SCENARIO_ARGS = {
    "g1-trace": [],
    "spectrum": [],
    "saturation-sweep": ["--set", "scenario.saturations=0.1,1,10"],
    "detuning-sweep": ["--set", "drive.omega=25.6ueV", "--set", "noise.gamma_max=21ueV",
                       "--set", "noise.wandering_fwhm=66ueV",
                       "--set", "scenario.deltas_mev=-0.5:0.5:0.05",
                       "--set", "scenario.spectra_at_mev=0.27"],
    "fit-phonon": [],
    "fit-spectra": [],
}


def test_criterion_11_determinism(report, tmp_path):
    differing = []
    count = 0
    for scen, extra in SCENARIO_ARGS.items():
        outs = [tmp_path / scen / k for k in "ab"]
        for out in outs:
            rc = main([scen, "--out", str(out), "--workers", "2", *extra])
            if rc != 0:
                differing.append(f"{scen}: exit {rc}")
        for f in sorted(outs[0].iterdir()):
            count += 1
            if f.read_bytes() != (outs[1] / f.name).read_bytes():
                differing.append(f"{scen}/{f.name}")
    report(11, not differing and count > 0,
           f"{count} output files from 6 scenarios compared byte-for-byte"
           + (f"; differing: {differing}" if differing else ", all identical"))
