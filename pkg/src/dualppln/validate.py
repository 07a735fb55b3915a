"""
Built-in oracle suite run by the ``validate`` command.

Every check recomputes an invariant or closed-form value independently of
the production path and reports (name, measured error, tolerance, pass).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import biphoton, eo, grating, material, qpm, waveguide
from .material import CONGRUENT_LN, constant_index_model


@dataclass(frozen=True)
class Check:
    name: str
    error: float
    tolerance: float
    passed: bool


def _check(name, error, tol):
    error = float(error)
    return Check(name, error, tol, bool(np.isfinite(error) and error <= tol))


def material_checks(rng, model=CONGRUENT_LN):
    lam = rng.uniform(0.45, 2.9, 100)
    T = rng.uniform(20.0, 250.0, 100)
    out = []
    gap = material.bulk_index("o", lam, T, model) - material.bulk_index("e", lam, T, model)
    out.append(_check("material.negative_uniaxial", float(max(0.0, -gap.min())), 0.0))
    grid = np.linspace(0.7, 1.7, 400)
    worst = 0.0
    for pol in ("o", "e"):
        worst = max(worst, float(np.max(np.diff(material.bulk_index(pol, grid, 25.0, model)))))
    out.append(_check("material.normal_dispersion", max(worst, 0.0), 0.0))
    rel = []
    for pol in ("o", "e"):
        a = material.index_derivative(pol, lam, T, model)
        f = material.index_derivative(pol, lam, T, model, method="fd")
        rel.append(np.max(np.abs(f - a) / np.abs(a)))
    out.append(_check("material.derivative_fd_vs_analytic", max(rel), 1e-7))
    return out


def waveguide_checks(model=CONGRUENT_LN):
    geom = waveguide.WaveguideGeometry()
    out = []
    lam = np.linspace(0.6, 2.9, 40)
    n_eff, _, _, n_b, guided = waveguide.solve_modes(geom, "o", lam, 25.0, model)
    excess = (n_eff - n_b)[guided]
    out.append(_check("waveguide.cutoff_monotone", max(0.0, float(np.max(np.diff(excess)))), 0.0))
    bound = np.max(np.maximum(n_b - n_eff, n_eff - n_b - geom.dn_max)[guided])
    out.append(_check("waveguide.guidance_bounds", max(0.0, float(bound)), 0.0))
    mode = waveguide.solve_mode(geom, "o", 1.6568, 25.0, model)
    k = 2 * math.pi / mode.wavelength
    wy = np.linspace(0.5 * mode.w_y, 1.5 * mode.w_y, 200)
    wz = np.linspace(0.5 * mode.w_z, 1.5 * mode.w_z, 200)
    brute = np.sqrt(waveguide.effective_index_squared(geom, mode.n_bulk, k, wy[None, :], wz[:, None])).max()
    out.append(_check("waveguide.variational_bound", max(0.0, brute - mode.n_eff), 1e-9))
    other = waveguide.solve_mode(geom, "e", 1.3162, 25.0, model)
    out.append(_check("waveguide.self_overlap", abs(waveguide.overlap_integral([mode, mode]) - 1.0), 1e-15))
    f12 = waveguide.overlap_integral([mode, other])
    f21 = waveguide.overlap_integral([other, mode])
    out.append(_check("waveguide.overlap_symmetry", abs(f12 - f21) + max(0.0, f12 - 1.0), 1e-15))
    pump = waveguide.solve_mode(geom, "o", 0.7335, 25.0, model)

    def integrand(z, y):
        return pump.profile(y, z) * mode.profile(y, z) * other.profile(y, z)

    lim = 6 * max(mode.w_y, mode.w_z)
    quad, _ = integrate.dblquad(integrand, -lim, lim, -lim, lim, epsabs=1e-13, epsrel=1e-10)
    closed = waveguide.overlap_integral([pump, mode, other])
    out.append(_check("waveguide.three_mode_overlap_quadrature", abs(quad - closed) / closed, 1e-8))
    flat = constant_index_model(2.0)
    weak = waveguide.WaveguideGeometry(width=60.0, depth=60.0, dn_max=1e-4, lateral_diffusion=10.0)
    bp = waveguide.dispersion_parameter(weak, "o", 1.55, 25.0, flat)
    # dispersionless bulk, vanishing contrast: group index -> 2
    out.append(_check("waveguide.dispersionless_limit", abs(bp * material.DEFAULT_CONSTANTS.c - 2.0) / 2.0, 1e-4))
    return out


def grating_checks(rng):
    out = []
    bad = 0
    for m in range(-9, 10):
        for n in range(-9, 10):
            if m == 0 or n == 0:
                continue
            g = grating.fourier_coefficient(m, n)
            bad += (g == 0.0) != (m % 2 == 0 or n % 2 == 0)
            bad += g != grating.fourier_coefficient(n, m)
            bad += g != grating.fourier_coefficient(-m, -n)
    out.append(_check("grating.parity_symmetry", bad, 0))
    worst = 0.0
    power = 0.0
    for _ in range(20):
        p1 = rng.uniform(15.0, 40.0)
        ratio = int(rng.integers(3, 9))
        design = grating.PolingDesign(p1, ratio * p1, length_cm=60 * ratio * p1 * 1e-4)
        pattern = grating.synthesize_pattern(design)
        starts, ends, signs = pattern.segments()
        power = max(power, abs(np.sum((ends - starts) * signs ** 2) / pattern.length - 1.0))
        for m, n in ((1, 1), (3, 1), (3, -1)):
            K = grating.reciprocal_vector(m, n, design.period1, design.period2)
            amp = abs(grating.spectrum_amplitude(pattern, K))
            series = abs(grating.converged_coefficient(m, n, design, tol=1e-4)[0])
            worst = max(worst, abs(amp - series))
    out.append(_check("grating.segment_integral_vs_series", worst, 1e-3))
    out.append(_check("grating.pattern_power", power, 1e-12))
    return out


def qpm_checks(rng, model=CONGRUENT_LN):
    out = []
    worst = 0.0
    for _ in range(50):
        p1 = rng.uniform(10.0, 40.0)
        p2 = rng.uniform(1.5, 12.0) * p1
        k1 = grating.reciprocal_vector(3, 1, p1, p2)
        k2 = grating.reciprocal_vector(3, -1, p1, p2)
        q1, q2 = qpm.solve_periods(k1, k2, ((3, 1), (3, -1)))
        worst = max(worst, abs(q1 - p1) / p1, abs(q2 - p2) / p2)
    out.append(_check("qpm.period_round_trip", worst, 1e-9))
    geom = waveguide.WaveguideGeometry()
    sol = qpm.design(geom, 0.7335, 1.6568, 25.0, model=model)
    out.append(_check("qpm.energy_conservation",
                      abs(1 / sol.lam_p - 1 / sol.lam_s - 1 / sol.lam_i) * sol.lam_p, 1e-15))
    out.append(_check("qpm.residual_contract", max(abs(sol.residuals[0]), abs(sol.residuals[1])), 1e-12))
    return out


def eo_checks():
    out = []
    init = eo.FieldAmplitudes(1.0 + 0j, 0j)
    worst_eta = 0.0
    drift = 0.0
    L = 0.03
    for kl in np.linspace(0.2, 3.0, 10):
        kappa = kl / L
        for ratio in np.linspace(0.0, 3.0, 10):
            s = eo.EOSetting(0.0, kappa, ratio * kappa, L)
            num = eo.propagate(s, init)
            worst_eta = max(worst_eta, abs(abs(num.A_e) ** 2 - float(eo.detuned_efficiency(kappa, s.delta, L))))
            drift = max(drift, abs(num.power - 1.0))
    out.append(_check("eo.ode_vs_analytic", worst_eta, 1e-8))
    out.append(_check("eo.norm_conservation", drift, 1e-9))
    kappa = 50.2
    a = eo.propagate(eo.EOSetting(0.0, kappa, 0.0, 0.021), init)
    b = eo.propagate(eo.EOSetting(0.0, kappa, 0.0, 0.021 + 2 * math.pi / kappa), init)
    out.append(_check("eo.periodicity", abs(abs(a.A_e) ** 2 - abs(b.A_e) ** 2), 1e-8))
    return out


def biphoton_checks(model=CONGRUENT_LN):
    out = []
    x = np.linspace(-40.0, 40.0, 2001)
    h = biphoton.h_eval(x)
    with np.errstate(invalid="ignore", divide="ignore"):
        ref = np.where(x == 0, 1.0, (np.sin(x / 2) / (x / 2)) ** 2)
    phase = np.angle(h * np.exp(0.5j * x))
    nonzero = np.abs(h) > 1e-12
    out.append(_check("biphoton.h_modulus_phase",
                      max(np.max(np.abs(np.abs(h) ** 2 - ref)),
                          np.max(np.abs(np.sin(phase[nonzero])))), 1e-12))
    geom = waveguide.WaveguideGeometry()
    ex = biphoton.design_expansions(geom, 0.7335, 1.6568, 25.0, model)
    worst = 0.0
    for b in biphoton.BRANCH_FACTORS:
        f1 = biphoton.fwhm_nu(biphoton.spectrum(b, 0.05, ex))
        f2 = biphoton.fwhm_nu(biphoton.spectrum(b, 0.10, ex))
        worst = max(worst, abs(f2 / f1 - 0.5))
    out.append(_check("biphoton.fwhm_scaling", worst, 0.005))
    spec = biphoton.spectrum("ee", 0.05, ex, biphoton.dip_grid(0.05, ex, "ee"))
    span = 3 * 0.05 * abs(ex["oeo"].D)
    tau = np.linspace(-span, span, 201)
    rc = biphoton.hom_dip(spec, tau)
    err = max(np.max(np.abs(rc - rc[::-1])), max(0.0, 0.5 - rc.min()), max(0.0, rc.max() - 1.0),
              abs(rc[100] - rc.min()))
    out.append(_check("biphoton.dip_even_bounded", err, 1e-12))
    ex_flat = dict(ex)
    ex_flat["oe"] = biphoton.DetuningExpansion("oe", 0.0)
    ex_flat["eo"] = biphoton.DetuningExpansion("eo", 0.0)
    inp = biphoton.StateInputs(2.2, 2.1, 2.2, 2.1, 0.08, 0.08, 1.0, -0.135, -0.135, 0.405, 1.1e15, 1.4e15, 0.05,
                               gamma51=1.0)
    nu = biphoton.frequency_grid(0.05, ex, "oe")
    s_orth = biphoton.entropy(biphoton.state_coefficients(inp, 0.0, ex_flat, nu))
    c_par = biphoton.state_coefficients(inp, 1.0, ex_flat, nu)
    out.append(_check("biphoton.eo_neutrality", abs(s_orth - biphoton.entropy(c_par)), 1e-12))
    base = biphoton.state_coefficients(inp, 0.0, ex, nu)
    scaled = biphoton.StateCoefficients(base.P, {k: 7.5 * v for k, v in base.weights.items()}, base.branch)
    out.append(_check("biphoton.entropy_scale_invariance",
                      abs(biphoton.entropy(base) - biphoton.entropy(scaled)), 1e-12))
    return out


def run_all(model=CONGRUENT_LN, seed=20240601):
    rng = np.random.default_rng(seed)
    checks = []
    checks += material_checks(rng, model)
    checks += waveguide_checks(model)
    checks += grating_checks(rng)
    checks += qpm_checks(rng, model)
    checks += eo_checks()
    checks += biphoton_checks(model)
    return checks
