import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import bisect

from dualppln import biphoton
from dualppln.biphoton import DetuningExpansion, StateCoefficients, StateInputs
from dualppln.errors import DegenerateState, GridTooNarrow

# walk-off values of the shipped model at the design point (s/m)
BP = {"so": 7.5531e-9, "se": 7.2823e-9, "io": 7.5928e-9, "ie": 7.3180e-9}
EX = biphoton.walkoff_expansions(BP)
L = 0.05

INP = StateInputs(n_so=2.2108, n_se=2.1380, n_io=2.2180, n_ie=2.1440, F_oe=0.081, F_eo=0.079, F_EO=0.998,
                  G31=-0.1351, G3m1=-0.1351, G11=0.4053, Omega_s=1.137e15, Omega_i=1.431e15, length=L)


def test_walkoff_definitions():
    assert EX["oeo"].D == pytest.approx(-(BP["so"] - BP["ie"]))
    assert EX["eoo"].D == pytest.approx(-(BP["se"] - BP["io"]))
    assert EX["oe"].D == pytest.approx(BP["so"] - BP["se"])
    assert EX["eo"].D == -EX["oe"].D
    with pytest.raises(ValueError):
        DetuningExpansion("xx", 1.0)


def test_h_examples():
    assert biphoton.h_eval(0.0) == 1.0
    assert abs(biphoton.h_eval(2 * math.pi)) ** 2 < 1e-30
    root = bisect(lambda x: (math.sin(x / 2) / (x / 2)) ** 2 - 0.5, 1.0, 4.0, xtol=1e-14)
    assert root == pytest.approx(2.78311, abs=1e-5)
    assert biphoton.half_power_argument() == pytest.approx(root, abs=1e-12)
    assert abs(biphoton.h_eval(root)) ** 2 == pytest.approx(0.5, abs=1e-12)


def test_normalized_convention_is_pi_narrower():
    x = np.linspace(-5, 5, 101)
    assert np.allclose(np.abs(biphoton.h_eval(x, "normalized")), np.abs(biphoton.h_eval(math.pi * x)), atol=1e-15)
    assert biphoton.half_power_argument("normalized") == pytest.approx(biphoton.half_power_argument() / math.pi)
    with pytest.raises(ValueError):
        biphoton.h_eval(1.0, "other")


@given(st.floats(-1e3, 1e3))
def test_h_modulus_and_phase(x):
    h = biphoton.h_eval(x)
    u = x / 2
    ref = 1.0 if u == 0 else (math.sin(u) / u) ** 2
    assert abs(abs(h) ** 2 - ref) < 1e-12
    if abs(h) > 1e-9:
        assert abs(math.sin(np.angle(h) + x / 2)) < 1e-9


def test_spectrum_even_and_normalized():
    for b in biphoton.BRANCH_FACTORS:
        s = biphoton.spectrum(b, L, EX)
        assert s.values.max() == 1.0 and s.values.min() >= 0.0
        assert np.allclose(s.values, s.values[::-1], atol=1e-14)


def test_parallel_below_orthogonal():
    nu = biphoton.frequency_grid(L, EX)
    for par, orth in (("ee", "oe"), ("oo", "eo")):
        p = biphoton.spectrum(par, L, EX, nu).values
        o = biphoton.spectrum(orth, L, EX, nu).values
        assert np.all(p <= o + 1e-15)


def test_single_sinc_fwhm_formula():
    s = biphoton.spectrum("oe", L, EX)
    ref = 2 * 2.78311475 / (L * abs(EX["oeo"].D))
    assert biphoton.fwhm_nu(s) == pytest.approx(ref, rel=1e-7)
    lam = 1.6568
    assert biphoton.fwhm_nm(s, lam) == pytest.approx((lam * 1e-6) ** 2 * ref / (2 * math.pi * 299792458.0) * 1e9)


def test_fwhm_scales_inverse_length():
    for b in biphoton.BRANCH_FACTORS:
        f1 = biphoton.fwhm_nu(biphoton.spectrum(b, L, EX))
        f2 = biphoton.fwhm_nu(biphoton.spectrum(b, 2 * L, EX))
        assert 0.495 <= f2 / f1 <= 0.505


def test_fwhm_needs_bracketing_grid():
    with pytest.raises(GridTooNarrow):
        biphoton.fwhm_nu(biphoton.spectrum("oe", L, EX, np.linspace(-1e9, 1e9, 11)))


def test_design_spectra_ordering(design_geom):
    ex = biphoton.design_expansions(design_geom, 0.7335, 1.6568, 25.0)
    w = {b: biphoton.fwhm_nm(biphoton.spectrum(b, L, ex), 1.6568) for b in biphoton.BRANCH_FACTORS}
    assert len({round(v, 6) for v in w.values()}) == 4
    assert w["ee"] < w["oe"] and w["oo"] < w["eo"]


def test_dip_examples():
    D = EX["oeo"].D
    spec = biphoton.spectrum("oe", L, EX, biphoton.dip_grid(L, EX, "oe"))
    base = L * abs(D)
    tau = np.linspace(-2 * base, 2 * base, 161)
    rc = biphoton.hom_dip(spec, tau)
    assert rc[80] == 0.5
    assert np.max(np.abs(rc - biphoton.triangle_dip(tau, L, D))) < 1e-3
    assert np.allclose(rc, rc[::-1], atol=1e-12)
    assert biphoton.hom_dip(spec, [40 * base])[0] == pytest.approx(1.0, abs=1e-3)


def test_dip_bounds_parallel_branch():
    spec = biphoton.spectrum("ee", L, EX, biphoton.dip_grid(L, EX, "ee"))
    tau = np.linspace(-3 * L * abs(EX["oeo"].D), 3 * L * abs(EX["oeo"].D), 121)
    rc = biphoton.hom_dip(spec, tau)
    assert rc.min() >= 0.5 and rc.max() <= 1.0 + 1e-12
    assert np.argmin(rc) == 60


def test_dip_rejects_narrow_grid():
    spec = biphoton.spectrum("oe", L, EX)
    with pytest.raises(GridTooNarrow):
        biphoton.hom_dip(spec, [0.0])


def test_entropy_examples():
    def coeffs(a, b):
        return StateCoefficients({}, {"oe": a, "eo": b, "oo": 0.0, "ee": 0.0}, "orthogonal")

    assert biphoton.entropy(coeffs(1.0, 1.0)) == 1.0
    assert biphoton.entropy(coeffs(3.0, 0.0)) == 0.0
    assert biphoton.entropy(coeffs(9.0, 1.0)) == pytest.approx(0.46900, abs=1e-5)
    assert biphoton.entropy(coeffs(9.0, 1.0)) == pytest.approx(-0.9 * math.log2(0.9) - 0.1 * math.log2(0.1))
    with pytest.raises(DegenerateState):
        biphoton.entropy(coeffs(0.0, 0.0))


@given(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6), st.floats(1e-3, 1e3))
def test_entropy_scale_invariance(a, b, s):
    w = {"oe": a, "eo": b, "oo": 0.0, "ee": 0.0}
    sc = {k: s * v for k, v in w.items()}
    e1 = biphoton.entropy(StateCoefficients({}, w, "orthogonal"))
    e2 = biphoton.entropy(StateCoefficients({}, sc, "orthogonal"))
    assert abs(e1 - e2) < 1e-12
    assert 0.0 <= e1 <= 1.0


def test_switch_gate():
    nu = biphoton.frequency_grid(L, EX)
    off = biphoton.state_coefficients(INP, 0.0, EX, nu)
    on = biphoton.state_coefficients(INP, 4.5e5, EX, nu)
    assert off.branch == "orthogonal" and off.weights["oo"] == 0 and off.weights["ee"] == 0
    assert on.branch == "parallel" and on.weights["oe"] == 0 and on.weights["eo"] == 0
    assert on.weights["oo"] > 0 and on.weights["ee"] > 0


def test_orthogonal_amplitude_ratio():
    P = biphoton.pair_amplitudes(INP, 0.0)
    hand = (abs(INP.G31) * INP.F_oe / (INP.n_so * INP.n_ie)) / (abs(INP.G3m1) * INP.F_eo / (INP.n_se * INP.n_io))
    assert abs(P["oe"]) / abs(P["eo"]) == pytest.approx(hand, rel=1e-14)
    assert abs(P["oe"]) / abs(P["eo"]) == pytest.approx(INP.F_oe / INP.F_eo * (INP.n_se * INP.n_io)
                                                         / (INP.n_so * INP.n_ie), rel=1e-14)


def test_parallel_amplitudes_linear_in_field():
    a = biphoton.pair_amplitudes(INP, 1e5)
    b = biphoton.pair_amplitudes(INP, 3e5)
    assert b["oo"] == pytest.approx(3 * a["oo"]) and b["ee"] == pytest.approx(3 * a["ee"])
    assert b["oe"] == a["oe"]


def test_eo_neutrality_at_zero_walkoff():
    flat = dict(EX)
    flat["oe"] = DetuningExpansion("oe", 0.0)
    flat["eo"] = DetuningExpansion("eo", 0.0)
    nu = biphoton.frequency_grid(L, EX, "oe")
    for weighting in ("integrated", "perfect"):
        s_orth = biphoton.entropy(biphoton.state_coefficients(INP, 0.0, flat, nu, weighting))
        s_par = biphoton.entropy(biphoton.state_coefficients(INP, 2e5, flat, nu, weighting))
        assert abs(s_orth - s_par) < 1e-12


def test_perfect_weighting_uses_prefactors():
    c = biphoton.state_coefficients(INP, 0.0, weighting="perfect")
    P = biphoton.pair_amplitudes(INP, 0.0)
    assert c.weights["oe"] == abs(P["oe"]) ** 2


def test_impurity_limits():
    nu = biphoton.frequency_grid(L, EX)
    ideal = biphoton.state_coefficients(INP, 4.5e5, EX, nu)
    full = biphoton.state_coefficients(INP, 4.5e5, EX, nu, eta=1.0)
    assert biphoton.entropy(full) == pytest.approx(biphoton.entropy(ideal), abs=1e-12)
    none = biphoton.state_coefficients(INP, 4.5e5, EX, nu, eta=0.0)
    orth = biphoton.state_coefficients(INP, 0.0, EX, nu)
    assert biphoton.entropy(none) == pytest.approx(biphoton.entropy(orth), abs=1e-12)
    part = biphoton.state_coefficients(INP, 4.5e5, EX, nu, eta=(0.9958, 0.9971))
    assert 0.0 <= biphoton.entropy(part) <= 1.0


def test_svd_entropy_of_product_state():
    amps = {"oo": 1.0, "oe": 1.0, "eo": 1.0, "ee": 1.0}
    c = StateCoefficients({}, {k: 1.0 for k in amps}, "parallel", amps)
    assert biphoton.entropy(c) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 0.1), st.sampled_from(["oe", "eo", "oo", "ee"]))
def test_fwhm_scaling_property(length, branch):
    f1 = biphoton.fwhm_nu(biphoton.spectrum(branch, length, EX))
    f2 = biphoton.fwhm_nu(biphoton.spectrum(branch, 2 * length, EX))
    assert 0.495 <= f2 / f1 <= 0.505
