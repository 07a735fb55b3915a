"""
Biphoton state of the switchable source: phase-matching functions, branch
spectra, bandwidths, anticorrelation dips and entanglement entropy.

The signal/idler detuning nu (rad/s) enters every mismatch linearly,

    dbeta_x(nu) = D_x nu        (rad/m, D_x in s/m)

with

    D_oeo = -(b'_so - b'_ie)    D_eoo = -(b'_se - b'_io)
    D_oe  =   b'_so - b'_se     D_eo  = -D_oe

where b' = d beta / d omega of the guided modes. The four output branches
carry |h|^2 of one (orthogonal pair) or two (parallel pair, SPDC times EO)
phase-matching factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateState, GridTooNarrow
from .material import CONGRUENT_LN, DEFAULT_CONSTANTS, SellmeierModel
from .qpm import idler_wavelength
from .waveguide import dispersion_parameter, overlap_integral, solve_mode

C_LIGHT = 299792458.0
CONVENTIONS = ("physical", "normalized")

# each branch as the product of the processes that built it
BRANCH_FACTORS = {
    "oe": ("oeo",),
    "eo": ("eoo",),
    "oo": ("eo", "eoo"),
    "ee": ("oe", "oeo"),
}
ORTHOGONAL = ("oe", "eo")
PARALLEL = ("oo", "ee")


def h_eval(x, convention="physical"):
    """Phase-matching amplitude h(x) = exp(-i x/2) sinc(x/2).

    ``convention="physical"`` uses sin(u)/u, the exact value of the length
    integral. ``"normalized"`` uses sin(pi u)/(pi u), which narrows every
    spectral feature by a factor pi.
    """
    x = np.asarray(x, dtype=float)
    if convention == "physical":
        mag = np.sinc(x / (2.0 * math.pi))
    elif convention == "normalized":
        mag = np.sinc(x / 2.0)
    else:
        raise ValueError(f"unknown sinc convention {convention!r}")
    out = np.exp(-0.5j * x) * mag
    return complex(out) if out.ndim == 0 else out


def half_power_argument(convention="physical") -> float:
    """x* > 0 with |h(x*)|^2 = 1/2 (2.78311 for the physical convention)."""
    x = brentq(lambda u: abs(h_eval(u, "physical")) ** 2 - 0.5, 1.0, 4.0, xtol=1e-14)
    return x if convention == "physical" else x / math.pi


def first_zero_argument(convention="physical") -> float:
    return 2.0 * math.pi if convention == "physical" else 2.0


@dataclass(frozen=True)
class DetuningExpansion:
    """Linearized mismatch dbeta = D nu of one process (D in s/m)."""

    label: str
    D: float
    evaluator: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.label not in ("oeo", "eoo", "oe", "eo"):
            raise ValueError(f"unknown process label {self.label!r}")

    def mismatch(self, nu):
        """dbeta(nu) in rad/m."""
        if self.evaluator is not None:
            return self.evaluator(nu)
        return self.D * np.asarray(nu, dtype=float)


def walkoff_expansions(beta_prime: dict) -> dict:
    """Build the four expansions from b' values keyed 'so', 'se', 'io', 'ie'."""
    d_oe = beta_prime["so"] - beta_prime["se"]
    return {
        "oeo": DetuningExpansion("oeo", -(beta_prime["so"] - beta_prime["ie"])),
        "eoo": DetuningExpansion("eoo", -(beta_prime["se"] - beta_prime["io"])),
        "oe": DetuningExpansion("oe", d_oe),
        "eo": DetuningExpansion("eo", -d_oe),
    }


def beta_primes(geom, lam_p, lam_s, T, model: SellmeierModel = CONGRUENT_LN) -> dict:
    """b' (s/m) of the signal and idler guided modes for both polarizations."""
    lam_i = idler_wavelength(lam_p, lam_s)
    out = {}
    for wave, lam in (("s", lam_s), ("i", lam_i)):
        for pol in ("o", "e"):
            out[wave + pol] = dispersion_parameter(geom, pol, lam, T, model)
    return out


def design_expansions(geom, lam_p, lam_s, T, model: SellmeierModel = CONGRUENT_LN) -> dict:
    return walkoff_expansions(beta_primes(geom, lam_p, lam_s, T, model))


@dataclass(frozen=True)
class BiphotonSpectrum:
    branch: str
    nu: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)  # normalized |h...|^2
    length: float  # m
    evaluate: object = field(default=None, compare=False, repr=False)


def _branch_amplitude(branch, length, expansions, nu, convention):
    if branch not in BRANCH_FACTORS:
        raise ValueError(f"unknown branch {branch!r}")
    amp = np.ones(np.shape(nu), dtype=complex)
    for label in BRANCH_FACTORS[branch]:
        amp = amp * h_eval(length * expansions[label].mismatch(nu), convention)
    return amp


def frequency_grid(length, expansions, branch=None, n_points=4001, zeros=8.0, convention="physical"):
    """Symmetric nu grid spanning +-``zeros`` sinc zeros of the widest factor.

    ``branch=None`` takes the widest factor over every process.
    """
    labels = BRANCH_FACTORS[branch] if branch is not None else list(expansions)
    d_min = min(abs(expansions[lab].D) for lab in labels)
    if d_min == 0.0:
        raise ValueError("zero walk-off gives an unbounded spectrum; supply a grid")
    nu0 = first_zero_argument(convention) / (length * d_min)
    return np.linspace(-zeros * nu0, zeros * nu0, n_points)


def spectrum(branch, length, expansions, nu=None, convention="physical") -> BiphotonSpectrum:
    """Normalized |h|^2 (product over the branch's processes) on a nu grid.

    ``length`` is in m. The maximum over the grid is scaled to 1.
    """
    if not length > 0:
        raise ValueError("length must be positive")
    if nu is None:
        nu = frequency_grid(length, expansions, branch, convention=convention)
    nu = np.asarray(nu, dtype=float)
    vals = np.abs(_branch_amplitude(branch, length, expansions, nu, convention)) ** 2
    peak = float(vals.max())
    if peak <= 0:
        raise GridTooNarrow("spectrum vanishes on the whole grid")

    def evaluate(x):
        return np.abs(_branch_amplitude(branch, length, expansions, np.asarray(x, float), convention)) ** 2 / peak

    return BiphotonSpectrum(branch, nu, vals / peak, length, evaluate)


def _half_crossing(spec, i_in, i_out):
    a, b = spec.nu[i_in], spec.nu[i_out]
    if spec.evaluate is None:
        ya, yb = spec.values[i_in] - 0.5, spec.values[i_out] - 0.5
        return a + (b - a) * ya / (ya - yb)
    return brentq(lambda x: float(spec.evaluate(x)) - 0.5, a, b, xtol=1e-14 * max(abs(a), abs(b), 1.0))


def fwhm_nu(spec: BiphotonSpectrum) -> float:
    """Full width at half maximum in rad/s, refined between grid points."""
    v = spec.values
    i0 = int(np.argmax(v))
    below = np.nonzero(v < 0.5)[0]
    left = below[below < i0]
    right = below[below > i0]
    if left.size == 0 or right.size == 0:
        raise GridTooNarrow("half maximum not bracketed inside the grid")
    lo = _half_crossing(spec, left[-1] + 1, left[-1])
    hi = _half_crossing(spec, right[0] - 1, right[0])
    return hi - lo


def fwhm_nm(spec: BiphotonSpectrum, lam_center: float, c=C_LIGHT) -> float:
    """FWHM converted to wavelength (nm) around ``lam_center`` (um)."""
    lam_m = lam_center * 1e-6
    return lam_m ** 2 * fwhm_nu(spec) / (2.0 * math.pi * c) * 1e9


def dip_grid(length, expansions, branch, zeros=400, per_zero=16, convention="physical"):
    """Wide nu grid for the anticorrelation integral (tails below 1e-6)."""
    n = int(2 * zeros * per_zero + 1)
    return frequency_grid(length, expansions, branch, n_points=n, zeros=zeros, convention=convention)


def hom_dip(spec: BiphotonSpectrum, tau, tail_tol=1e-6, tail_fraction=0.02):
    """Coincidence rate R_C(tau) = 1 - V(tau)/2.

    V(tau) = int |h|^2 cos(nu tau) dnu / int |h|^2 dnu by the trapezoid
    rule on the spectrum's own grid, so R_C(0) = 1/2. The outer
    ``tail_fraction`` of the grid on each side must stay below
    ``tail_tol`` of the peak.
    """
    v = spec.values
    k = max(int(tail_fraction * v.size), 1)
    if max(v[:k].max(), v[-k:].max()) > tail_tol * v.max():
        raise GridTooNarrow("spectral tails exceed the tolerance; widen the nu grid")
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    norm = np.trapezoid(v, spec.nu)
    vis = np.array([np.trapezoid(v * np.cos(spec.nu * t), spec.nu) for t in tau]) / norm
    vis[tau == 0.0] = 1.0
    return 1.0 - 0.5 * vis


def triangle_dip(tau, length, D):
    """Analytic R_C for a single physical sinc^2 factor with walk-off D."""
    tau = np.asarray(tau, dtype=float)
    return 1.0 - 0.5 * np.maximum(0.0, 1.0 - np.abs(tau) / (length * abs(D)))


# ---------------------------------------------------------------- state ---

@dataclass(frozen=True)
class StateInputs:
    """Everything the four pair amplitudes depend on.

    Unit-power profiles make every normalization constant N equal to 1;
    the pump amplitude and the vacuum permittivity are folded into the
    arbitrary overall scale.
    """

    n_so: float
    n_se: float
    n_io: float
    n_ie: float
    F_oe: float
    F_eo: float
    F_EO: float
    G31: float
    G3m1: float
    G11: float
    Omega_s: float
    Omega_i: float
    length: float  # m
    d31: float = DEFAULT_CONSTANTS.d31
    gamma51: float = DEFAULT_CONSTANTS.gamma51
    E_p0: float = 1.0


@dataclass(frozen=True)
class StateCoefficients:
    P: dict  # complex amplitudes keyed 'oe', 'eo', 'oo', 'ee'
    weights: dict  # lambda_xy
    branch: str  # 'orthogonal' or 'parallel'
    amplitudes: dict = field(default_factory=dict)  # signed/complex C_xy for the pure state
    provenance: dict = field(default_factory=dict)


def pair_amplitudes(inp: StateInputs, E_a: float) -> dict:
    """P_oe, P_eo, P_oo, P_ee in arbitrary units (see ``provenance``)."""
    L = inp.length
    common = inp.E_p0 * inp.d31
    root_oi = math.sqrt(inp.Omega_s * inp.Omega_i)
    P = {
        "oe": 1j * math.pi * L * common * inp.G31 * inp.F_oe * root_oi / (inp.n_so * inp.n_ie),
        "eo": 1j * math.pi * L * common * inp.G3m1 * inp.F_eo * root_oi / (inp.n_se * inp.n_io),
    }
    eo_scale = 0.5 * math.pi ** 2 * common * inp.gamma51 * inp.Omega_s * E_a * inp.G11 * inp.F_EO * L ** 2
    # SPDC factor times the EO factor n_so n_se, which is the same both ways
    P["oo"] = eo_scale * inp.G3m1 * inp.F_eo * root_oi * (inp.n_so * inp.n_se) / (inp.n_se * inp.n_io)
    P["ee"] = eo_scale * inp.G31 * inp.F_oe * root_oi * (inp.n_so * inp.n_se) / (inp.n_so * inp.n_ie)
    return P


def _provenance(inp: StateInputs, weighting, convention):
    return {
        "units": "arbitrary; N = 1 (unit-power profiles), E_p0 = 1, vacuum permittivity folded",
        "weighting": weighting,
        "sinc_convention": convention,
        "factors": {
            "oe": "i pi L E_p0 d31 G31 F_oe sqrt(Os Oi) / (n_so n_ie)",
            "eo": "i pi L E_p0 d31 G3-1 F_eo sqrt(Os Oi) / (n_se n_io)",
            "oo": "(pi^2/2) d31 g51 Os E_p0 E_a G11 G3-1 F_EO F_eo L^2 sqrt(Os Oi) n_so n_se / (n_se n_io)",
            "ee": "(pi^2/2) d31 g51 Os E_p0 E_a G11 G31 F_EO F_oe L^2 sqrt(Os Oi) n_so n_se / (n_so n_ie)",
        },
        "inputs": {k: float(v) for k, v in inp.__dict__.items()},
    }


def state_coefficients(inp: StateInputs, E_a: float, expansions=None, nu=None,
                       weighting="integrated", convention="physical", eta=None) -> StateCoefficients:
    """Pair amplitudes, branch weights and active branch for a field E_a.

    The field acts as an ideal switch: E_a = 0 leaves the orthogonal pair,
    any nonzero E_a gives the parallel pair. ``weighting="integrated"``
    sets lambda_xy = |int P_xy h dnu|^2 on the grid ``nu``;
    ``"perfect"`` evaluates at exact phase matching, lambda_xy = |P_xy|^2.
    ``eta`` (a pair of conversion efficiencies for the oe -> ee and
    eo -> oo paths) leaves a fraction 1 - eta of each orthogonal pair
    unconverted in the parallel state.
    """
    P = pair_amplitudes(inp, E_a)
    if weighting == "integrated":
        if expansions is None:
            raise ValueError("integrated weighting needs detuning expansions")
        if nu is None:
            nu = frequency_grid(inp.length, expansions, convention=convention)
        nu = np.asarray(nu, dtype=float)
        amps = {
            b: complex(np.trapezoid(P[b] * _branch_amplitude(b, inp.length, expansions, nu, convention), nu))
            for b in BRANCH_FACTORS
        }
    elif weighting == "perfect":
        amps = dict(P)
    else:
        raise ValueError(f"unknown weighting {weighting!r}")

    active = "orthogonal" if E_a == 0 else "parallel"
    C = {b: 0j for b in BRANCH_FACTORS}
    if active == "orthogonal":
        C["oe"], C["eo"] = amps["oe"], amps["eo"]
    else:
        C["oo"], C["ee"] = amps["oo"], amps["ee"]
        if eta is not None:
            eta_ee, eta_oo = (eta, eta) if np.isscalar(eta) else eta
            C["ee"] *= math.sqrt(eta_ee)
            C["oo"] *= math.sqrt(eta_oo)
            C["oe"] = amps["oe"] * math.sqrt(1.0 - eta_ee)
            C["eo"] = amps["eo"] * math.sqrt(1.0 - eta_oo)
    weights = {b: abs(c) ** 2 for b, c in C.items()}
    return StateCoefficients(P, weights, active, C, _provenance(inp, weighting, convention))


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def entropy(coeffs: StateCoefficients) -> float:
    """Von Neumann entropy (bits) of either photon's reduced polarization state.

    For the ideal switch this is the binary entropy of the active pair's
    weight ratio. With leftover orthogonal amplitudes the full 2x2
    coefficient matrix is Schmidt-decomposed.
    """
    w = coeffs.weights
    pair = ORTHOGONAL if coeffs.branch == "orthogonal" else PARALLEL
    other = PARALLEL if coeffs.branch == "orthogonal" else ORTHOGONAL
    if all(w[b] == 0.0 for b in other):
        a, b = w[pair[0]], w[pair[1]]
        if a + b == 0.0:
            raise DegenerateState("both branch weights vanish")
        return binary_entropy(a / (a + b))
    c = coeffs.amplitudes
    # rows: signal o/e, columns: idler o/e
    mat = np.array([[c["oo"], c["oe"]], [c["eo"], c["ee"]]], dtype=complex)
    s2 = np.linalg.svd(mat, compute_uv=False) ** 2
    if s2.sum() == 0.0:
        raise DegenerateState("all amplitudes vanish")
    p = s2[s2 > 0] / s2.sum()
    return float(-np.sum(p * np.log2(p)))


def state_inputs(geom, design, lam_p, lam_s, T, model: SellmeierModel = CONGRUENT_LN,
                 constants=DEFAULT_CONSTANTS, cutoff=None) -> StateInputs:
    """Collect indices, overlaps and grating coefficients at a design point.

    ``design`` is a grating.PolingDesign; its length sets L. ``cutoff``
    sums coincident grating orders into each effective coefficient.
    """
    from .grating import effective_coefficient
    from .material import wavelength_to_omega

    lam_i = idler_wavelength(lam_p, lam_s)
    pump = solve_mode(geom, "o", lam_p, T, model)
    so, se = solve_mode(geom, "o", lam_s, T, model), solve_mode(geom, "e", lam_s, T, model)
    io, ie = solve_mode(geom, "o", lam_i, T, model), solve_mode(geom, "e", lam_i, T, model)
    return StateInputs(
        n_so=so.n_eff, n_se=se.n_eff, n_io=io.n_eff, n_ie=ie.n_eff,
        F_oe=overlap_integral([pump, so, ie]),
        F_eo=overlap_integral([pump, se, io]),
        F_EO=overlap_integral([so, se]),
        G31=effective_coefficient(3, 1, design, cutoff),
        G3m1=effective_coefficient(3, -1, design, cutoff),
        G11=effective_coefficient(1, 1, design, cutoff),
        Omega_s=float(wavelength_to_omega(lam_s, constants.c)),
        Omega_i=float(wavelength_to_omega(lam_i, constants.c)),
        length=design.length_cm * 1e-2,
        d31=constants.d31,
        gamma51=constants.gamma51,
    )
