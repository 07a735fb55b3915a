"""
Variational Hermite-Gauss solver for a Ti-indiffused channel waveguide.

Index profile (identical for both polarizations, contrast independent of
wavelength)::

    n(y, z) = n_bulk + dn_max * f(y) * g(z)
    f(y) = [erf((W/2 + y)/D) + erf((W/2 - y)/D)] / (2 erf(W/(2D)))
    g(z) = exp(-z^2 / d^2)

with W the strip width, D the lateral diffusion length and d the diffusion
depth. The depth profile is mirrored about the surface, which turns the
half-space problem into a symmetric one so that the (0,0) Hermite-Gauss
trial function

    psi(y, z) = sqrt(2/(pi wy wz)) exp(-y^2/wy^2 - z^2/wz^2)

is admissible. The scalar Rayleigh quotient

    n_eff^2 = max_{wy,wz}  <n^2>_psi - (1/wy^2 + 1/wz^2) / k^2

is maximized by golden-section search on each axis with alternating sweeps.
Every profile average under the Gaussian weight has a closed form (the
quadratic lateral one through Owen's T function), so no quadrature enters
the objective.
"""

from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, owens_t

from .errors import GeometryMismatch, NoGuidedMode, NonConvergence
from .material import CONGRUENT_LN, Polarization, SellmeierModel, bulk_index

GUIDANCE_CUTOFF = 1e-7
WIDTH_TOL = 1e-4  # um
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class WaveguideGeometry:
    width: float = 10.0
    depth: float = 10.0
    dn_max: float = 0.003
    lateral_diffusion: float = 5.0

    def __post_init__(self):
        if not (self.width > 0 and self.depth > 0 and self.lateral_diffusion > 0):
            raise ValueError("waveguide width, depth and lateral diffusion must be positive")
        if not (0.0 <= self.dn_max < 0.1):
            raise ValueError("dn_max must lie in [0, 0.1)")

    def digest(self) -> str:
        key = f"{self.width!r}|{self.depth!r}|{self.dn_max!r}|{self.lateral_diffusion!r}"
        return hashlib.sha256(key.encode()).hexdigest()[:16]

    def lateral_profile(self, y):
        a = self.width / (2.0 * self.lateral_diffusion)
        y = np.asarray(y, dtype=float)
        return (erf(a + y / self.lateral_diffusion) + erf(a - y / self.lateral_diffusion)) / (2.0 * erf(a))

    def depth_profile(self, z):
        z = np.asarray(z, dtype=float)
        return np.exp(-(z / self.depth) ** 2)

    def index(self, n_bulk, y, z):
        return n_bulk + self.dn_max * self.lateral_profile(y) * self.depth_profile(z)


@dataclass(frozen=True)
class GuidedMode:
    pol: Polarization
    wavelength: float
    temperature: float
    n_eff: float
    w_y: float
    w_z: float
    n_bulk: float
    geometry: WaveguideGeometry

    @property
    def amplitude(self) -> float:
        """Peak of the unit-power profile: integral of psi^2 over the plane is 1."""
        return math.sqrt(2.0 / (math.pi * self.w_y * self.w_z))

    def profile(self, y, z):
        return self.amplitude * np.exp(-(np.asarray(y) / self.w_y) ** 2 - (np.asarray(z) / self.w_z) ** 2)


# ---------------------------------------------------------------------------
# variational objective


def _lateral_mean(geom, wy):
    # E[erf(a + bY)] = erf(a / sqrt(1 + 2 b^2 s^2)) for Y ~ N(0, s^2), s = wy/2
    a = geom.width / (2.0 * geom.lateral_diffusion)
    return erf(a / np.sqrt(1.0 + 0.5 * (wy / geom.lateral_diffusion) ** 2)) / erf(a)


def _lateral_mean_sq(geom, wy):
    # E[f(Y)^2] through Owen's T: both erf products reduce to bivariate
    # normal probabilities on the diagonal.
    a = geom.width / (2.0 * geom.lateral_diffusion)
    s = np.asarray(wy) / (2.0 * geom.lateral_diffusion)
    h = math.sqrt(2.0) * a / np.sqrt(1.0 + 2.0 * s * s)
    r = np.sqrt(1.0 + 4.0 * s * s)
    return (1.0 - 4.0 * (owens_t(h, 1.0 / r) + owens_t(h, r))) / erf(a) ** 2


def _depth_mean(geom, wz):
    return 1.0 / np.sqrt(1.0 + 0.5 * (wz / geom.depth) ** 2)


def _depth_mean_sq(geom, wz):
    return 1.0 / np.sqrt(1.0 + (wz / geom.depth) ** 2)


def effective_index_squared(geom, n_bulk, k, wy, wz):
    """Rayleigh quotient for trial widths (wy, wz); k = 2 pi / lam in 1/um."""
    dn = geom.dn_max
    lat1, lat2 = _lateral_mean(geom, wy), _lateral_mean_sq(geom, wy)
    dep1, dep2 = _depth_mean(geom, wz), _depth_mean_sq(geom, wz)
    potential = 2.0 * n_bulk * dn * lat1 * dep1 + dn * dn * lat2 * dep2
    kinetic = (1.0 / wy ** 2 + 1.0 / wz ** 2) / k ** 2
    return n_bulk ** 2 + potential - kinetic


def _golden_max(fun, lo, hi, tol):
    """Vectorized golden-section maximization on [lo, hi] (arrays)."""
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    n_iter = int(math.ceil(math.log(tol / float(np.max(b - a))) / math.log(_GOLDEN)))
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max(n_iter, 1)):
        left = fc > fd  # maximum lies in [a, d]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - _GOLDEN * (b - a)
        new_d = a + _GOLDEN * (b - a)
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        f_new = fun(np.where(left, new_c, new_d))
        fc, fd = np.where(left, f_new, fd), np.where(left, fc, f_new)
        c, d = c_next, d_next
    return 0.5 * (a + b)


def _width_bounds(geom):
    return 0.05, 20.0 * max(geom.width, geom.depth, geom.lateral_diffusion)


def optimize_widths(geom, n_bulk, k, max_sweeps=200):
    """Alternating golden-section sweeps; returns (n_eff, wy, wz) arrays.

    Every element is iterated independently of the others in the batch so
    results do not depend on which points are solved together.
    """
    n_bulk, k = np.broadcast_arrays(np.asarray(n_bulk, dtype=float), np.asarray(k, dtype=float))
    shape = n_bulk.shape
    nb, kk = n_bulk.ravel(), k.ravel()
    lo, hi = _width_bounds(geom)
    wy = np.full(nb.shape, 0.5 * geom.width)
    wz = np.full(nb.shape, 0.5 * geom.depth)
    active = np.arange(nb.size)
    f_prev = effective_index_squared(geom, nb, kk, wy, wz)
    for _ in range(max_sweeps):
        a_nb, a_k, a_wz = nb[active], kk[active], wz[active]
        new_wy = _golden_max(
            lambda w: effective_index_squared(geom, a_nb, a_k, w, a_wz),
            np.full(active.size, lo), np.full(active.size, hi), WIDTH_TOL,
        )
        new_wz = _golden_max(
            lambda w: effective_index_squared(geom, a_nb, a_k, new_wy, w),
            np.full(active.size, lo), np.full(active.size, hi), WIDTH_TOL,
        )
        change = np.maximum(np.abs(new_wy - wy[active]), np.abs(new_wz - wz[active]))
        f_new = effective_index_squared(geom, a_nb, a_k, new_wy, new_wz)
        # a shallow ridge (weak guide) keeps moving the widths long after
        # the objective has stopped improving
        gain = f_new - f_prev[active]
        wy[active], wz[active] = new_wy, new_wz
        f_prev[active] = f_new
        active = active[(change > 0.1 * WIDTH_TOL) & (gain > 8 * np.finfo(float).eps * f_new)]
        if active.size == 0:
            break
    else:
        raise NonConvergence("alternating width sweeps did not settle")
    n_eff = np.sqrt(effective_index_squared(geom, nb, kk, wy, wz))
    return n_eff.reshape(shape), wy.reshape(shape), wz.reshape(shape)


def solve_modes(geom, pol, lam, T, model: SellmeierModel = CONGRUENT_LN):
    """Batch solver. Returns (n_eff, w_y, w_z, n_bulk, guided) arrays; never raises
    for missing guidance, ``guided`` marks valid entries instead."""
    lam, T = np.broadcast_arrays(np.asarray(lam, dtype=float), np.asarray(T, dtype=float))
    n_b = np.asarray(bulk_index(pol, lam, T, model), dtype=float)
    k = 2.0 * math.pi / lam
    if geom.dn_max == 0.0:
        nan = np.full(lam.shape, np.nan)
        return nan, nan, nan, n_b, np.zeros(lam.shape, dtype=bool)
    n_eff, wy, wz = optimize_widths(geom, n_b, k)
    _, hi = _width_bounds(geom)
    at_edge = (wy > hi - 10 * WIDTH_TOL) | (wz > hi - 10 * WIDTH_TOL)
    guided = (n_eff - n_b > GUIDANCE_CUTOFF) & ~at_edge
    return n_eff, wy, wz, n_b, guided


_MODE_STORE: dict = {}
_STORE_LOCK = threading.Lock()
_SOLVE_COUNT = 0


def mode_key(geom, pol, lam, T, model):
    return (geom, Polarization.parse(pol), float(lam), float(T), model)


def solve_mode(geom: WaveguideGeometry, pol, lam: float, T: float, model: SellmeierModel = CONGRUENT_LN) -> GuidedMode:
    """Fundamental mode maximizing the variational effective index.

    Results are memoized per (geometry, polarization, wavelength,
    temperature, model); the memo is value-identical to recomputation.
    """
    global _SOLVE_COUNT
    key = mode_key(geom, pol, lam, T, model)
    mode = _MODE_STORE.get(key)
    if mode is not None:
        return mode
    geom, pol, lam, T, model = key
    n_eff, wy, wz, n_b, guided = solve_modes(geom, pol, lam, T, model)
    if not bool(guided):
        raise NoGuidedMode(
            f"no guided {pol.value}-mode at {lam} um, {T} C for {geom} "
            f"(n_eff - n_bulk = {float(n_eff - n_b):.3e})"
        )
    mode = GuidedMode(pol, lam, T, float(n_eff), float(wy), float(wz), float(n_b), geom)
    with _STORE_LOCK:
        _SOLVE_COUNT += 1
        _MODE_STORE.setdefault(key, mode)
    return mode


def preload_modes(entries):
    """Insert ``(model, mode)`` pairs, e.g. reloaded from a persistent cache."""
    with _STORE_LOCK:
        for model, mode in entries:
            _MODE_STORE.setdefault(mode_key(mode.geometry, mode.pol, mode.wavelength, mode.temperature, model), mode)


def stored_modes():
    """Snapshot of the memo as ``(model, mode)`` pairs."""
    with _STORE_LOCK:
        return [(key[4], mode) for key, mode in _MODE_STORE.items()]


def solve_count() -> int:
    """Number of modes actually solved (memo misses) since the last clear."""
    return _SOLVE_COUNT


def clear_mode_cache():
    global _SOLVE_COUNT
    with _STORE_LOCK:
        _MODE_STORE.clear()
        _SOLVE_COUNT = 0


def propagation_constant(mode: GuidedMode) -> float:
    """beta = 2 pi n_eff / lam in rad/um."""
    return 2.0 * math.pi * mode.n_eff / mode.wavelength


def central_derivative(fun, x0, h0, rtol=1e-6, max_halvings=20):
    """Central difference with step halving until successive estimates agree."""
    h = h0
    prev = (fun(x0 + h) - fun(x0 - h)) / (2.0 * h)
    for _ in range(max_halvings):
        h *= 0.5
        cur = (fun(x0 + h) - fun(x0 - h)) / (2.0 * h)
        if abs(cur - prev) <= rtol * abs(cur) or cur == prev:
            return cur
        prev = cur
    raise NonConvergence(f"derivative did not settle after {max_halvings} halvings")


def dispersion_parameter(geom, pol, lam, T, model: SellmeierModel = CONGRUENT_LN, rel_step=1e-3, c=299792458.0):
    """beta' = d beta / d omega of the guided mode, in s/m."""
    omega0 = 2.0 * math.pi * c / (lam * 1e-6)

    def beta_of_omega(omega):
        lam_um = 2.0 * math.pi * c / omega * 1e6
        return solve_mode(geom, pol, lam_um, T, model).n_eff * omega / c

    return central_derivative(beta_of_omega, omega0, rel_step * omega0)


def overlap_integral(modes) -> float:
    """Transverse overlap of unit-power Gaussian profiles.

    Two modes give the dimensionless field overlap in (0, 1]; three modes
    give the nonlinear overlap in 1/um.
    """
    modes = list(modes)
    if len(modes) not in (2, 3):
        raise ValueError("overlap needs 2 or 3 modes")
    geoms = {m.geometry for m in modes}
    if len(geoms) != 1:
        raise GeometryMismatch("modes come from different waveguide geometries")
    out = 1.0
    for axis in ("w_y", "w_z"):
        w = np.array([getattr(m, axis) for m in modes])
        if len(modes) == 2:
            out *= math.sqrt(2.0 * w[0] * w[1] / (w[0] ** 2 + w[1] ** 2))
        else:
            norm = np.prod((2.0 / (math.pi * w ** 2)) ** 0.25)
            out *= float(norm * math.sqrt(math.pi / np.sum(1.0 / w ** 2)))
    return out
