"""
Quasi-phase-matching design for the three simultaneous processes

    o_p -> o_s + e_i :  dbeta1 = b_po - b_so - b_ie = K_{m1,n1}
    o_p -> e_s + o_i :  dbeta2 = b_po - b_se - b_io = K_{m2,n2}
    o_s <-> e_s (EO) :  dbeta3 = b_so - b_se        = K_{m3,n3}

The first two fix the periods; the third is the residual
Delta = dbeta3 - K_{m3,n3}(period1, period2), whose zero set marks operating
points where all three are matched at once.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import EmptyLocus, NegativePeriod, NonPhysical, SingularOrders
from .grating import reciprocal_vector
from .material import CONGRUENT_LN, Polarization, SellmeierModel
from .waveguide import propagation_constant, solve_mode, solve_modes

DEFAULT_ORDERS = ((3, 1), (3, -1), (1, 1))

O, E = Polarization.O, Polarization.E


@dataclass(frozen=True)
class ProcessSpec:
    kind: str  # "spdc_ooe", "spdc_oeo" or "eo"
    pols: tuple  # (pump, signal, idler) or (signal_in, signal_out)
    order: tuple

    @property
    def consumes_pump(self) -> bool:
        return self.kind.startswith("spdc")


def default_processes(orders=DEFAULT_ORDERS):
    return (
        ProcessSpec("spdc_ooe", (O, O, E), tuple(orders[0])),
        ProcessSpec("spdc_oeo", (O, E, O), tuple(orders[1])),
        ProcessSpec("eo", (O, E), tuple(orders[2])),
    )


@dataclass(frozen=True)
class PhaseMatchSolution:
    lam_p: float
    lam_s: float
    T: float
    period1: float
    period2: float
    residuals: tuple  # (r1, r2, r3) rad/um
    orders: tuple = DEFAULT_ORDERS
    mismatches: tuple = field(default=(), repr=False)

    @property
    def lam_i(self) -> float:
        return idler_wavelength(self.lam_p, self.lam_s)


def idler_wavelength(lam_p: float, lam_s: float) -> float:
    """Energy conservation 1/lam_i = 1/lam_p - 1/lam_s (um)."""
    if not (lam_s > lam_p > 0):
        raise NonPhysical(f"need lam_s > lam_p > 0, got lam_p={lam_p}, lam_s={lam_s}")
    return 1.0 / (1.0 / lam_p - 1.0 / lam_s)


def mismatches(geom, lam_p, lam_s, T, model: SellmeierModel = CONGRUENT_LN):
    """(dbeta1, dbeta2, dbeta3) in rad/um from guided-mode propagation constants."""
    lam_i = idler_wavelength(lam_p, lam_s)

    def b(pol, lam):
        return propagation_constant(solve_mode(geom, pol, lam, T, model))

    b_po = b(O, lam_p)
    b_so, b_se = b(O, lam_s), b(E, lam_s)
    b_io, b_ie = b(O, lam_i), b(E, lam_i)
    return (b_po - b_so - b_ie, b_po - b_se - b_io, b_so - b_se)


def solve_periods(dbeta1, dbeta2, orders=DEFAULT_ORDERS[:2]):
    """Periods (um) with K_{m1,n1} = dbeta1 and K_{m2,n2} = dbeta2.

    Solved exactly as a 2x2 linear system in (1/period1, 1/period2).
    """
    (m1, n1), (m2, n2) = orders[0], orders[1]
    det = m1 * n2 - m2 * n1
    if det == 0:
        raise SingularOrders(f"orders {orders[0]} and {orders[1]} are linearly dependent")
    two_pi = 2.0 * math.pi
    inv1 = (dbeta1 * n2 - dbeta2 * n1) / (two_pi * det)
    inv2 = (m1 * dbeta2 - m2 * dbeta1) / (two_pi * det)
    if not (inv1 > 0 and inv2 > 0):
        raise NegativePeriod(f"solve gives 1/period = ({inv1:.3e}, {inv2:.3e}) 1/um")
    return 1.0 / inv1, 1.0 / inv2


def design(geom, lam_p, lam_s, T, orders=DEFAULT_ORDERS, model: SellmeierModel = CONGRUENT_LN) -> PhaseMatchSolution:
    """Solve both periods at a wavelength/temperature point and audit all three conditions."""
    d1, d2, d3 = mismatches(geom, lam_p, lam_s, T, model)
    p1, p2 = solve_periods(d1, d2, orders[:2])
    r = (
        reciprocal_vector(*orders[0], p1, p2) - d1,
        reciprocal_vector(*orders[1], p1, p2) - d2,
        d3 - reciprocal_vector(*orders[2], p1, p2),
    )
    return PhaseMatchSolution(lam_p, lam_s, T, p1, p2, r, tuple(map(tuple, orders)), (d1, d2, d3))


def delta_at(geom, lam_p, lam_s, T, orders=DEFAULT_ORDERS, model: SellmeierModel = CONGRUENT_LN) -> float:
    """Delta = dbeta3 - K_{m3,n3} with periods solved from the SPDC pair."""
    return design(geom, lam_p, lam_s, T, orders, model).residuals[2]


def bisect(fun, a, b, fa=None, fb=None, ftol=1e-8, max_iter=200):
    """Plain bisection on a sign change; stops once |f| < ftol."""
    fa = fun(a) if fa is None else fa
    fb = fun(b) if fb is None else fb
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise ValueError("bisection needs a sign change")
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        fm = fun(mid)
        if abs(fm) < ftol or mid in (a, b):
            return mid
        if np.sign(fm) == np.sign(fa):
            a, fa = mid, fm
        else:
            b, fb = mid, fm
    return 0.5 * (a + b)


def solve_signal_wavelength(geom, lam_p, T, bracket=None, orders=DEFAULT_ORDERS, model=CONGRUENT_LN) -> float:
    """Signal wavelength on the Delta = 0 locus for a fixed pump and temperature.

    The default bracket starts just above degeneracy (lam_s = 2 lam_p), where
    period2 diverges, and stops at 3 lam_p.
    """
    if bracket is None:
        bracket = (2.05 * lam_p, min(3.0 * lam_p, model.wavelength_range[1]))
    return bisect(lambda s: delta_at(geom, lam_p, s, T, orders, model), *bracket, ftol=1e-10)


# ---------------------------------------------------------------------------
# maps


@dataclass
class DeltaMap:
    """Delta on a grid. ``values[j, i]`` belongs to (axis1[i], axis2[j])."""

    axis1: np.ndarray
    axis2: np.ndarray
    values: np.ndarray
    valid: np.ndarray
    axis1_name: str = "signal_um"
    axis2_name: str = "pump_um"
    evaluate: Callable | None = field(default=None, repr=False)


def _beta_grid(geom, pol, lam, T, model):
    """Propagation constants on broadcast arrays, solving each distinct (lam, T) once."""
    lam, T = np.broadcast_arrays(np.asarray(lam, dtype=float), np.asarray(T, dtype=float))
    pairs = np.stack((lam.ravel(), T.ravel()), axis=1)
    uniq, inverse = np.unique(pairs, axis=0, return_inverse=True)
    n_eff, _, _, _, guided = solve_modes(geom, pol, uniq[:, 0], uniq[:, 1], model)
    beta = 2.0 * math.pi * n_eff / uniq[:, 0]
    inverse = inverse.reshape(-1)
    return beta[inverse].reshape(lam.shape), guided[inverse].reshape(lam.shape)


def delta_grid(geom, lam_p, lam_s, T, orders=DEFAULT_ORDERS, model=CONGRUENT_LN):
    """Vectorized Delta over broadcast (lam_p, lam_s, T); returns (delta, valid, p1, p2)."""
    lam_p, lam_s, T = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (lam_p, lam_s, T)))
    shape = lam_p.shape
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_i = 1.0 / (1.0 / lam_p - 1.0 / lam_s)
    lo, hi = model.wavelength_range
    tlo, thi = model.temperature_range
    ok = (lam_s > lam_p) & (T >= tlo) & (T <= thi)
    for lam in (lam_p, lam_s, lam_i):
        ok &= (lam >= lo) & (lam <= hi)
    delta = np.full(shape, np.nan)
    p1 = np.full(shape, np.nan)
    p2 = np.full(shape, np.nan)
    if not ok.any():
        return delta, ok, p1, p2
    lp, ls, li, t = lam_p[ok], lam_s[ok], lam_i[ok], T[ok]
    b_po, g1 = _beta_grid(geom, O, lp, t, model)
    b_so, g2 = _beta_grid(geom, O, ls, t, model)
    b_se, g3 = _beta_grid(geom, E, ls, t, model)
    b_io, g4 = _beta_grid(geom, O, li, t, model)
    b_ie, g5 = _beta_grid(geom, E, li, t, model)
    d1 = b_po - b_so - b_ie
    d2 = b_po - b_se - b_io
    d3 = b_so - b_se
    (m1, n1), (m2, n2), (m3, n3) = orders
    det = m1 * n2 - m2 * n1
    if det == 0:
        raise SingularOrders(f"orders {orders[0]} and {orders[1]} are linearly dependent")
    two_pi = 2.0 * math.pi
    inv1 = (d1 * n2 - d2 * n1) / (two_pi * det)
    inv2 = (m1 * d2 - m2 * d1) / (two_pi * det)
    cell_ok = g1 & g2 & g3 & g4 & g5 & (inv1 > 0) & (inv2 > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        per1, per2 = 1.0 / inv1, 1.0 / inv2
        k3 = two_pi * m3 / per1 + two_pi * n3 / per2
    sub = np.where(cell_ok, d3 - k3, np.nan)
    delta[ok] = sub
    p1[ok] = np.where(cell_ok, per1, np.nan)
    p2[ok] = np.where(cell_ok, per2, np.nan)
    valid = np.zeros(shape, dtype=bool)
    valid[ok] = cell_ok
    return delta, valid, p1, p2


def _axis(spec):
    lo, hi, n = spec
    n = int(n)
    if n == 1:
        return np.array([float(lo)])
    if not hi > lo or n < 1:
        raise ValueError(f"degenerate axis {spec}")
    return np.linspace(lo, hi, n)


def delta_map(geom, signal_axis, second_axis, kind="pump", lam_p=0.7335, T=25.0,
              orders=DEFAULT_ORDERS, model=CONGRUENT_LN, threads=1) -> DeltaMap:
    """Delta over (signal wavelength x pump wavelength) or (signal x temperature).

    ``signal_axis`` and ``second_axis`` are (lo, hi, n); a 1-point axis is
    (value, value, 1). Unmatchable cells are flagged invalid, not fatal.
    The attached evaluator is vectorized and returns NaN for invalid points.
    ``threads`` > 1 evaluates row blocks concurrently; every cell is computed
    independently, so the result does not depend on the split.
    """
    a1 = _axis(signal_axis)
    a2 = _axis(second_axis)
    if kind == "pump":
        name2 = "pump_um"

        def evaluate(s, p):
            d, ok, _, _ = delta_grid(geom, p, s, T, orders, model)
            return np.where(ok, d, np.nan)
    elif kind == "temperature":
        name2 = "temperature_C"

        def evaluate(s, t):
            d, ok, _, _ = delta_grid(geom, lam_p, s, t, orders, model)
            return np.where(ok, d, np.nan)
    else:
        raise ValueError(f"unknown map kind {kind!r}")
    blocks = np.array_split(np.arange(a2.size), max(1, min(int(threads), a2.size)))

    def rows(idx):
        return np.broadcast_to(evaluate(a1[None, :], a2[idx][:, None]), (idx.size, a1.size))

    if len(blocks) == 1:
        values = rows(blocks[0]).copy()
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            values = np.vstack(list(pool.map(rows, blocks)))
    valid = np.isfinite(values)
    return DeltaMap(a1, a2, values, valid, "signal_um", name2, evaluate)


def matching_locus(dmap: DeltaMap, ftol=1e-8, max_iter=200):
    """Zero crossings of Delta, searched along axis2 in every axis1 column.

    Bracketed sign changes are refined together by vectorized bisection
    with the map's evaluator, or linearly interpolated if it has none.
    Returns a list of (axis1, axis2) points ordered by column.
    """
    v, ok = dmap.values, dmap.valid
    pair_ok = ok[:-1, :] & ok[1:, :]
    fa_all, fb_all = v[:-1, :], v[1:, :]
    with np.errstate(invalid="ignore"):
        exact = ok & (v == 0.0)
        change = pair_ok & (np.sign(fa_all) * np.sign(fb_all) < 0)
    jj, ii = np.nonzero(change)
    x = dmap.axis1[ii]
    ya, yb = dmap.axis2[jj].astype(float), dmap.axis2[jj + 1].astype(float)
    fa, fb = fa_all[jj, ii], fb_all[jj, ii]
    if dmap.evaluate is None or x.size == 0:
        y = ya - fa * (yb - ya) / (fb - fa) if x.size else ya
        keep = np.ones(x.size, dtype=bool)
    else:
        y = 0.5 * (ya + yb)
        keep = np.ones(x.size, dtype=bool)
        active = np.arange(x.size)
        for _ in range(max_iter):
            mid = 0.5 * (ya[active] + yb[active])
            fm = np.asarray(dmap.evaluate(x[active], mid), dtype=float)
            y[active] = mid
            bad = ~np.isfinite(fm)
            keep[active[bad]] = False
            same = np.sign(fm) == np.sign(fa[active])
            ya[active] = np.where(same, mid, ya[active])
            fa[active] = np.where(same, fm, fa[active])
            yb[active] = np.where(same, yb[active], mid)
            done = bad | (np.abs(fm) < ftol) | (yb[active] - ya[active] <= 4 * np.finfo(float).eps * np.abs(mid))
            active = active[~done]
            if active.size == 0:
                break
    pts = [(float(a), float(b), int(i)) for a, b, i, k in zip(x, y, ii, keep) if k]
    ej, ei = np.nonzero(exact)
    pts += [(float(dmap.axis1[i]), float(dmap.axis2[j]), int(i)) for j, i in zip(ej, ei)]
    if not pts:
        raise EmptyLocus("Delta does not change sign anywhere on the grid")
    pts.sort(key=lambda t: (t[2], t[1]))
    return [(a, b) for a, b, _ in pts]
