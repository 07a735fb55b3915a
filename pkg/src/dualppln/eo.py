"""
Electro-optic o <-> e conversion of the signal in the poled guide.

Coupled amplitudes (interaction picture, x in m):

    dA_o/dx = i kappa A_e exp(+i delta x)
    dA_e/dx = i kappa A_o exp(-i delta x)

kappa = pi (n_o n_e)^(3/2) gamma51 E_a |G_eff| F_EO / lam_s, delta the
residual mismatch left after the EO reciprocal vector. The closed form
(two-level Rabi solution) is kept alongside the integrator as a
cross-check and for fast inversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import IntegratorFailure, Unreachable, ZeroPower
from .material import Polarization


@dataclass(frozen=True)
class EOSetting:
    field: float  # applied field E_a, V/m
    kappa: float  # rad/m
    delta: float  # rad/m
    length: float  # m

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0 (phase goes into the amplitudes)")
        if not self.length > 0:
            raise ValueError("length must be positive")


@dataclass(frozen=True)
class FieldAmplitudes:
    A_o: complex
    A_e: complex

    @property
    def power(self) -> float:
        return abs(self.A_o) ** 2 + abs(self.A_e) ** 2


def coupling_coefficient(lam_s, n_o, n_e, gamma51, E_a, G_eff, F_EO=1.0) -> float:
    """kappa in rad/m. lam_s in um, gamma51 in pm/V, E_a in V/m."""
    lam_m = lam_s * 1e-6
    return math.pi * n_o ** 2 * n_e ** 2 * (gamma51 * 1e-12) * E_a * abs(G_eff) * F_EO / (lam_m * math.sqrt(n_o * n_e))


def _rhs(kappa, delta):
    def f(x, y):
        ao = y[0] + 1j * y[1]
        ae = y[2] + 1j * y[3]
        ph = np.exp(1j * delta * x)
        dao = 1j * kappa * ae * ph
        dae = 1j * kappa * ao * np.conj(ph)
        return [dao.real, dao.imag, dae.real, dae.imag]

    return f


def propagate(setting: EOSetting, initial: FieldAmplitudes, rtol=1e-10, atol=1e-12, dense=False):
    """Integrate the coupled equations over [0, L] with an embedded RK4(5) pair.

    Returns the output amplitudes, plus the dense-output solution when
    ``dense`` is set (for power traces).
    """
    if initial.power <= 0:
        raise ZeroPower("initial amplitudes carry no power")
    if setting.kappa == 0.0:
        return (initial, None) if dense else initial
    y0 = [initial.A_o.real, initial.A_o.imag, initial.A_e.real, initial.A_e.imag]
    # cap the step so fast phase rotation of exp(i delta x) is resolved
    scale = max(setting.kappa, abs(setting.delta), 1.0 / setting.length)
    sol = solve_ivp(
        _rhs(setting.kappa, setting.delta), (0.0, setting.length), y0,
        method="RK45", rtol=rtol, atol=atol, dense_output=dense, max_step=0.5 / scale,
    )
    if not sol.success:
        raise IntegratorFailure(sol.message)
    y = sol.y[:, -1]
    out = FieldAmplitudes(complex(y[0], y[1]), complex(y[2], y[3]))
    return (out, sol) if dense else out


def analytic_propagate(setting: EOSetting, initial: FieldAmplitudes) -> FieldAmplitudes:
    """Closed-form solution of the same equations."""
    k, d, L = setting.kappa, setting.delta, setting.length
    half = 0.5 * d
    omega = math.hypot(k, half)
    bo, be = initial.A_o, initial.A_e
    if omega == 0.0:
        return initial
    c, s = math.cos(omega * L), math.sin(omega * L)
    # exp(i H L) with H = [[-d/2, k], [k, d/2]], H^2 = omega^2
    new_bo = c * bo + 1j * s / omega * (-half * bo + k * be)
    new_be = c * be + 1j * s / omega * (k * bo + half * be)
    return FieldAmplitudes(new_bo * np.exp(0.5j * d * L), new_be * np.exp(-0.5j * d * L))


def detuned_efficiency(kappa, delta, length):
    """|A_e(L)|^2 for unit input in o: (kappa/Omega)^2 sin^2(Omega L)."""
    omega = np.hypot(kappa, 0.5 * np.asarray(delta))
    with np.errstate(invalid="ignore", divide="ignore"):
        eta = np.where(omega > 0, (kappa / omega) ** 2 * np.sin(omega * length) ** 2, 0.0)
    return eta


def conversion_efficiency(out: FieldAmplitudes, converted_pol) -> float:
    """Fraction of the power found in ``converted_pol``."""
    total = out.power
    if total <= 0:
        raise ZeroPower("output carries no power")
    pol = Polarization.parse(converted_pol)
    part = abs(out.A_e) ** 2 if pol is Polarization.E else abs(out.A_o) ** 2
    return part / total


def field_for_target(eta_target, length, delta, slope, rtol=1e-10):
    """Smallest E_a (V/m) whose conversion reaches ``eta_target`` on the first lobe.

    ``slope`` is d kappa / d E_a in (rad/m)/(V/m). The first maximum of
    eta(kappa) is located by a dense scan plus bounded refinement; a target
    at or above that maximum (to 1e-12) returns the maximum itself.
    """
    if not (0 < eta_target <= 1):
        raise ValueError("eta_target must lie in (0, 1]")
    if not (slope > 0 and length > 0):
        raise ValueError("slope and length must be positive")
    # first lobe of eta(kappa) lies below kappa L = pi for any detuning
    kap = np.linspace(0.0, math.pi / length, 20001)
    eta = detuned_efficiency(kap, delta, length)
    rising = np.nonzero(np.diff(eta) < 0)[0]
    i_peak = int(rising[0]) if rising.size else eta.size - 1
    lo = kap[max(i_peak - 1, 0)]
    hi = kap[min(i_peak + 1, kap.size - 1)]
    for _ in range(200):  # golden refinement of the peak
        a = hi - 0.6180339887498949 * (hi - lo)
        b = lo + 0.6180339887498949 * (hi - lo)
        if detuned_efficiency(a, delta, length) > detuned_efficiency(b, delta, length):
            hi = b
        else:
            lo = a
        if hi - lo <= 1e-15 * max(hi, 1.0):
            break
    k_peak = 0.5 * (lo + hi)
    eta_peak = float(detuned_efficiency(k_peak, delta, length))
    if eta_peak < eta_target - 1e-12:
        raise Unreachable(f"first-lobe maximum {eta_peak:.6f} is below target {eta_target}")
    if eta_target >= eta_peak:
        return k_peak / slope
    a, b = 0.0, k_peak
    while b - a > rtol * b:
        mid = 0.5 * (a + b)
        if detuned_efficiency(mid, delta, length) >= eta_target:
            b = mid
        else:
            a = mid
    return b / slope


def power_trace(setting: EOSetting, initial: FieldAmplitudes, n_points=201):
    """(x, P_o, P_e) along the device from the dense integrator output."""
    x = np.linspace(0.0, setting.length, n_points)
    _, sol = propagate(setting, initial, dense=True)
    if sol is None:
        return x, np.full(x.size, abs(initial.A_o) ** 2), np.full(x.size, abs(initial.A_e) ** 2)
    y = sol.sol(x)
    return x, y[0] ** 2 + y[1] ** 2, y[2] ** 2 + y[3] ** 2
