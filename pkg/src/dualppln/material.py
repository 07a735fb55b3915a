"""
Bulk dispersion of congruent lithium niobate and the material constants
used throughout the toolkit.

Both polarizations share one temperature-dependent Sellmeier form

    n^2 = a1 + b1 f + (a2 + b2 f) / (lam^2 - (a3 + b3 f)^2)
             + (a4 + b4 f) / (lam^2 - a5^2) - a6 lam^2,

    f = (T - t_ref) (T + t_shift),

with lam in micrometres and T in degrees Celsius. The shipped model takes
the ordinary index from Edwards & Lawrence, Opt. Quantum Electron. 16,
373 (1984) and the extraordinary index from Jundt, Opt. Lett. 22, 1553
(1997). Edwards & Lawrence has no second pole, so a4 = b4 = 0 there.

Units: wavelengths in um, propagation constants in rad/um, device lengths
in m (cm in configs), fields in V/m, electro-optic and nonlinear
coefficients in pm/V.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants as _const

from .errors import OutOfValidityRange


class Polarization(str, enum.Enum):
    O = "o"
    E = "e"

    @classmethod
    def parse(cls, value) -> "Polarization":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True)
class SellmeierTerms:
    a1: float
    a2: float = 0.0
    a3: float = 0.0
    a4: float = 0.0
    a5: float = 0.0
    a6: float = 0.0
    b1: float = 0.0
    b2: float = 0.0
    b3: float = 0.0
    b4: float = 0.0
    t_ref: float = 24.5
    t_shift: float = 570.82

    def _f(self, T):
        return (T - self.t_ref) * (T + self.t_shift)

    def n_squared(self, lam, T):
        f = self._f(T)
        l2 = lam * lam
        pole1 = (self.a3 + self.b3 * f) ** 2
        out = self.a1 + self.b1 * f + (self.a2 + self.b2 * f) / (l2 - pole1) - self.a6 * l2
        if self.a4 != 0.0 or self.b4 != 0.0:
            out = out + (self.a4 + self.b4 * f) / (l2 - self.a5 ** 2)
        return out

    def d_n_squared_dlam(self, lam, T):
        f = self._f(T)
        l2 = lam * lam
        pole1 = (self.a3 + self.b3 * f) ** 2
        out = -2.0 * lam * (self.a2 + self.b2 * f) / (l2 - pole1) ** 2 - 2.0 * self.a6 * lam
        if self.a4 != 0.0 or self.b4 != 0.0:
            out = out - 2.0 * lam * (self.a4 + self.b4 * f) / (l2 - self.a5 ** 2) ** 2
        return out


@dataclass(frozen=True)
class SellmeierModel:
    """Per-polarization Sellmeier terms plus the window they are trusted in."""

    name: str
    ordinary: SellmeierTerms
    extraordinary: SellmeierTerms
    wavelength_range: tuple = (0.4, 3.0)
    temperature_range: tuple = (20.0, 250.0)
    citation: str = ""

    def terms(self, pol) -> SellmeierTerms:
        pol = Polarization.parse(pol)
        return self.ordinary if pol is Polarization.O else self.extraordinary

    def check(self, lam, T, margin=0.0):
        lo, hi = self.wavelength_range
        lam_a = np.asarray(lam, dtype=float)
        if np.any(lam_a - margin < lo) or np.any(lam_a + margin > hi) or not np.all(np.isfinite(lam_a)):
            raise OutOfValidityRange(
                f"wavelength {lam} um outside [{lo}, {hi}] um (stencil margin {margin:g})"
            )
        tlo, thi = self.temperature_range
        T_a = np.asarray(T, dtype=float)
        if np.any(T_a < tlo) or np.any(T_a > thi) or not np.all(np.isfinite(T_a)):
            raise OutOfValidityRange(f"temperature {T} C outside [{tlo}, {thi}] C")

    def with_overrides(self, pol, **coefficients) -> "SellmeierModel":
        pol = Polarization.parse(pol)
        attr = "ordinary" if pol is Polarization.O else "extraordinary"
        new_terms = dataclasses.replace(getattr(self, attr), **coefficients)
        return dataclasses.replace(self, **{attr: new_terms})


CONGRUENT_LN = SellmeierModel(
    name="congruent_ln",
    ordinary=SellmeierTerms(
        a1=4.9048, a2=0.11775, a3=0.21802, a6=0.027153,
        b1=2.1429e-8, b2=2.2314e-8, b3=-2.9671e-8,
        t_ref=24.5, t_shift=570.5,
    ),
    extraordinary=SellmeierTerms(
        a1=5.35583, a2=0.100473, a3=0.20692, a4=100.0, a5=11.34927, a6=1.5334e-2,
        b1=4.629e-7, b2=3.862e-8, b3=-0.89e-8, b4=2.657e-5,
        t_ref=24.5, t_shift=570.82,
    ),
    wavelength_range=(0.4, 3.0),
    temperature_range=(20.0, 250.0),
    citation=(
        "n_o: G. J. Edwards and M. Lawrence, Opt. Quantum Electron. 16, 373 (1984); "
        "n_e: D. H. Jundt, Opt. Lett. 22, 1553 (1997)"
    ),
)

MODELS = {CONGRUENT_LN.name: CONGRUENT_LN}


def constant_index_model(n_o: float, n_e: float | None = None) -> SellmeierModel:
    """Dispersionless model, handy for tests and limiting cases."""
    n_e = n_o if n_e is None else n_e
    return SellmeierModel(
        name=f"constant_{n_o:g}_{n_e:g}",
        ordinary=SellmeierTerms(a1=n_o ** 2),
        extraordinary=SellmeierTerms(a1=n_e ** 2),
        wavelength_range=(0.2, 10.0),
        temperature_range=(-273.0, 1000.0),
        citation="constant index",
    )


@dataclass(frozen=True)
class MaterialConstants:
    """Tensor coefficients (pm/V) and SI physical constants."""

    d31: float = 4.6
    gamma51: float = 32.6
    c: float = _const.c
    epsilon0: float = _const.epsilon_0
    hbar: float = _const.hbar
    units: str = field(default="SI; wavelength um, beta rad/um")

    def __post_init__(self):
        for name in ("d31", "gamma51", "c", "epsilon0", "hbar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"material constant {name} must be positive")


DEFAULT_CONSTANTS = MaterialConstants()


def bulk_index(pol, lam, T, model: SellmeierModel = CONGRUENT_LN):
    """Bulk refractive index n_pol(lam [um], T [C]). Accepts arrays."""
    model.check(lam, T)
    n2 = model.terms(pol).n_squared(np.asarray(lam, dtype=float), np.asarray(T, dtype=float))
    n = np.sqrt(n2)
    return float(n) if np.ndim(n) == 0 else n


def index_derivative(pol, lam, T, model: SellmeierModel = CONGRUENT_LN, method="analytic", step=1e-3):
    """dn/dlam in 1/um.

    ``method="analytic"`` differentiates the Sellmeier form directly.
    ``method="fd"`` uses a 4th-order central difference with spacing
    ``step`` (um); the four-point stencil must stay inside the window.
    """
    terms = model.terms(pol)
    if method == "analytic":
        model.check(lam, T)
        lam_a = np.asarray(lam, dtype=float)
        n = np.sqrt(terms.n_squared(lam_a, T))
        d = terms.d_n_squared_dlam(lam_a, T) / (2.0 * n)
    elif method == "fd":
        model.check(lam, T, margin=2 * step)
        lam_a = np.asarray(lam, dtype=float)

        def n(x):
            return np.sqrt(terms.n_squared(x, T))

        d = (-n(lam_a + 2 * step) + 8 * n(lam_a + step) - 8 * n(lam_a - step) + n(lam_a - 2 * step)) / (12 * step)
    else:
        raise ValueError(f"unknown derivative method {method!r}")
    return float(d) if np.ndim(d) == 0 else d


def group_index(pol, lam, T, model: SellmeierModel = CONGRUENT_LN):
    """Bulk group index n - lam dn/dlam."""
    return bulk_index(pol, lam, T, model) - lam * index_derivative(pol, lam, T, model)


def model_from_config(section: dict) -> SellmeierModel:
    """Build the Sellmeier model described by a config ``material`` section."""
    model = MODELS[section.get("sellmeier", CONGRUENT_LN.name)]
    for pol_key, pol in (("ordinary", Polarization.O), ("extraordinary", Polarization.E)):
        overrides = section.get("overrides", {}).get(pol_key)
        if overrides:
            model = model.with_overrides(pol, **overrides)
    if "wavelength_range" in section:
        model = dataclasses.replace(model, wavelength_range=tuple(section["wavelength_range"]))
    if "temperature_range" in section:
        model = dataclasses.replace(model, temperature_range=tuple(section["temperature_range"]))
    return model


def constants_from_config(section: dict) -> MaterialConstants:
    return MaterialConstants(
        d31=float(section.get("d31", DEFAULT_CONSTANTS.d31)),
        gamma51=float(section.get("gamma51", DEFAULT_CONSTANTS.gamma51)),
    )


def wavelength_to_omega(lam_um, c=_const.c):
    """Angular frequency (rad/s) of a vacuum wavelength in um."""
    return 2.0 * math.pi * c / (np.asarray(lam_um, dtype=float) * 1e-6)
