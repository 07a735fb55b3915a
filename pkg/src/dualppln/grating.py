"""
Dual-periodic poling: the domain sign is the product of two cosine-centred
square waves f1(x) f2(x) with periods period1 < period2.

A square wave of period P and duty D (fraction of each period with + sign,
centred on x = 0) has Fourier coefficients 2 sin(m pi D) / (m pi) at
k_m = 2 pi m / P and 2D - 1 at m = 0, so the product carries

    G_{m,n} = G_m(D1) G_n(D2)  at  K_{m,n} = 2 pi m / P1 + 2 pi n / P2.

When P2/P1 is rational, distinct (m, n) land on the same K and their
coefficients add; ``coincident_orders`` enumerates them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ZeroOrderUnsupported

K_MATCH_TOL = 1e-9  # rad/um


@dataclass(frozen=True)
class PolingDesign:
    period1: float  # um
    period2: float  # um; math.inf gives a single grating
    duty1: float = 0.5
    duty2: float = 0.5
    length_cm: float = 5.0

    def __post_init__(self):
        if not (0 < self.period1 < self.period2):
            raise ValueError("need 0 < period1 < period2")
        if not (0 < self.duty1 < 1 and 0 < self.duty2 < 1):
            raise ValueError("duty cycles must lie in (0, 1)")
        if not self.length_cm > 0:
            raise ValueError("device length must be positive")

    @property
    def length_um(self) -> float:
        return self.length_cm * 1e4


@dataclass(frozen=True)
class FourierOrder:
    m: int
    n: int
    G: float
    K: float


@dataclass(frozen=True)
class DomainPattern:
    start_sign: int
    walls: np.ndarray = field(repr=False)
    length: float  # um

    def __post_init__(self):
        walls = np.array(self.walls, dtype=float)
        walls.setflags(write=False)
        object.__setattr__(self, "walls", walls)
        if walls.size and (np.any(np.diff(walls) <= 0) or walls[0] < 0 or walls[-1] > self.length):
            raise ValueError("domain walls must be strictly increasing inside [0, L]")

    def segments(self):
        """(starts, ends, signs) of the constant-sign segments."""
        edges = np.concatenate(([0.0], self.walls, [self.length]))
        signs = self.start_sign * (-1.0) ** np.arange(edges.size - 1)
        return edges[:-1], edges[1:], signs


def _sin_half_pi(m: int) -> int:
    return (0, 1, 0, -1)[m % 4]


def _axis_coefficient(m: int, duty: float) -> float:
    if m == 0:
        return 2.0 * duty - 1.0
    if duty == 0.5:
        return 2.0 * _sin_half_pi(m) / (m * math.pi)
    return 2.0 * math.sin(m * math.pi * duty) / (m * math.pi)


def fourier_coefficient(m: int, n: int, duty1: float = 0.5, duty2: float = 0.5) -> float:
    """G_{m,n}; at 50 % duty this is 4 sin(m pi/2) sin(n pi/2) / (m n pi^2).

    Other duties use the factorized per-axis coefficient 2 sin(m pi D)/(m pi).
    Zero orders at 50 % duty are rejected (the DC term of that wave is 0).
    """
    if (m == 0 and duty1 == 0.5) or (n == 0 and duty2 == 0.5):
        raise ZeroOrderUnsupported(f"order ({m}, {n}) has a zero index at 50% duty")
    return _axis_coefficient(m, duty1) * _axis_coefficient(n, duty2)


def reciprocal_vector(m: int, n: int, period1: float, period2: float) -> float:
    """K_{m,n} in rad/um."""
    k = 2.0 * math.pi * m / period1
    if n != 0:
        k += 2.0 * math.pi * n / period2
    return k


def _factor_walls(period: float, duty: float, length: float):
    if math.isinf(period):
        return np.empty(0)
    half = 0.5 * duty * period
    k = np.arange(0, math.floor((length + half) / period) + 2)
    walls = np.concatenate((k * period - half, k * period + half))
    walls = walls[(walls > 0.0) & (walls < length)]
    return np.sort(walls)


def synthesize_pattern(design: PolingDesign) -> DomainPattern:
    """Domain walls of sign[cos(2 pi x/P1)] sign[cos(2 pi x/P2)] on [0, L].

    Walls of the two factors are merged; coincident walls cancel.
    """
    length = design.length_um
    tol = 1e-9 * max(length, 1.0)
    merged = np.sort(np.concatenate((
        _factor_walls(design.period1, design.duty1, length),
        _factor_walls(design.period2, design.duty2, length),
    )))
    kept = []
    i = 0
    while i < merged.size:
        if i + 1 < merged.size and merged[i + 1] - merged[i] <= tol:
            i += 2
            continue
        kept.append(merged[i])
        i += 1
    return DomainPattern(start_sign=1, walls=np.array(kept), length=length)


def spectrum_amplitude(pattern: DomainPattern, K):
    """(1/L) * integral_0^L f(x) exp(-i K x) dx, exact per segment."""
    starts, ends, signs = pattern.segments()
    K_arr = np.atleast_1d(np.asarray(K, dtype=float))
    out = np.empty(K_arr.shape, dtype=complex)
    for idx, k in enumerate(K_arr):
        if k == 0.0:
            out[idx] = np.sum(signs * (ends - starts))
        else:
            out[idx] = np.sum(signs * (np.exp(-1j * k * starts) - np.exp(-1j * k * ends))) / (1j * k)
    out /= pattern.length
    return complex(out[0]) if np.ndim(K) == 0 else out


def coincident_orders(K_target: float, design: PolingDesign, cutoff: int) -> list[FourierOrder]:
    """All (m, n) with |m|, |n| <= cutoff whose K_{m,n} equals K_target."""
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    m = np.arange(-cutoff, cutoff + 1)
    if math.isinf(design.period2):
        n = np.zeros_like(m)
    else:
        n = np.rint((K_target - 2.0 * math.pi * m / design.period1) * design.period2 / (2.0 * math.pi)).astype(int)
    keep = np.abs(n) <= cutoff
    m, n = m[keep], n[keep]
    K = 2.0 * math.pi * m / design.period1
    if not math.isinf(design.period2):
        K = K + 2.0 * math.pi * n / design.period2
    hit = np.abs(K - K_target) <= K_MATCH_TOL
    found = [
        FourierOrder(int(a), int(b), _axis_coefficient(int(a), design.duty1) * _axis_coefficient(int(b), design.duty2),
                     reciprocal_vector(int(a), int(b), design.period1, design.period2))
        for a, b in zip(m[hit], n[hit])
    ]
    found.sort(key=lambda o: (-abs(o.G), o.m, o.n))
    return found


def effective_coefficient(m: int, n: int, design: PolingDesign, cutoff: int | None = None) -> float:
    """G seen by a process phase matched on K_{m,n}.

    ``cutoff=None`` keeps the single order; an integer sums every
    coincident order inside that search box.
    """
    if cutoff is None:
        return fourier_coefficient(m, n, design.duty1, design.duty2)
    K = reciprocal_vector(m, n, design.period1, design.period2)
    terms = sorted((o.G for o in coincident_orders(K, design, max(cutoff, abs(m), abs(n)))), key=abs)
    return math.fsum(terms)


def converged_coefficient(m: int, n: int, design: PolingDesign, tol=1e-4, start=16, max_cutoff=1 << 22):
    """Coincident-order sum with the cutoff doubled until it changes by < ``tol``.

    Returns (value, cutoff). The series tail falls off like 1/cutoff, so the
    last change bounds the remaining tail.
    """
    cutoff = max(start, abs(m), abs(n))
    prev = effective_coefficient(m, n, design, cutoff)
    while cutoff < max_cutoff:
        cutoff *= 2
        cur = effective_coefficient(m, n, design, cutoff)
        if abs(cur - prev) < tol:
            return cur, cutoff
        prev = cur
    raise ValueError(f"coincident-order series did not settle below {tol} by cutoff {cutoff}")


def write_pattern(pattern: DomainPattern, path) -> Path:
    """Plain-text segment list: ``start_um end_um sign`` per line."""
    path = Path(path)
    starts, ends, signs = pattern.segments()
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for a, b, s in zip(starts, ends, signs):
            fh.write(f"{a:.8e} {b:.8e} {int(s):+d}\n")
    return path


def read_pattern(path) -> DomainPattern:
    rows = [line.split() for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    starts = [float(r[0]) for r in rows]
    length = float(rows[-1][1])
    return DomainPattern(start_sign=int(rows[0][2]), walls=np.array(starts[1:]), length=length)
