"""
Real-order Bessel functions J, Y, I, K with domain checks, zeros of J,
and the regime-wise envelope of J used by the smoothing estimates.

Values come from scipy.special (AMOS / Cephes); this module adds the
domain contract, Wronskian-based error estimates and what scipy does
not ship for real order: zeros of J_nu for non-integer nu.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np
from scipy import special

from conewave.errors import DomainError
from conewave.witnesses import (
    BESSEL_ENVELOPE_C,
    BESSEL_ENVELOPE_DECAY,
)

logger = logging.getLogger(__name__)

MAX_ORDER = 200.0
MAX_ARGUMENT = 1.0e6
MAX_ZERO_COUNT = 100_000

ArrayLike = Union[float, np.ndarray]


class BesselRegime(Enum):
    SMALL = "small"
    TRANSITION = "transition"
    OSCILLATORY = "oscillatory"


@dataclass(frozen=True)
class BesselEval:
    order: float
    argument: float
    value: float
    relative_error_estimate: float


@dataclass(frozen=True)
class ZeroTable:
    order: float
    zeros: np.ndarray

    def __len__(self) -> int:
        return int(self.zeros.size)


@dataclass(frozen=True)
class RegimeBound:
    order: float
    argument: float
    regime: BesselRegime
    envelope: float
    value: float

    @property
    def holds(self) -> bool:
        return abs(self.value) <= self.envelope


def _check_order(nu: float) -> float:
    nu = float(nu)
    if not math.isfinite(nu) or nu < 0.0 or nu > MAX_ORDER:
        raise DomainError(f"Bessel order {nu} outside [0, {MAX_ORDER:g}]")
    return nu


def _check_argument(x: ArrayLike, allow_zero: bool) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("Bessel argument must be finite")
    low_ok = arr >= 0.0 if allow_zero else arr > 0.0
    if not np.all(low_ok):
        bound = ">= 0" if allow_zero else "> 0"
        raise DomainError(f"Bessel argument must be {bound}, got min {arr.min():g}")
    if np.any(arr > MAX_ARGUMENT):
        raise DomainError(f"Bessel argument above supported maximum {MAX_ARGUMENT:g}")
    return arr


def _unwrap(values: np.ndarray, like: ArrayLike) -> ArrayLike:
    return float(values) if np.ndim(like) == 0 else values


def bessel_j(nu: float, x: ArrayLike) -> ArrayLike:
    """J_nu(x) for 0 <= nu <= 200 and 0 <= x <= 1e6; vectorized over x."""
    nu = _check_order(nu)
    arr = _check_argument(x, allow_zero=True)
    return _unwrap(special.jv(nu, arr), x)


def bessel_y(nu: float, x: ArrayLike) -> ArrayLike:
    nu = _check_order(nu)
    arr = _check_argument(x, allow_zero=False)
    return _unwrap(special.yv(nu, arr), x)


def bessel_i(nu: float, x: ArrayLike) -> ArrayLike:
    nu = _check_order(nu)
    arr = _check_argument(x, allow_zero=True)
    return _unwrap(special.iv(nu, arr), x)


def bessel_k(nu: float, x: ArrayLike) -> ArrayLike:
    nu = _check_order(nu)
    arr = _check_argument(x, allow_zero=False)
    return _unwrap(special.kv(nu, arr), x)


def wronskian_jy(nu: float, x: ArrayLike) -> ArrayLike:
    """Relative residual of J Y' - J' Y = 2/(pi x)."""
    nu = _check_order(nu)
    arr = _check_argument(x, allow_zero=False)
    w = special.jv(nu, arr) * special.yvp(nu, arr) - special.jvp(nu, arr) * special.yv(nu, arr)
    expected = 2.0 / (math.pi * arr)
    return _unwrap(np.abs(w - expected) / expected, x)


def wronskian_ik(nu: float, x: ArrayLike) -> ArrayLike:
    """Relative residual of I K' - I' K = -1/x."""
    nu = _check_order(nu)
    arr = _check_argument(x, allow_zero=False)
    w = special.iv(nu, arr) * special.kvp(nu, arr) - special.ivp(nu, arr) * special.kv(nu, arr)
    expected = -1.0 / arr
    return _unwrap(np.abs(w - expected) / np.abs(expected), x)


def evaluate_j(nu: float, x: float) -> BesselEval:
    """J_nu(x) with an error estimate from the J/Y Wronskian residual."""
    value = bessel_j(nu, x)
    if x == 0.0:
        estimate = 0.0
    else:
        estimate = max(float(wronskian_jy(nu, x)), np.finfo(float).eps)
    return BesselEval(order=float(nu), argument=float(x), value=float(value), relative_error_estimate=estimate)


def bessel_j_zeros(nu: float, count: int) -> ZeroTable:
    """First `count` positive zeros of J_nu, ascending.

    Sign changes are bracketed on a unit-step scan (zeros of J_nu are more
    than 3 apart for nu >= 0) and refined by vectorized bisection.
    """
    nu = _check_order(nu)
    count = int(count)
    if count < 1 or count > MAX_ZERO_COUNT:
        raise DomainError(f"zero count {count} outside [1, {MAX_ZERO_COUNT}]")

    start = max(nu, 0.5)
    # McMahon: j_{nu,k} ~ (k + nu/2 - 1/4) pi
    stop = (count + nu / 2.0 + 2.0) * math.pi + 4.0
    while True:
        grid = np.arange(start, stop, 1.0)
        values = special.jv(nu, grid)
        brackets = np.nonzero(np.signbit(values[:-1]) != np.signbit(values[1:]))[0]
        if brackets.size >= count:
            break
        stop += (count - brackets.size + 4) * math.pi

    idx = brackets[:count]
    lo = grid[idx]
    hi = grid[idx + 1]
    f_lo = values[idx]
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        f_mid = special.jv(nu, mid)
        same = np.signbit(f_mid) == np.signbit(f_lo)
        lo = np.where(same, mid, lo)
        f_lo = np.where(same, f_mid, f_lo)
        hi = np.where(same, hi, mid)
        if np.all(hi - lo <= 4.0 * np.finfo(float).eps * hi):
            break
    zeros = 0.5 * (lo + hi)
    logger.debug("found %d zeros of J_%g up to %.6g", count, nu, zeros[-1])
    return ZeroTable(order=nu, zeros=zeros)


def bessel_regime(nu: float, x: float) -> BesselRegime:
    if x <= nu / 2.0:
        return BesselRegime.SMALL
    if x <= 2.0 * nu:
        return BesselRegime.TRANSITION
    return BesselRegime.OSCILLATORY


def bessel_envelope(nu: float, x: float) -> float:
    c, decay = BESSEL_ENVELOPE_C, BESSEL_ENVELOPE_DECAY
    regime = bessel_regime(nu, x)
    if regime is BesselRegime.SMALL:
        return c * math.exp(-decay * (nu + x))
    if regime is BesselRegime.TRANSITION:
        scale = nu ** (-1.0 / 3.0)
        return c * scale * (scale * abs(x - nu) + 1.0) ** -0.25
    return c * x ** -0.5


def bessel_regime_bounds(nu: float, x: float) -> RegimeBound:
    """Regime of (nu, x) and the envelope of |J_nu(x)| in that regime."""
    nu = _check_order(nu)
    if nu < 2.0:
        raise DomainError(f"regime bounds need nu >= 2, got {nu}")
    x = float(_check_argument(x, allow_zero=False))
    return RegimeBound(
        order=nu,
        argument=x,
        regime=bessel_regime(nu, x),
        envelope=bessel_envelope(nu, x),
        value=float(special.jv(nu, x)),
    )


def bessel_square_mass(nu: float, radius: float, nodes_per_panel: int = 12) -> float:
    """Integral of J_nu(r)^2 over [R, 2R] by unit-width Gauss-Legendre panels."""
    nu = _check_order(nu)
    radius = float(_check_argument(radius, allow_zero=False))
    if 2.0 * radius > MAX_ARGUMENT:
        raise DomainError(f"radius {radius:g} too large")
    panels = max(1, int(math.ceil(radius)))
    x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    edges = np.linspace(radius, 2.0 * radius, panels + 1)
    half = 0.5 * np.diff(edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    points = centers[:, None] + half[:, None] * x[None, :]
    values = special.jv(nu, points) ** 2
    return float(np.sum(half[:, None] * w[None, :] * values))
