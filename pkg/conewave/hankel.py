"""
Discrete modified Hankel transform on Bessel-zero grids.

    H_nu f(rho) = rho^{-(n-2)/2} * int J_nu(r rho) [r^{(n-2)/2} f(r)] r dr

sampled at r_k = j_k R / j_{N+1} and rho_k = j_k / R. In the unitary
coordinates F = sqrt(w_r) f, G = sqrt(w_rho) b the quadrature kernel is a
symmetric, almost orthogonal matrix T. Its orthogonal polar factor
replaces it, so forward and inverse are exact mutual inverses and
Plancherel holds to rounding.
"""

import logging
import math
import os
import threading
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import linalg, special

from conewave.errors import DomainError, LengthMismatch
from conewave.specfun import bessel_j, bessel_j_zeros

logger = logging.getLogger(__name__)

MAX_NODES = 10_000
ORTHOGONAL_DEFECT = 1.0e-13
BAND_LIMIT_FRACTION = 0.05
BAND_LIMIT_MASS = 1.0e-8


@dataclass(frozen=True, eq=False)
class HankelPlan:
    order: float
    dimension: int
    r_max: float
    size: int
    zeros: np.ndarray = field(repr=False)
    radii: np.ndarray = field(repr=False)
    frequencies: np.ndarray = field(repr=False)
    radial_weights: np.ndarray = field(repr=False)
    spectral_weights: np.ndarray = field(repr=False)
    kernel: np.ndarray = field(repr=False)
    kernel_defect: float = 0.0

    @property
    def rho_max(self) -> float:
        return float(self.frequencies[-1])

    @property
    def half_dimension(self) -> float:
        return (self.dimension - 2) / 2.0

    @cached_property
    def _sqrt_wr(self) -> np.ndarray:
        return np.sqrt(self.radial_weights)

    @cached_property
    def _sqrt_ws(self) -> np.ndarray:
        return np.sqrt(self.spectral_weights)

    def _check(self, samples: np.ndarray) -> np.ndarray:
        samples = np.asarray(samples)
        if samples.shape[-1] != self.size:
            raise LengthMismatch(
                f"plan expects {self.size} samples on the last axis, got {samples.shape[-1]}"
            )
        return samples

    def forward(self, samples: np.ndarray) -> np.ndarray:
        """Radial node values -> frequency node values (last axis)."""
        samples = self._check(samples)
        return ((samples * self._sqrt_wr) @ self.kernel) / self._sqrt_ws

    def inverse(self, samples: np.ndarray) -> np.ndarray:
        samples = self._check(samples)
        return ((samples * self._sqrt_ws) @ self.kernel) / self._sqrt_wr

    def synthesis_matrix(self, radii: np.ndarray) -> np.ndarray:
        """Band-limited Fourier-Bessel synthesis at arbitrary radii, shape (len(radii), N)."""
        radii = np.atleast_1d(np.asarray(radii, dtype=float))
        if np.any(radii <= 0.0) or np.any(radii > self.r_max * (1.0 + 1e-12)):
            raise DomainError(f"radii must lie in (0, {self.r_max:g}]")
        arg = np.outer(radii, self.frequencies)
        return self.spectral_weights * arg ** (-self.half_dimension) * bessel_j(self.order, arg)

    @cached_property
    def _node_lu(self):
        return linalg.lu_factor(self.synthesis_matrix(self.radii))

    def interpolate(self, values: np.ndarray, radii: np.ndarray) -> np.ndarray:
        """Off-grid radial values, exact at the nodes. `values` has nodes on the last axis."""
        values = self._check(values)
        lead = values.shape[:-1]
        stacked = values.reshape(-1, self.size).T
        coefficients = linalg.lu_solve(self._node_lu, stacked)
        out = (self.synthesis_matrix(radii) @ coefficients).T
        return out.reshape(lead + (out.shape[-1],))

    def l2_norm(self, samples: np.ndarray, spectral: bool) -> float:
        weights = self.spectral_weights if spectral else self.radial_weights
        return float(np.sqrt(np.sum(weights * np.abs(samples) ** 2)))

    def band_limited(self, spectral_samples: np.ndarray) -> bool:
        """True when the top 5% of frequency nodes carry < 1e-8 of the mass."""
        mass = self.spectral_weights * np.abs(np.atleast_2d(spectral_samples)) ** 2
        total = float(np.sum(mass))
        if total == 0.0:
            return True
        tail = max(1, int(math.ceil(BAND_LIMIT_FRACTION * self.size)))
        return float(np.sum(mass[..., -tail:])) < BAND_LIMIT_MASS * total


def _validate(order: float, dimension: int, r_max: float, size: int) -> None:
    if not order > 0.0:
        raise DomainError(f"plan order must be > 0, got {order}")
    if int(dimension) < 2:
        raise DomainError(f"cone dimension must be >= 2, got {dimension}")
    if not (r_max > 0.0 and math.isfinite(r_max)):
        raise DomainError(f"R_max must be positive, got {r_max}")
    if size < 2 or size > MAX_NODES:
        raise DomainError(f"N={size} outside [2, {MAX_NODES}]")


def plan_dht(order: float, dimension: int, r_max: float, size: int) -> HankelPlan:
    """Build the order-nu plan with N nodes on (0, R_max]."""
    order, dimension, r_max, size = float(order), int(dimension), float(r_max), int(size)
    _validate(order, dimension, r_max, size)

    zeros = bessel_j_zeros(order, size + 1).zeros
    span = zeros[-1]
    j = zeros[:-1]
    v = span / r_max
    radii = j / v
    frequencies = j / r_max
    jp1 = np.abs(special.jv(order + 1.0, j))

    radial_weights = 2.0 * radii ** (dimension - 2) / (v * v * jp1 * jp1)
    spectral_weights = 2.0 * frequencies ** (dimension - 2) / (r_max * r_max * jp1 * jp1)

    raw = 2.0 * special.jv(order, np.outer(j, j) / span) / (span * np.outer(jp1, jp1))
    raw = 0.5 * (raw + raw.T)
    defect = float(np.max(np.abs(raw @ raw - np.eye(size))))
    if defect > ORTHOGONAL_DEFECT:
        eigenvalues, vectors = linalg.eigh(raw)
        kernel = (vectors * np.sign(eigenvalues)) @ vectors.T
    else:
        kernel = raw
    logger.info("plan nu=%.6g n=%d R=%g N=%d: raw kernel defect %.3g", order, dimension, r_max, size, defect)
    return HankelPlan(
        order=order,
        dimension=dimension,
        r_max=r_max,
        size=size,
        zeros=zeros,
        radii=radii,
        frequencies=frequencies,
        radial_weights=radial_weights,
        spectral_weights=spectral_weights,
        kernel=kernel,
        kernel_defect=defect,
    )


def hankel_forward(plan: HankelPlan, samples: np.ndarray) -> np.ndarray:
    return plan.forward(samples)


def hankel_inverse(plan: HankelPlan, samples: np.ndarray) -> np.ndarray:
    return plan.inverse(samples)


class PlanCache:
    """Plans stored as .npz files keyed by (nu, n, R_max, N)."""

    _FIELDS = ("zeros", "radii", "frequencies", "radial_weights", "spectral_weights", "kernel")

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    @classmethod
    def from_env(cls) -> Optional["PlanCache"]:
        location = os.getenv("CONEWAVE_PLAN_CACHE")
        return cls(location) if location else None

    def path_for(self, order: float, dimension: int, r_max: float, size: int) -> Path:
        return self.directory / f"plan_nu{order!r}_n{dimension}_R{r_max!r}_N{size}.npz"

    def get(self, order: float, dimension: int, r_max: float, size: int) -> HankelPlan:
        path = self.path_for(float(order), int(dimension), float(r_max), int(size))
        if path.exists():
            logger.debug("plan cache hit %s", path.name)
            with np.load(path) as data:
                arrays = {name: data[name] for name in self._FIELDS}
                defect = float(data["kernel_defect"])
            return HankelPlan(
                order=float(order),
                dimension=int(dimension),
                r_max=float(r_max),
                size=int(size),
                kernel_defect=defect,
                **arrays,
            )
        logger.debug("plan cache miss %s", path.name)
        plan = plan_dht(order, dimension, r_max, size)
        with self._lock:
            np.savez(path, kernel_defect=plan.kernel_defect, **{name: getattr(plan, name) for name in self._FIELDS})
        return plan
