"""
ConeGeometry: a cross-section model plus the radial discretization.

Each mode group owns a Hankel plan of order nu_g on (0, R_max]. Plans are
built lazily and may be built in parallel. Physical-space work happens
on a shared tensor grid: the radial nodes of the smallest-order plan
times the quadrature nodes on Y.
"""

import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from conewave.cross_section import CrossSectionModel, ModeGroup
from conewave.errors import DomainError, UnsupportedEvaluation
from conewave.hankel import HankelPlan, PlanCache, plan_dht

logger = logging.getLogger(__name__)

Point = Tuple[float, float, float]


@dataclass(frozen=True)
class Resampler:
    """Unitary transfer between one plan's spectrum and the shared radial grid."""

    synthesis: np.ndarray
    analysis: np.ndarray


@dataclass(frozen=True, eq=False)
class ConeGeometry:
    cross_section: CrossSectionModel
    r_max: float
    nodes: int
    conjugate_time: bool = False
    workers: int = 1
    cache: Optional[PlanCache] = field(default=None, repr=False)
    _plans: Dict[int, HankelPlan] = field(default_factory=dict, init=False, repr=False)
    _resamplers: Dict[Tuple[float, int], Resampler] = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self):
        if not (self.r_max > 0.0 and math.isfinite(self.r_max)):
            raise DomainError(f"R_max must be positive, got {self.r_max}")
        if self.nodes < 2:
            raise DomainError(f"need at least 2 radial nodes, got {self.nodes}")

    @property
    def n(self) -> int:
        return self.cross_section.cone_dimension

    @property
    def groups(self) -> Tuple[ModeGroup, ...]:
        return self.cross_section.groups

    @property
    def time_sign(self) -> float:
        return -1.0 if self.conjugate_time else 1.0

    @property
    def supports_evaluation(self) -> bool:
        return self.cross_section.supports_evaluation

    def _build(self, group: int) -> HankelPlan:
        nu = self.groups[group].nu
        if self.cache is not None:
            return self.cache.get(nu, self.n, self.r_max, self.nodes)
        return plan_dht(nu, self.n, self.r_max, self.nodes)

    def plan(self, group: int) -> HankelPlan:
        if group < 0 or group >= len(self.groups):
            raise DomainError(f"group index {group} out of range")
        with self._lock:
            found = self._plans.get(group)
        if found is not None:
            return found
        built = self._build(group)
        with self._lock:
            return self._plans.setdefault(group, built)

    def prepare(self, groups: Optional[Sequence[int]] = None) -> None:
        """Build the plans for `groups` (all by default) on the worker pool."""
        wanted = list(range(len(self.groups))) if groups is None else list(groups)
        if self.workers <= 1 or len(wanted) <= 1:
            for g in wanted:
                self.plan(g)
            return
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            list(pool.map(self.plan, wanted))

    @property
    def shared_plan(self) -> HankelPlan:
        return self.plan(0)

    @property
    def shared_radii(self) -> np.ndarray:
        return self.shared_plan.radii

    @property
    def rho_max(self) -> float:
        self.prepare()
        return max(self.plan(g).rho_max for g in range(len(self.groups)))

    def resampler_for(self, plan: HankelPlan) -> Resampler:
        key = (plan.order, plan.size)
        with self._lock:
            found = self._resamplers.get(key)
        if found is not None:
            return found
        shared = self.shared_plan
        sqrt_wr = np.sqrt(shared.radial_weights)
        sqrt_ws = np.sqrt(plan.spectral_weights)
        if plan.order == shared.order and plan.size == shared.size and plan.r_max == shared.r_max:
            unitary = plan.kernel
        else:
            mixed = sqrt_wr[:, None] * plan.synthesis_matrix(shared.radii) / sqrt_ws[None, :]
            left, _, right = linalg.svd(mixed)
            unitary = left @ right
        resampler = Resampler(
            synthesis=unitary * sqrt_ws[None, :] / sqrt_wr[:, None],
            analysis=unitary.T * sqrt_wr[None, :] / sqrt_ws[:, None],
        )
        with self._lock:
            return self._resamplers.setdefault(key, resampler)

    def resampler(self, group: int) -> Resampler:
        return self.resampler_for(self.plan(group))

    @cached_property
    def grid_weights(self) -> np.ndarray:
        """Tensor quadrature weights on shared radii x Y nodes, shape (N, Q)."""
        quadrature = self.cross_section.quadrature
        return self.shared_plan.radial_weights[:, None] * quadrature.weights[None, :]

    def distance(self, z: Point, w: Point) -> float:
        """Cone distance between (r, theta, phi) points."""
        if not self.supports_evaluation:
            raise UnsupportedEvaluation("distance needs a cross-section with known geometry")
        r1, r2 = float(z[0]), float(w[0])
        if r1 < 0.0 or r2 < 0.0:
            raise DomainError("radii must be non-negative")
        angle = self.cross_section.distance_on_y(z[1], z[2], w[1], w[2])
        if angle >= math.pi:
            return r1 + r2
        return math.sqrt(max(0.0, r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * math.cos(angle)))

    def refined(self, factor: int = 2) -> "ConeGeometry":
        """Same cross-section and R_max with `factor` times the radial nodes."""
        return replace(self, nodes=self.nodes * int(factor))


def build_geometry(
    cross_section: CrossSectionModel,
    r_max: float,
    nodes: int,
    conjugate_time: bool = False,
    workers: int = 1,
    cache: Optional[PlanCache] = None,
) -> ConeGeometry:
    return ConeGeometry(
        cross_section=cross_section,
        r_max=float(r_max),
        nodes=int(nodes),
        conjugate_time=conjugate_time,
        workers=max(1, int(workers)),
        cache=cache if cache is not None else PlanCache.from_env(),
    )
