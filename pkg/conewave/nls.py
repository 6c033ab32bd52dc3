"""
Cubic NLS on the n = 3 cone: i u_t + L_V u + gamma |u|^2 u = 0.

Solved by Strang splitting: half a nonlinear phase rotation on the
physical tensor grid, one exact linear step e^{i dt L_V} in the Hankel
representation, another nonlinear half step. gamma = +1 is the
defocusing case (positive quartic energy); in the convention
i u_t = -Delta u + g |u|^2 u this is g = -gamma with time reversed.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from conewave.calculus import ConeField, from_grid, propagate, sobolev_norm, to_grid
from conewave.errors import BlowupSuspected, DomainError, StepTooLarge, UnsupportedEvaluation

logger = logging.getLogger(__name__)

PHASE_RESOLUTION = math.pi / 4.0
BLOWUP_FACTOR = 10.0
Q0R0_OFFSET = 1.0e-3


@dataclass(frozen=True)
class ConservedPair:
    mass: float
    energy: float


@dataclass(frozen=True)
class NlsState:
    field: ConeField
    t: float
    gamma: float
    dt: float
    conserved: ConservedPair
    h1_norm: float
    sup_norm: float


def admissible_pair_q0r0(nu0: float) -> Tuple[float, float]:
    """Exponents for the local theory: (5, 30/11) if nu0 > 2/5, else ((2/nu0)+, (6/(3-2 nu0))-)."""
    if not nu0 > 0.0:
        raise DomainError(f"nu0 must be positive, got {nu0}")
    if nu0 > 0.4:
        return 5.0, 30.0 / 11.0
    return 2.0 / nu0 + Q0R0_OFFSET, 6.0 / (3.0 - 2.0 * nu0) - Q0R0_OFFSET


def _check_geometry(field: ConeField) -> None:
    geometry = field.geometry
    if geometry.n != 3:
        raise DomainError(f"the cubic solver runs on n = 3 cones, got n = {geometry.n}")
    if not geometry.supports_evaluation:
        raise UnsupportedEvaluation("|u|^4 needs pointwise eigenfunctions")


def field_mass(field: ConeField) -> float:
    return field.norm() ** 2


def field_energy(field: ConeField, gamma: float) -> float:
    """1/2 ||L^{1/2} u||^2 + gamma/4 int |u|^4."""
    kinetic = 0.5 * sobolev_norm(field, 1.0, homogeneous=True) ** 2
    quartic = float(np.sum(field.geometry.grid_weights * np.abs(to_grid(field)) ** 4))
    return kinetic + 0.25 * gamma * quartic


def mass(state: NlsState) -> float:
    return state.conserved.mass


def energy(state: NlsState) -> float:
    return state.conserved.energy


def _snapshot(field: ConeField, t: float, gamma: float, dt: float) -> NlsState:
    grid = to_grid(field)
    quartic = float(np.sum(field.geometry.grid_weights * np.abs(grid) ** 4))
    kinetic = 0.5 * sobolev_norm(field, 1.0, homogeneous=True) ** 2
    return NlsState(
        field=field,
        t=t,
        gamma=gamma,
        dt=dt,
        conserved=ConservedPair(mass=field_mass(field), energy=kinetic + 0.25 * gamma * quartic),
        h1_norm=sobolev_norm(field, 1.0),
        sup_norm=float(np.max(np.abs(grid))) if grid.size else 0.0,
    )


def nonlinear_rotation(field: ConeField, strength: float) -> ConeField:
    """u -> u exp(i strength |u|^2) pointwise on the tensor grid, then re-projected."""
    if strength == 0.0:
        return field
    grid = to_grid(field)
    rotated = grid * np.exp(1j * strength * np.abs(grid) ** 2)
    return from_grid(field.geometry, rotated)


def strang_step(field: ConeField, dt: float, gamma: float, coupling: float = 1.0) -> ConeField:
    half = 0.5 * dt * gamma * coupling * field.geometry.time_sign
    field = nonlinear_rotation(field, half)
    field = propagate(field, dt)
    return nonlinear_rotation(field, half)


def _snapshot_steps(times: Sequence[float], total: float, steps: int) -> List[int]:
    out = set()
    for t in times:
        if abs(t) > abs(total) + 1e-12 or (t != 0.0 and math.copysign(1.0, t) != math.copysign(1.0, total)):
            raise DomainError(f"snapshot time {t:g} lies outside [0, {total:g}]")
        out.add(int(round(steps * t / total)) if total != 0.0 else 0)
    return sorted(out)


def nls_evolve(
    initial: ConeField,
    total_time: float,
    dt: float,
    gamma: float = 1.0,
    coupling: float = 1.0,
    snapshots: Optional[Sequence[float]] = None,
) -> List[NlsState]:
    """Strang-split trajectory from t = 0 to `total_time` (negative runs backward).

    `snapshots` are rounded to the nearest step; 0 and `total_time` are
    always included. Raises StepTooLarge when dt rho_max^2 > pi/4 and
    BlowupSuspected once ||u||_{H^1} exceeds ten times its initial value.
    """
    _check_geometry(initial)
    if gamma not in (1.0, -1.0):
        raise DomainError(f"gamma must be +1 or -1, got {gamma}")
    if not dt > 0.0:
        raise DomainError(f"dt must be positive, got {dt}")
    rho_max = initial.geometry.rho_max
    if dt * rho_max * rho_max > PHASE_RESOLUTION:
        raise StepTooLarge(
            f"dt * rho_max^2 = {dt * rho_max * rho_max:.4g} exceeds pi/4; use dt <= {PHASE_RESOLUTION / rho_max ** 2:.3g}"
        )
    h1_initial = sobolev_norm(initial, 1.0)
    if not math.isfinite(h1_initial):
        raise DomainError("initial data must have finite H^1 norm")

    steps = max(1, int(round(abs(total_time) / dt))) if total_time != 0.0 else 0
    step = total_time / steps if steps else 0.0
    times = list(snapshots) if snapshots is not None else list(np.linspace(0.0, total_time, 11))
    wanted = set(_snapshot_steps(list(times) + [0.0, total_time], total_time, steps))

    logger.info("NLS gamma=%+g: %d steps of %.4g to T=%g", gamma, steps, step, total_time)
    field = initial.to_spectral()
    trajectory = [_snapshot(field, 0.0, gamma, dt)]
    for i in range(1, steps + 1):
        field = strang_step(field, step, gamma, coupling)
        h1 = sobolev_norm(field, 1.0)
        if h1 > BLOWUP_FACTOR * h1_initial:
            raise BlowupSuspected(f"H^1 norm grew from {h1_initial:.4g} to {h1:.4g}", t=i * step, h1_norm=h1)
        if i in wanted:
            trajectory.append(_snapshot(field, i * step, gamma, dt))
        if i % max(1, steps // 10) == 0:
            logger.info("NLS step %d/%d", i, steps)
    return trajectory


@dataclass(frozen=True)
class ScatteringSample:
    t: float
    v_h1: float
    increment: float


def scattering_profile(trajectory: Sequence[NlsState]) -> List[ScatteringSample]:
    """v(t) = e^{-itL_V} u(t) with Cauchy increments ||v(t_i) - v(t_{i-1})||_{H^1} (0 at the first sample)."""
    out: List[ScatteringSample] = []
    previous: Optional[ConeField] = None
    for state in trajectory:
        v = propagate(state.field, -state.t)
        increment = 0.0 if previous is None else sobolev_norm(v - previous, 1.0)
        out.append(ScatteringSample(t=state.t, v_h1=sobolev_norm(v, 1.0), increment=increment))
        previous = v
    return out


def scattering_passes(profile: Sequence[ScatteringSample], tolerance: float = 1.0e-4) -> bool:
    return bool(profile) and profile[-1].increment < tolerance


def scale_to_h1(field: ConeField, target: float) -> ConeField:
    current = sobolev_norm(field, 1.0)
    if current == 0.0:
        raise DomainError("cannot rescale the zero field")
    return field * (target / current)
