"""
Functional calculus of L_V on the cone.

A ConeField stores one complex coefficient row per angular mode, grouped
by mode order: radial values a_j(r_k) on the group's radial nodes, or
Hankel coefficients b_j(rho_k) on its frequency nodes. Multipliers
F(L_V) act diagonally on the spectral rows. Point values, physical-grid
products and the closed-form kernels live here too.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Sequence, Tuple, Union

import numpy as np
from scipy import special

from conewave.cross_section import CrossSectionKind, cos_theta_matrix, sphere_multiplicity
from conewave.errors import DomainError, TailNotConverged, UnsupportedEvaluation
from conewave.geometry import ConeGeometry, Point

logger = logging.getLogger(__name__)

TAIL_TOLERANCE = 1.0e-6
TAIL_TERMS = 400


class Representation(Enum):
    RADIAL = "radial"
    SPECTRAL = "spectral"


@dataclass(frozen=True, eq=False)
class ConeField:
    geometry: ConeGeometry
    representation: Representation
    coefficients: Tuple[np.ndarray, ...]

    def __post_init__(self):
        groups = self.geometry.groups
        if len(self.coefficients) != len(groups):
            raise DomainError(f"expected {len(groups)} coefficient blocks, got {len(self.coefficients)}")
        for group, block in zip(groups, self.coefficients):
            if block.shape != (group.degeneracy, self.geometry.nodes):
                raise DomainError(
                    f"block for nu={group.nu:.6g} has shape {block.shape}, "
                    f"expected {(group.degeneracy, self.geometry.nodes)}"
                )

    def _converted(self, target: Representation) -> "ConeField":
        if self.representation is target:
            return self
        blocks = []
        for g, block in enumerate(self.coefficients):
            if not np.any(block):
                blocks.append(block)
                continue
            plan = self.geometry.plan(g)
            blocks.append(plan.forward(block) if target is Representation.SPECTRAL else plan.inverse(block))
        return ConeField(self.geometry, target, tuple(blocks))

    def to_spectral(self) -> "ConeField":
        return self._converted(Representation.SPECTRAL)

    def to_radial(self) -> "ConeField":
        return self._converted(Representation.RADIAL)

    def active_groups(self) -> List[int]:
        return [g for g, block in enumerate(self.coefficients) if np.any(block)]

    def _weights(self, group: int) -> np.ndarray:
        plan = self.geometry.plan(group)
        if self.representation is Representation.SPECTRAL:
            return plan.spectral_weights
        return plan.radial_weights

    def norm(self) -> float:
        """L^2(X) norm as the sum of per-mode weighted norms."""
        total = sum(
            float(np.sum(self._weights(g) * np.abs(self.coefficients[g]) ** 2))
            for g in self.active_groups()
        )
        return math.sqrt(total)

    def mode_row(self, mode: int) -> np.ndarray:
        g = self.geometry.cross_section.group_of_mode(mode)
        row = self.geometry.groups[g].indices.index(mode)
        return self.coefficients[g][row]

    def _binary(self, other: "ConeField", sign: float) -> "ConeField":
        if other.geometry is not self.geometry:
            raise DomainError("fields live on different geometries")
        left, right = self.to_spectral(), other.to_spectral()
        blocks = tuple(a + sign * b for a, b in zip(left.coefficients, right.coefficients))
        return ConeField(self.geometry, Representation.SPECTRAL, blocks)

    def __add__(self, other: "ConeField") -> "ConeField":
        return self._binary(other, 1.0)

    def __sub__(self, other: "ConeField") -> "ConeField":
        return self._binary(other, -1.0)

    def __mul__(self, scalar: complex) -> "ConeField":
        return ConeField(self.geometry, self.representation, tuple(scalar * b for b in self.coefficients))

    __rmul__ = __mul__

    def __neg__(self) -> "ConeField":
        return self * -1.0


def zero_field(geometry: ConeGeometry, representation: Representation = Representation.SPECTRAL) -> ConeField:
    blocks = tuple(np.zeros((g.degeneracy, geometry.nodes), dtype=complex) for g in geometry.groups)
    return ConeField(geometry, representation, blocks)


Profile = Callable[[np.ndarray], np.ndarray]


def field_from_profiles(geometry: ConeGeometry, profiles: Dict[int, Profile], spectral: bool = False) -> ConeField:
    """Field with a_j(r) (or b_j(rho) when `spectral`) given per mode index j."""
    blocks = [np.zeros((g.degeneracy, geometry.nodes), dtype=complex) for g in geometry.groups]
    for mode, profile in profiles.items():
        g = geometry.cross_section.group_of_mode(mode)
        plan = geometry.plan(g)
        row = geometry.groups[g].indices.index(mode)
        points = plan.frequencies if spectral else plan.radii
        blocks[g][row] = profile(points)
    representation = Representation.SPECTRAL if spectral else Representation.RADIAL
    return ConeField(geometry, representation, tuple(blocks))


PointFunction = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def tensor_samples(geometry: ConeGeometry, function: PointFunction) -> List[np.ndarray]:
    """u(r_k, y_q) on each group's radial nodes times the Y quadrature, one (N, Q) array per group."""
    quadrature = geometry.cross_section.quadrature
    out = []
    for g in range(len(geometry.groups)):
        radii = geometry.plan(g).radii
        values = function(radii[:, None], quadrature.theta[None, :], quadrature.phi[None, :])
        out.append(np.array(np.broadcast_to(values, (radii.size, quadrature.size)), dtype=complex))
    return out


def project_modes(geometry: ConeGeometry, samples: Union[PointFunction, Sequence[np.ndarray]]) -> ConeField:
    """a_j(r_k) = sum_q w_q u(r_k, y_q) phi_j(y_q) on each group's radial nodes."""
    if not geometry.supports_evaluation:
        raise UnsupportedEvaluation("projection needs pointwise eigenfunctions")
    if callable(samples):
        samples = tensor_samples(geometry, samples)
    quadrature = geometry.cross_section.quadrature
    basis = geometry.cross_section.quadrature_eigenfunctions
    blocks = []
    for g, group in enumerate(geometry.groups):
        values = np.asarray(samples[g])
        if values.shape != (geometry.nodes, quadrature.size):
            raise DomainError(f"samples for group {g} have shape {values.shape}")
        phi = basis[:, list(group.indices)]
        blocks.append(((phi * quadrature.weights[:, None]).T @ values.T).astype(complex))
    return ConeField(geometry, Representation.RADIAL, tuple(blocks))


def reconstruct_field(field: ConeField, points: np.ndarray) -> np.ndarray:
    """u at (r, theta, phi) rows of `points`, radial interpolation exact at nodes."""
    geometry = field.geometry
    if not geometry.supports_evaluation:
        raise UnsupportedEvaluation("reconstruction needs pointwise eigenfunctions")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    radii = points[:, 0]
    if np.any(radii > geometry.r_max * (1.0 + 1e-12)):
        raise DomainError(f"cannot extrapolate beyond R_max={geometry.r_max:g}")
    if np.any(radii <= 0.0):
        raise DomainError("points must have r > 0")
    field = field.to_radial()
    phi = geometry.cross_section.eigenfunctions(points[:, 1], points[:, 2])
    out = np.zeros(points.shape[0], dtype=complex)
    for g in field.active_groups():
        radial = geometry.plan(g).interpolate(field.coefficients[g], radii)
        out += np.sum(radial * phi[:, list(geometry.groups[g].indices)].T, axis=0)
    return out


def mode_radial_values(field: ConeField) -> np.ndarray:
    """a_j on the shared radial grid for every mode, shape (modes, N)."""
    geometry = field.geometry
    spectral = field.to_spectral()
    out = np.zeros((geometry.cross_section.n_modes, geometry.nodes), dtype=complex)
    for g in spectral.active_groups():
        resampler = geometry.resampler(g)
        out[list(geometry.groups[g].indices)] = spectral.coefficients[g] @ resampler.synthesis.T
    return out


def to_grid(field: ConeField) -> np.ndarray:
    """u on the shared radial grid times the Y quadrature nodes, shape (N, Q)."""
    geometry = field.geometry
    if not geometry.supports_evaluation:
        raise UnsupportedEvaluation("physical grid needs pointwise eigenfunctions")
    radial = mode_radial_values(field)
    return radial.T @ geometry.cross_section.quadrature_eigenfunctions.T


def from_grid(geometry: ConeGeometry, values: np.ndarray) -> ConeField:
    """Inverse of to_grid for band-limited data; returns a spectral field."""
    basis = geometry.cross_section.quadrature_eigenfunctions
    weights = geometry.cross_section.quadrature.weights
    radial = (basis * weights[:, None]).T @ values.T
    blocks = []
    for g, group in enumerate(geometry.groups):
        rows = radial[list(group.indices)]
        if not np.any(rows):
            blocks.append(np.zeros((group.degeneracy, geometry.nodes), dtype=complex))
            continue
        blocks.append(rows @ geometry.resampler(g).analysis.T)
    return ConeField(geometry, Representation.SPECTRAL, tuple(blocks))


def mode_envelope(field: ConeField) -> np.ndarray:
    """(sum_j |a_j(r)|^2)^{1/2} on the shared radial grid; needs no eigenfunctions."""
    return np.sqrt(np.sum(np.abs(mode_radial_values(field)) ** 2, axis=0))


def grid_lp_norm(geometry: ConeGeometry, values: np.ndarray, p: float) -> float:
    if math.isinf(p):
        return float(np.max(np.abs(values)))
    return float(np.sum(geometry.grid_weights * np.abs(values) ** p) ** (1.0 / p))


Symbol = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SpectralMultiplier:
    """F(L_V), given as the function rho -> F(rho^2)."""

    symbol: Symbol
    description: str

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return self.symbol(rho)

    def __mul__(self, other: "SpectralMultiplier") -> "SpectralMultiplier":
        return SpectralMultiplier(
            symbol=lambda rho, f=self.symbol, g=other.symbol: f(rho) * g(rho),
            description=f"({self.description})*({other.description})",
        )

    @classmethod
    def identity(cls) -> "SpectralMultiplier":
        return cls(lambda rho: np.ones_like(rho), "1")

    @classmethod
    def schrodinger(cls, t: float, sign: float = 1.0) -> "SpectralMultiplier":
        return cls(lambda rho: np.exp(1j * sign * t * rho * rho), f"exp({'' if sign > 0 else '-'}i*{t:g}*rho^2)")

    @classmethod
    def power(cls, s: float) -> "SpectralMultiplier":
        return cls(lambda rho: rho ** s, f"rho^{s:g}")

    @classmethod
    def heat(cls, t: float) -> "SpectralMultiplier":
        return cls(lambda rho: np.exp(-t * rho * rho), f"exp(-{t:g}*rho^2)")

    @classmethod
    def bessel_potential(cls, s: float) -> "SpectralMultiplier":
        return cls(lambda rho: (1.0 + rho * rho) ** (s / 2.0), f"(1+rho^2)^({s:g}/2)")

    @classmethod
    def resolvent(cls, sigma: complex) -> "SpectralMultiplier":
        return cls(lambda rho: 1.0 / (rho * rho - sigma), f"1/(rho^2-({sigma:g}))")


def apply_spectral_multiplier(field: ConeField, multiplier: SpectralMultiplier) -> ConeField:
    spectral = field.to_spectral()
    blocks = []
    for g, block in enumerate(spectral.coefficients):
        if not np.any(block):
            blocks.append(block)
            continue
        values = multiplier(spectral.geometry.plan(g).frequencies)
        if not np.all(np.isfinite(values)):
            raise DomainError(f"multiplier {multiplier.description} is unbounded on the frequency grid")
        blocks.append(block * values)
    return ConeField(field.geometry, Representation.SPECTRAL, tuple(blocks))


def propagate(field: ConeField, t: float) -> ConeField:
    """e^{itL_V} field, multiplier exp(i t rho^2) (sign flipped under conjugate_time)."""
    if t == 0.0:
        return field
    return apply_spectral_multiplier(field, SpectralMultiplier.schrodinger(t, field.geometry.time_sign))


def sobolev_norm(field: ConeField, s: float, homogeneous: bool = False) -> float:
    """||rho^s b|| (homogeneous) or ||(1+rho^2)^{s/2} b||."""
    spectral = field.to_spectral()
    total = 0.0
    for g in spectral.active_groups():
        plan = spectral.geometry.plan(g)
        rho = plan.frequencies
        factor = rho ** (2.0 * s) if homogeneous else (1.0 + rho * rho) ** s
        total += float(np.sum(plan.spectral_weights * factor * np.abs(spectral.coefficients[g]) ** 2))
    return math.sqrt(total)


@dataclass(frozen=True)
class KernelValue:
    value: float
    tail_bound: float
    terms: int
    normalization: str = "propagator"
    normalization_offset: float = 1.0


def _pair_eigenfunctions(geometry: ConeGeometry, z: Point, w: Point) -> np.ndarray:
    model = geometry.cross_section
    if not model.supports_evaluation:
        raise UnsupportedEvaluation("kernels need pointwise eigenfunctions")
    values = model.eigenfunctions(np.array([z[1], w[1]]), np.array([z[2], w[2]]))
    return values[0] * values[1]


def _tail_orders(geometry: ConeGeometry) -> Tuple[np.ndarray, np.ndarray]:
    """Orders and block weights sup|sum_m phi(y)phi(y')| <= d(ell)/|Y| beyond L_max."""
    model = geometry.cross_section
    n = model.cone_dimension
    ells = np.arange(model.lmax + 1, model.lmax + 1 + TAIL_TERMS)
    lowered = ells * (ells + n - 2) + model.shift - abs(model.potential_strength)
    nus = np.sqrt(np.maximum(lowered, 1e-12))
    weights = np.array([sphere_multiplicity(n, int(ell)) for ell in ells], dtype=float) / model.volume
    return nus, weights


def _check_tail(name: str, value: float, tail: float) -> None:
    if tail > TAIL_TOLERANCE * abs(value):
        raise TailNotConverged(
            f"{name} tail bound {tail:.3g} exceeds {TAIL_TOLERANCE:g} of partial sum {value:.6g}",
            partial_sum=value,
            tail_bound=tail,
        )


def spectral_measure_kernel(
    geometry: ConeGeometry,
    lam: float,
    z: Point,
    w: Point,
    normalization: str = "propagator",
) -> KernelValue:
    """dE(lam; z, w) = lam (r r')^{-(n-2)/2} sum_j phi_j(y) phi_j(y') J_nu(lam r) J_nu(lam r').

    The "lemma" normalization carries the extra factor pi/2.
    """
    if lam <= 0.0:
        raise DomainError("spectral parameter must be positive")
    if normalization not in ("propagator", "lemma"):
        raise DomainError(f"unknown normalization {normalization!r}")
    r1, r2 = float(z[0]), float(w[0])
    if r1 <= 0.0 or r2 <= 0.0:
        raise DomainError("kernel points need r > 0")
    model = geometry.cross_section
    h = (model.cone_dimension - 2) / 2.0
    products = _pair_eigenfunctions(geometry, z, w)
    nus = model.nus
    series = float(np.sum(products * special.jv(nus, lam * r1) * special.jv(nus, lam * r2)))
    prefactor = lam * (r1 * r2) ** (-h)

    tail_nus, tail_weights = _tail_orders(geometry)
    log_terms = (
        tail_nus * (np.log(lam * r1 / 2.0) + np.log(lam * r2 / 2.0))
        - 2.0 * special.gammaln(tail_nus + 1.0)
        + np.log(tail_weights)
    )
    tail = prefactor * float(np.sum(np.exp(log_terms)))

    scale = math.pi / 2.0 if normalization == "lemma" else 1.0
    value = scale * prefactor * series
    tail *= scale
    _check_tail("spectral measure", value, tail)
    return KernelValue(value, tail, model.n_modes, normalization, math.pi / 2.0)


def heat_diagonal(geometry: ConeGeometry, z: Point, lam_max: float = 8.0, nodes: int = 96) -> float:
    """int_0^inf e^{-lam^2} dE(lam; z, z) d lam by Gauss-Legendre on [0, lam_max].

    On the flat three-dimensional cone this is the heat kernel e^{-L}(z, z) = (4 pi)^{-3/2}.
    """
    x, w = np.polynomial.legendre.leggauss(int(nodes))
    lams = 0.5 * lam_max * (x + 1.0)
    weights = 0.5 * lam_max * w
    values = np.array([spectral_measure_kernel(geometry, float(lam), z, z).value for lam in lams])
    return float(np.sum(weights * np.exp(-lams * lams) * values))


def resolvent_kernel(geometry: ConeGeometry, k: float, z: Point, w: Point) -> KernelValue:
    """Kernel of (L_V + k^2)^{-1}: (r r')^{-(n-2)/2} sum_j phi_j phi_j I_nu(k r_<) K_nu(k r_>)."""
    if k <= 0.0:
        raise DomainError("k must be positive")
    r1, r2 = float(z[0]), float(w[0])
    if r1 <= 0.0 or r2 <= 0.0:
        raise DomainError("kernel points need r > 0")
    if r1 == r2 and z[1] == w[1] and z[2] == w[2]:
        raise DomainError("the resolvent kernel is singular on the diagonal")
    model = geometry.cross_section
    h = (model.cone_dimension - 2) / 2.0
    lo, hi = min(r1, r2), max(r1, r2)
    products = _pair_eigenfunctions(geometry, z, w)
    nus = model.nus
    series = float(np.sum(products * special.iv(nus, k * lo) * special.kv(nus, k * hi)))
    value = (r1 * r2) ** (-h) * series

    # I_nu(a) K_nu(b) <= (a/b)^nu / (2 nu) for a <= b
    tail_nus, tail_weights = _tail_orders(geometry)
    tail = (r1 * r2) ** (-h) * float(np.sum(tail_weights * (lo / hi) ** tail_nus / (2.0 * tail_nus)))
    _check_tail("resolvent", value, tail)
    return KernelValue(value, tail, model.n_modes)


def _basis_radial(field: ConeField, target: ConeGeometry) -> np.ndarray:
    """Harmonic-basis radial coefficients of `field` on the shared grid of `target`."""
    source = field.geometry
    spectral = field.to_spectral()
    modes = np.zeros((source.cross_section.n_modes, target.nodes), dtype=complex)
    for g in spectral.active_groups():
        resampler = target.resampler_for(source.plan(g))
        modes[list(source.groups[g].indices)] = spectral.coefficients[g] @ resampler.synthesis.T
    return source.cross_section.coefficients @ modes


def _flat_field(target: ConeGeometry, basis_radial: np.ndarray) -> ConeField:
    model = target.cross_section
    radial = model.coefficients.T @ basis_radial
    blocks = []
    for g, group in enumerate(target.groups):
        rows = radial[list(group.indices)]
        if not np.any(rows):
            blocks.append(np.zeros((group.degeneracy, target.nodes), dtype=complex))
            continue
        blocks.append(rows @ target.resampler(g).analysis.T)
    return ConeField(target, Representation.SPECTRAL, tuple(blocks))


def _check_duhamel(geometry_v: ConeGeometry, geometry_0: ConeGeometry, u0: ConeField, steps: int) -> None:
    model_v, model_0 = geometry_v.cross_section, geometry_0.cross_section
    if model_0.kind is not CrossSectionKind.FLAT_SPHERE or model_0.cone_dimension != 3:
        raise DomainError("reference geometry must be the flat n=3 sphere")
    if not model_v.supports_evaluation or model_v.lmax != model_0.lmax:
        raise DomainError("both geometries need point evaluation and the same L_max")
    if geometry_v.r_max != geometry_0.r_max or geometry_v.nodes != geometry_0.nodes:
        raise DomainError("both geometries need the same R_max and N")
    if u0.geometry is not geometry_v:
        raise DomainError("u0 must live on the perturbed geometry")
    if int(steps) < 1:
        raise DomainError("need at least one quadrature step")


def duhamel_approximation(
    geometry_v: ConeGeometry, geometry_0: ConeGeometry, u0: ConeField, t: float, steps: int
) -> ConeField:
    """e^{itL_0}u0 + i int_0^t e^{i(t-s)L_0} V e^{isL_V}u0 ds on `geometry_0`, midpoint rule on `steps` steps.

    V = a cos(theta) / r^2 acts through the banded cos(theta) matrix in the
    flat harmonic basis, on the shared radial grid of `geometry_0`.
    """
    _check_duhamel(geometry_v, geometry_0, u0, steps)
    steps = int(steps)
    model_v = geometry_v.cross_section
    sign = geometry_0.time_sign
    coupling = model_v.potential_strength * cos_theta_matrix(geometry_0.cross_section.lmax)
    inv_r2 = 1.0 / geometry_0.shared_radii ** 2

    free = propagate(_flat_field(geometry_0, _basis_radial(u0, geometry_0)), t)
    h = t / steps
    integral = zero_field(geometry_0)
    if model_v.potential_strength != 0.0:
        for i in range(steps):
            s = (i + 0.5) * h
            basis = _basis_radial(propagate(u0, s), geometry_0)
            source = _flat_field(geometry_0, (coupling @ basis) * inv_r2[None, :])
            integral = integral + propagate(source, t - s)
    return free + (1j * sign * h) * integral


def duhamel_residual(geometry_v: ConeGeometry, geometry_0: ConeGeometry, u0: ConeField, t: float, steps: int) -> float:
    """|| e^{itL_V}u0 - duhamel_approximation(...) ||."""
    approx = duhamel_approximation(geometry_v, geometry_0, u0, t, steps)
    target = _flat_field(geometry_0, _basis_radial(propagate(u0, t), geometry_0))
    return (target - approx).norm()
