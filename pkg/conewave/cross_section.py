"""
Angular spectrum of the cone cross-section Y.

Builds the eigenvalues lambda_j of Delta_h + V0 on Y and the mode orders
nu_j = sqrt((n-2)^2/4 + lambda_j). Three families are supported: the flat
round sphere S^{n-1}, the dipole sphere (V0 = a cos(theta) on S^2) and a
user-supplied spectrum with abstract eigenfunctions.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import linalg, special

from conewave.errors import (
    ConvergenceError,
    DomainError,
    PositivityViolation,
    UnsupportedEvaluation,
)

logger = logging.getLogger(__name__)

GROUP_TOLERANCE = 1.0e-9
CONVERGENCE_TOLERANCE = 1.0e-6
MAX_LMAX = 64


class CrossSectionKind(Enum):
    FLAT_SPHERE = "flat-sphere"
    DIPOLE = "dipole"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ModeGroup:
    """Modes sharing one eigenvalue, hence one order nu and one Hankel plan."""

    nu: float
    eigenvalue: float
    indices: Tuple[int, ...]

    @property
    def degeneracy(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class SphereQuadrature:
    """Gauss-Legendre in cos(theta) times uniform azimuth on S^2."""

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return int(self.weights.size)


def sphere_volume(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1}."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def sphere_multiplicity(n: int, ell: int) -> int:
    """Dimension of degree-ell spherical harmonics on S^{n-1}."""
    if ell < 0:
        return 0
    top = math.comb(ell + n - 1, n - 1)
    lower = math.comb(ell + n - 3, n - 1) if ell >= 2 else 0
    return top - lower


def gauss_sphere_quadrature(lmax: int) -> SphereQuadrature:
    """Exact for polynomials of degree <= 2*lmax + 1 on S^2."""
    cos_theta, gl_weights = np.polynomial.legendre.leggauss(lmax + 1)
    n_phi = 2 * lmax + 2
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    theta = np.arccos(cos_theta)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    ww = np.repeat(gl_weights, n_phi) * (2.0 * math.pi / n_phi)
    return SphereQuadrature(theta=tt.ravel(), phi=pp.ravel(), weights=ww)


def harmonic_index(ell: int, m: int) -> int:
    return ell * ell + ell + m


def real_spherical_harmonics(lmax: int, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Orthonormal real harmonics on S^2, shape (points, (lmax+1)^2).

    Column ell^2 + ell + m holds degree ell, order m; m > 0 is the cosine
    type and m < 0 the sine type, both scaled by sqrt(2).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    x = np.cos(theta)
    out = np.empty((theta.size, (lmax + 1) ** 2))
    for ell in range(lmax + 1):
        for m in range(ell + 1):
            norm = math.sqrt(
                (2 * ell + 1) / (4.0 * math.pi)
                * math.exp(math.lgamma(ell - m + 1) - math.lgamma(ell + m + 1))
            )
            plm = norm * special.lpmv(m, ell, x)
            if m == 0:
                out[:, harmonic_index(ell, 0)] = plm
            else:
                out[:, harmonic_index(ell, m)] = math.sqrt(2.0) * plm * np.cos(m * phi)
                out[:, harmonic_index(ell, -m)] = math.sqrt(2.0) * plm * np.sin(m * phi)
    return out


def cos_coupling(ell: int, m: int) -> float:
    """<Y_{ell+1,m}| cos(theta) |Y_{ell,m}> for the real basis."""
    m = abs(m)
    return math.sqrt(((ell + 1) ** 2 - m * m) / ((2 * ell + 1) * (2 * ell + 3)))


def cos_theta_matrix(lmax: int) -> np.ndarray:
    """Banded matrix of multiplication by cos(theta) in the real harmonic basis."""
    size = (lmax + 1) ** 2
    out = np.zeros((size, size))
    for ell in range(lmax):
        for m in range(-ell, ell + 1):
            i, j = harmonic_index(ell, m), harmonic_index(ell + 1, m)
            out[i, j] = out[j, i] = cos_coupling(ell, m)
    return out


def dipole_second_order_shift(a: float) -> float:
    """Second-order perturbation of the ground eigenvalue of Delta + a cos(theta)."""
    return -a * a / 6.0


@dataclass(frozen=True, eq=False)
class CrossSectionModel:
    cone_dimension: int
    kind: CrossSectionKind
    eigenvalues: np.ndarray
    groups: Tuple[ModeGroup, ...]
    description: str
    lmax: Optional[int] = None
    potential_strength: float = 0.0
    # harmonic-basis coefficients, shape ((lmax+1)^2, modes); None without point evaluation
    coefficients: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n_modes(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def shift(self) -> float:
        return (self.cone_dimension - 2) ** 2 / 4.0

    @cached_property
    def nus(self) -> np.ndarray:
        return np.sqrt(self.eigenvalues + self.shift)

    @property
    def nu0(self) -> float:
        return self.groups[0].nu

    @property
    def nu1(self) -> Optional[float]:
        return self.groups[1].nu if len(self.groups) > 1 else None

    @property
    def degeneracies(self) -> List[int]:
        return [g.degeneracy for g in self.groups]

    @property
    def volume(self) -> float:
        return sphere_volume(self.cone_dimension)

    @property
    def supports_evaluation(self) -> bool:
        return self.coefficients is not None

    def group_of_mode(self, index: int) -> int:
        for g, group in enumerate(self.groups):
            if index in group.indices:
                return g
        raise DomainError(f"mode index {index} out of range")

    def _require_evaluation(self) -> None:
        if not self.supports_evaluation:
            raise UnsupportedEvaluation(
                f"{self.description} has no pointwise eigenfunctions"
            )

    def eigenfunctions(self, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """All retained eigenfunctions at (theta, phi), shape (points, modes)."""
        self._require_evaluation()
        basis = real_spherical_harmonics(self.lmax, theta, phi)
        return basis @ self.coefficients

    @cached_property
    def quadrature(self) -> SphereQuadrature:
        self._require_evaluation()
        return gauss_sphere_quadrature(self.lmax)

    @cached_property
    def quadrature_eigenfunctions(self) -> np.ndarray:
        q = self.quadrature
        return self.eigenfunctions(q.theta, q.phi)

    def distance_on_y(self, theta1: float, phi1: float, theta2: float, phi2: float) -> float:
        """Great-circle distance on the unit sphere."""
        cos_d = (
            math.cos(theta1) * math.cos(theta2)
            + math.sin(theta1) * math.sin(theta2) * math.cos(phi1 - phi2)
        )
        return math.acos(min(1.0, max(-1.0, cos_d)))

    def spectrum_table(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "nu": [g.nu for g in self.groups],
                "lambda": [g.eigenvalue for g in self.groups],
                "degeneracy": [g.degeneracy for g in self.groups],
            }
        )


def _group_modes(eigenvalues: np.ndarray, shift: float) -> Tuple[ModeGroup, ...]:
    groups: List[ModeGroup] = []
    start = 0
    for i in range(1, eigenvalues.size + 1):
        if i == eigenvalues.size or eigenvalues[i] - eigenvalues[start] >= GROUP_TOLERANCE:
            members = tuple(range(start, i))
            lam = float(np.mean(eigenvalues[start:i]))
            groups.append(ModeGroup(nu=math.sqrt(lam + shift), eigenvalue=lam, indices=members))
            start = i
    return tuple(groups)


def _check_positivity(n: int, smallest: float) -> None:
    margin = smallest + (n - 2) ** 2 / 4.0
    if margin <= 0.0:
        raise PositivityViolation(
            f"lambda_min + (n-2)^2/4 = {margin:.6g} <= 0; the operator is not positive",
            value=margin,
        )


def _check_lmax(lmax: int) -> int:
    lmax = int(lmax)
    if lmax < 0 or lmax > MAX_LMAX:
        raise DomainError(f"L_max {lmax} outside [0, {MAX_LMAX}]")
    return lmax


def build_flat_sphere(n: int, lmax: int) -> CrossSectionModel:
    """Round S^{n-1} with V0 = 0; pointwise evaluation only for n = 3."""
    n = int(n)
    lmax = _check_lmax(lmax)
    if n < 2 or n > 6:
        raise DomainError(f"cone dimension {n} outside [2, 6]")
    # lambda = 0 with (n-2)^2/4 = 0 is not strictly positive
    _check_positivity(n, 0.0)

    eigenvalues: List[float] = []
    for ell in range(lmax + 1):
        eigenvalues.extend([float(ell * (ell + n - 2))] * sphere_multiplicity(n, ell))
    values = np.asarray(eigenvalues)
    coefficients = np.eye(values.size) if n == 3 else None
    model = CrossSectionModel(
        cone_dimension=n,
        kind=CrossSectionKind.FLAT_SPHERE,
        eigenvalues=values,
        groups=_group_modes(values, (n - 2) ** 2 / 4.0),
        description=f"flat S^{n - 1}, L_max={lmax}",
        lmax=lmax,
        coefficients=coefficients,
    )
    logger.info("built %s: %d modes in %d groups", model.description, model.n_modes, len(model.groups))
    return model


def _dipole_spectrum(a: float, lmax: int) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of Delta_{S^2} + a cos(theta), block by azimuthal order."""
    size = (lmax + 1) ** 2
    values: List[float] = []
    columns: List[np.ndarray] = []
    for m in range(lmax + 1):
        degrees = np.arange(m, lmax + 1)
        diagonal = (degrees * (degrees + 1)).astype(float)
        off = np.array([a * cos_coupling(ell, m) for ell in degrees[:-1]])
        if degrees.size == 1:
            w, v = diagonal, np.ones((1, 1))
        else:
            w, v = linalg.eigh_tridiagonal(diagonal, off)
        for signed_m in ((0,) if m == 0 else (m, -m)):
            rows = [harmonic_index(int(ell), signed_m) for ell in degrees]
            for k in range(w.size):
                column = np.zeros(size)
                column[rows] = v[:, k]
                values.append(float(w[k]))
                columns.append(column)
    order = np.argsort(np.asarray(values), kind="stable")
    eigenvalues = np.asarray(values)[order]
    coefficients = np.column_stack([columns[i] for i in order])
    return eigenvalues, coefficients


def _dipole_ground(a: float, lmax: int) -> float:
    degrees = np.arange(0, lmax + 1)
    diagonal = (degrees * (degrees + 1)).astype(float)
    if lmax == 0:
        return 0.0
    off = np.array([a * cos_coupling(ell, 0) for ell in degrees[:-1]])
    return float(linalg.eigh_tridiagonal(diagonal, off, eigvals_only=True, select="i", select_range=(0, 0))[0])


def build_dipole_sphere(a: float, lmax: int, n: int = 3) -> CrossSectionModel:
    """S^2 with V0 = a cos(theta), diagonalized in the real harmonic basis."""
    if int(n) != 3:
        raise DomainError("the dipole cross-section is defined on S^2 only (n = 3)")
    lmax = _check_lmax(lmax)
    a = float(a)
    eigenvalues, coefficients = _dipole_spectrum(a, lmax)
    _check_positivity(3, float(eigenvalues[0]))

    if a != 0.0 and lmax >= 2:
        nu_here = math.sqrt(eigenvalues[0] + 0.25)
        coarse = _dipole_ground(a, lmax - 2)
        if coarse + 0.25 > 0.0:
            shift = abs(nu_here - math.sqrt(coarse + 0.25))
        else:
            shift = math.inf
        if shift > CONVERGENCE_TOLERANCE:
            raise ConvergenceError(
                f"nu0 moved by {shift:.3g} between L_max={lmax - 2} and L_max={lmax}"
            )

    model = CrossSectionModel(
        cone_dimension=3,
        kind=CrossSectionKind.DIPOLE,
        eigenvalues=eigenvalues,
        groups=_group_modes(eigenvalues, 0.25),
        description=f"dipole S^2, a={a:g}, L_max={lmax}",
        lmax=lmax,
        potential_strength=a,
        coefficients=coefficients,
    )
    logger.info("built %s: nu0=%.8f", model.description, model.nu0)
    return model


def build_custom_spectrum(n: int, spectrum: Sequence[Tuple[float, int]]) -> CrossSectionModel:
    """Mode-space-only model from (lambda, degeneracy) pairs."""
    n = int(n)
    if n < 2 or n > 6:
        raise DomainError(f"cone dimension {n} outside [2, 6]")
    if not spectrum:
        raise DomainError("custom spectrum is empty")
    eigenvalues: List[float] = []
    for lam, degeneracy in spectrum:
        if int(degeneracy) < 1:
            raise DomainError(f"degeneracy {degeneracy} must be positive")
        eigenvalues.extend([float(lam)] * int(degeneracy))
    values = np.sort(np.asarray(eigenvalues), kind="stable")
    _check_positivity(n, float(values[0]))
    return CrossSectionModel(
        cone_dimension=n,
        kind=CrossSectionKind.CUSTOM,
        eigenvalues=values,
        groups=_group_modes(values, (n - 2) ** 2 / 4.0),
        description=f"custom spectrum, n={n}, {values.size} modes",
    )


def load_spectrum_file(path: Union[str, Path]) -> List[Tuple[float, int]]:
    """Read a `lambda,degeneracy` CSV."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"spectrum file {path} does not exist")
    frame = pd.read_csv(path)
    missing = {"lambda", "degeneracy"} - set(frame.columns)
    if missing:
        raise DomainError(f"spectrum file {path} lacks columns {sorted(missing)}")
    return [(float(lam), int(d)) for lam, d in zip(frame["lambda"], frame["degeneracy"])]


def eigenfunction_eval(model: CrossSectionModel, mode: int, theta: float, phi: float) -> float:
    """phi_mode(theta, phi); real-valued for the real harmonic basis."""
    if mode < 0 or mode >= model.n_modes:
        raise DomainError(f"mode index {mode} out of range")
    values = model.eigenfunctions(np.array([theta]), np.array([phi]))
    return float(values[0, mode])


def hormander_ratio(model: CrossSectionModel, refinement: int = 4) -> float:
    """max_j sup|phi_j| / nu_j^{(n-1)/2}, sup taken on a refined quadrature grid."""
    model._require_evaluation()
    fine = gauss_sphere_quadrature(refinement * (model.lmax + 1) - 1)
    values = np.abs(model.eigenfunctions(fine.theta, fine.phi))
    exponent = (model.cone_dimension - 1) / 2.0
    return float(np.max(values.max(axis=0) / model.nus ** exponent))
