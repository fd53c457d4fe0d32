"""
Domain types for the band-limited variational interpolation problem.

All types are immutable after construction; array fields are copied and
flagged read-only so they can be shared between threads.
"""
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple
from enum import Enum
import math

import numpy as np
from scipy import integrate

from app.utils.errors import (
    DimensionMismatchError,
    DuplicatePointError,
    InputError,
    NonHermitianError,
    NumericalError,
)

HERMITIAN_TOLERANCE = 1e-12
DENSE_GRID_LIMIT = 4096


def _frozen_array(values, dtype):
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


class WeightVariant(Enum):
    JAPANESE_BRACKET = 'japanese-bracket'
    CUSTOM = 'custom-weights'


class SolvePath(Enum):
    DENSE = 'dense'
    DUAL = 'dual'
    SVD = 'svd'
    AUTO = 'auto'


class NormVariant(Enum):
    HOMOGENEOUS = 'homogeneous'
    BRACKET = 'bracket'


class Verdict(Enum):
    TO_ZERO = 'to_zero'
    FINITE_LIMIT = 'finite_limit'
    DIVERGES = 'diverges'
    WITHHELD = 'withheld'


class ZeroModePolicy(Enum):
    CAP = 'cap'
    EXCLUDE = 'exclude'


@dataclass(frozen=True)
class FrequencyGrid:
    """Lattice of frequencies J*mesh with J in {-M..M}^d"""
    dim: int
    band_limit: int
    mesh: float

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise InputError(f"grid dimension must be a positive integer, got {self.dim!r}")
        if int(self.band_limit) != self.band_limit or self.band_limit < 1:
            raise InputError(f"band limit M must be a positive integer, got {self.band_limit!r}")
        if not (self.mesh > 0 and math.isfinite(self.mesh)):
            raise InputError(f"mesh must be positive and finite, got {self.mesh!r}")
        object.__setattr__(self, 'dim', int(self.dim))
        object.__setattr__(self, 'band_limit', int(self.band_limit))
        object.__setattr__(self, 'mesh', float(self.mesh))

    @property
    def side(self) -> int:
        return 2 * self.band_limit + 1

    @property
    def size(self) -> int:
        return self.side ** self.dim

    @property
    def band(self) -> float:
        """Largest frequency magnitude along one axis"""
        return self.band_limit * self.mesh

    @property
    def nyquist_width(self) -> float:
        return 1.0 / (self.side * self.mesh)

    def axis(self) -> np.ndarray:
        return np.arange(-self.band_limit, self.band_limit + 1)

    def to_dict(self) -> Dict[str, Any]:
        return {'dim': self.dim, 'band_limit': self.band_limit, 'mesh': self.mesh, 'size': self.size}


@dataclass(frozen=True)
class MultiIndex:
    components: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'components', tuple(int(c) for c in self.components))

    def validate(self, grid: FrequencyGrid) -> 'MultiIndex':
        if len(self.components) != grid.dim:
            raise DimensionMismatchError(
                f"multi-index {self.components} has {len(self.components)} components, grid has dim {grid.dim}"
            )
        if any(abs(c) > grid.band_limit for c in self.components):
            raise InputError(f"multi-index {self.components} outside [-{grid.band_limit}, {grid.band_limit}]")
        return self


@dataclass(frozen=True, eq=False)
class Spectrum:
    """One measure-absorbed coefficient per grid index, lexicographic order"""
    grid: FrequencyGrid
    coeffs: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        coeffs = _frozen_array(self.coeffs, np.complex128).reshape(-1)
        if coeffs.shape[0] != self.grid.size:
            raise DimensionMismatchError(
                f"spectrum has {coeffs.shape[0]} coefficients, grid has {self.grid.size} indices"
            )
        object.__setattr__(self, 'coeffs', coeffs)
        if self.hermitian:
            deviation = self.hermitian_deviation()
            if deviation >= HERMITIAN_TOLERANCE:
                raise NonHermitianError(deviation, HERMITIAN_TOLERANCE)

    def hermitian_deviation(self) -> float:
        # J -> -J reverses the lexicographic order
        return float(np.max(np.abs(self.coeffs[::-1] - np.conj(self.coeffs))))

    @classmethod
    def zeros(cls, grid: FrequencyGrid) -> 'Spectrum':
        return cls(grid, np.zeros(grid.size, dtype=np.complex128), hermitian=True)

    @classmethod
    def constant(cls, grid: FrequencyGrid, value: float) -> 'Spectrum':
        coeffs = np.zeros(grid.size, dtype=np.complex128)
        coeffs[grid.size // 2] = value
        return cls(grid, coeffs, hermitian=True)

    def scaled(self, factor: complex) -> 'Spectrum':
        return Spectrum(self.grid, self.coeffs * factor, hermitian=self.hermitian and np.isreal(factor))

    def __add__(self, other: 'Spectrum') -> 'Spectrum':
        if other.grid != self.grid:
            raise DimensionMismatchError("cannot add spectra on different grids")
        return Spectrum(self.grid, self.coeffs + other.coeffs, hermitian=self.hermitian and other.hermitian)


@dataclass(frozen=True, eq=False)
class SampleSet:
    """n labeled points (X, Y); the uniform empirical measure on X"""
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64, copy=True)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        labels = np.array(self.labels, dtype=np.float64, copy=True).reshape(-1)
        if points.ndim != 2 or points.shape[0] < 1 or points.shape[1] < 1:
            raise InputError(f"sample points must form an n x d matrix with n >= 1, got shape {points.shape}")
        if labels.shape[0] != points.shape[0]:
            raise DimensionMismatchError(f"{points.shape[0]} points but {labels.shape[0]} labels")
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(labels))):
            raise InputError("sample points and labels must be finite")
        unique = np.unique(points, axis=0)
        if unique.shape[0] != points.shape[0]:
            raise DuplicatePointError(f"sample set contains {points.shape[0] - unique.shape[0]} duplicate point(s)")
        points.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'labels', labels)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def min_pairwise_distance(self) -> float:
        if self.n < 2:
            return math.inf
        diff = self.points[:, None, :] - self.points[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        dist[np.diag_indices(self.n)] = np.inf
        return float(np.min(dist))


@dataclass(frozen=True, eq=False)
class ConstraintMatrix:
    """A[k, J] = exp(2 pi i mesh J.x_k), columns in lexicographic order"""
    grid: FrequencyGrid
    entries: np.ndarray

    def __post_init__(self):
        entries = _frozen_array(self.entries, np.complex128)
        if entries.ndim != 2 or entries.shape[1] != self.grid.size:
            raise DimensionMismatchError(f"constraint matrix shape {entries.shape} does not match grid size {self.grid.size}")
        object.__setattr__(self, 'entries', entries)

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True, eq=False)
class SolveConfig:
    alpha: float = 0.0
    lam: float = 0.0
    weight_variant: WeightVariant = WeightVariant.JAPANESE_BRACKET
    path: SolvePath = SolvePath.AUTO
    custom_weights: Optional[np.ndarray] = None
    dense_limit: int = DENSE_GRID_LIMIT

    def __post_init__(self):
        object.__setattr__(self, 'weight_variant', WeightVariant(self.weight_variant))
        object.__setattr__(self, 'path', SolvePath(self.path))
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise InputError(f"lambda must be non-negative and finite, got {self.lam!r}")
        if not math.isfinite(self.alpha):
            raise InputError(f"alpha must be finite, got {self.alpha!r}")
        if self.weight_variant is WeightVariant.CUSTOM:
            if self.custom_weights is None:
                raise InputError("custom-weights variant requires custom_weights")
            weights = _frozen_array(self.custom_weights, np.float64).reshape(-1)
            if np.any(np.isnan(weights)) or np.any(weights <= 0):
                raise InputError("custom weights must be positive (inf excludes an index)")
            object.__setattr__(self, 'custom_weights', weights)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'alpha': self.alpha,
            'lambda': self.lam,
            'weight_variant': self.weight_variant.value,
            'path': self.path.value,
        }


@dataclass(frozen=True, eq=False)
class RbfInterpolant:
    """Gaussian RBF interpolant sum_j g_j exp(-|x - x_j|^2 / 2 sigma^2)"""
    centers: SampleSet
    sigma: float
    coefficients: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'coefficients', _frozen_array(self.coefficients, np.float64).reshape(-1))

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        diff = x[:, None, :] - self.centers.points[None, :, :]
        kernel = np.exp(-np.sum(diff * diff, axis=-1) / (2.0 * self.sigma ** 2))
        return kernel @ self.coefficients

    def spectrum_at(self, xi) -> np.ndarray:
        """phi_sigma(xi) = sum_i g_i exp(-2 pi i xi.x_i) psi_sigma(xi)"""
        xi = np.atleast_2d(np.asarray(xi, dtype=np.float64))
        d = self.centers.dim
        profile = (2.0 * math.pi) ** (d / 2) * self.sigma ** d * np.exp(
            -2.0 * math.pi ** 2 * self.sigma ** 2 * np.sum(xi * xi, axis=-1)
        )
        phases = np.exp(-2j * math.pi * (xi @ self.centers.points.T))
        return (phases @ self.coefficients) * profile


@dataclass(frozen=True)
class GaussianProbe:
    sigma: float
    dim: int

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise InputError(f"probe width sigma must be positive, got {self.sigma!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InputError(f"probe dimension must be a positive integer, got {self.dim!r}")
        # the profile factorizes over axes, so the 1-D transform pair is checked
        s = self.sigma
        peak = s * math.sqrt(2.0 * math.pi)
        for xi in np.linspace(0.0, 3.0, 10) / (2.0 * math.pi * s):
            value, _ = integrate.quad(
                lambda x: math.exp(-x * x / (2.0 * s * s)) * math.cos(2.0 * math.pi * x * xi),
                -12.0 * s, 12.0 * s, limit=200,
            )
            expected = peak * math.exp(-2.0 * math.pi ** 2 * s * s * xi * xi)
            if abs(value - expected) > 1e-8 * peak:
                raise NumericalError(
                    f"Gaussian probe transform mismatch at xi={xi:.6g}: {value:.12g} vs {expected:.12g}"
                )

    def profile(self, xi_norm) -> np.ndarray:
        """psi_sigma(xi) = (2 pi)^(d/2) sigma^d exp(-2 pi^2 sigma^2 |xi|^2)"""
        xi_norm = np.asarray(xi_norm, dtype=np.float64)
        return (2.0 * math.pi) ** (self.dim / 2) * self.sigma ** self.dim * np.exp(
            -2.0 * math.pi ** 2 * self.sigma ** 2 * xi_norm ** 2
        )


@dataclass(frozen=True)
class LimitClassification:
    verdict: Verdict
    evidence: Tuple[Tuple[float, float], ...]
    slope: float
    limit_value: Optional[float] = None
    diagnostic: str = ''


@dataclass(frozen=True)
class RbfDecayRow:
    sigma: float
    q_riemann: float
    q_quadrature: Optional[float] = None
    local_slope: Optional[float] = None
    quadrature_status: str = ''

    def as_row(self) -> List[Any]:
        return [self.sigma, self.q_riemann, self.q_quadrature, self.local_slope, self.quadrature_status]


@dataclass(frozen=True)
class RbfDecayStudy:
    rows: Tuple[RbfDecayRow, ...]
    tail_slope: float
    grid: FrequencyGrid

    @property
    def sigmas(self) -> List[float]:
        return [row.sigma for row in self.rows]

    @property
    def values(self) -> List[float]:
        return [row.q_riemann for row in self.rows]


@dataclass(frozen=True)
class DiagnosticsReport:
    q_alpha: float
    max_residual: float
    triviality_index: float
    classification: str
    probe_count: int
    raw_index: float = 0.0
    clamped: bool = False
    exclusion_radius: float = 0.0
    threshold: float = 0.1

    def __post_init__(self):
        if self.probe_count < 32:
            raise InputError(f"diagnostics need at least 32 probes, got {self.probe_count}")
        if self.classification not in ('trivial', 'nontrivial'):
            raise InputError(f"unknown classification {self.classification!r}")

    @property
    def is_trivial(self) -> bool:
        return self.classification == 'trivial'

    def to_dict(self) -> Dict[str, Any]:
        return {
            'q_alpha': self.q_alpha,
            'max_residual': self.max_residual,
            'tau': self.triviality_index,
            'raw_tau': self.raw_index,
            'clamped': self.clamped,
            'classification': self.classification,
            'probe_count': self.probe_count,
            'exclusion_radius': self.exclusion_radius,
            'threshold': self.threshold,
        }


@dataclass(frozen=True)
class SweepRecord:
    alpha: float
    band_limit: int
    lam: float
    report: DiagnosticsReport

    def as_row(self) -> List[Any]:
        return [
            self.alpha, self.band_limit, self.lam,
            self.report.triviality_index, self.report.classification,
            self.report.q_alpha, self.report.max_residual,
        ]


@dataclass(frozen=True, eq=False)
class SinglePointSolution:
    """Closed-form solution for one point at the origin with label 2"""
    grid: FrequencyGrid
    alpha: float
    lam: float
    z_squared: float
    density: np.ndarray
    spectrum: Spectrum
    evaluator: Callable[[Any], np.ndarray] = field(repr=False)

    def __call__(self, x) -> np.ndarray:
        return self.evaluator(x)

    @property
    def value_at_origin(self) -> float:
        return 2.0 * self.z_squared / (self.z_squared + self.lam)


@dataclass(frozen=True, eq=False)
class LfpKernel:
    grid: FrequencyGrid
    gamma_sq: np.ndarray
    moment_r3: float = 1.0
    moment_a2r: float = 1.0
    zero_mode_policy: ZeroModePolicy = ZeroModePolicy.CAP

    def __post_init__(self):
        gamma_sq = _frozen_array(self.gamma_sq, np.float64).reshape(-1)
        if gamma_sq.shape[0] != self.grid.size:
            raise DimensionMismatchError(f"kernel has {gamma_sq.shape[0]} rates, grid has {self.grid.size} indices")
        object.__setattr__(self, 'gamma_sq', gamma_sq)
        object.__setattr__(self, 'zero_mode_policy', ZeroModePolicy(self.zero_mode_policy))
        retained = self.retained
        if not np.all(np.isfinite(gamma_sq)) or np.any(gamma_sq < 0):
            raise InputError("kernel rates must be finite and non-negative")
        if not np.all(gamma_sq[retained] > 0):
            raise InputError("kernel rates must be positive on every retained index")

    @property
    def retained(self) -> np.ndarray:
        mask = np.ones(self.grid.size, dtype=bool)
        if self.zero_mode_policy is ZeroModePolicy.EXCLUDE:
            mask[self.grid.size // 2] = False
        return mask

    @property
    def max_rate(self) -> float:
        return float(np.max(self.gamma_sq))


@dataclass(frozen=True, eq=False)
class LfpState:
    spectrum: Spectrum
    time: float
    residuals: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'residuals', _frozen_array(self.residuals, np.float64).reshape(-1))

    @property
    def energy(self) -> float:
        return float(np.mean(self.residuals ** 2))

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals)))


@dataclass(frozen=True)
class LfpCheckpoint:
    time: float
    max_residual: float
    energy: float


@dataclass(frozen=True)
class LfpTrajectory:
    states: Tuple[LfpState, ...]
    checkpoints: Tuple[LfpCheckpoint, ...]
    steps: int
    dt: float

    @property
    def final(self) -> LfpState:
        return self.states[-1]


@dataclass(frozen=True)
class EquivalenceReport:
    max_coefficient_difference: float
    tolerance: float
    final_residual: float
    steps: int

    @property
    def passed(self) -> bool:
        return self.max_coefficient_difference < self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            'max_coefficient_difference': self.max_coefficient_difference,
            'tolerance': self.tolerance,
            'final_residual': self.final_residual,
            'steps': self.steps,
            'passed': self.passed,
        }


@dataclass
class RunManifest:
    command: str
    parameters: Dict[str, Any]
    input_digests: Dict[str, str] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    duration_seconds: float = 0.0
    status: str = 'running'
    started_at: str = ''
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'parameters': self.parameters,
            'input_digests': self.input_digests,
            'outputs': self.outputs,
            'duration_seconds': self.duration_seconds,
            'status': self.status,
            'started_at': self.started_at,
            'error': self.error,
        }
