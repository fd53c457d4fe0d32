"""
Weighted least-norm solves on a frequency grid.

The objective is ||A phi - Y||^2 + lam * sum_J w_J |phi_J - phi0_J|^2 with
A[k, J] = exp(2 pi i mesh J.x_k). Three equivalent routes are offered:
the G x G normal equations (small grids only), the n x n dual system and the
SVD ridge route on the rescaled matrix A Gamma^-1.
"""
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from app.extensions import executor
from app.models import (
    ConstraintMatrix,
    FrequencyGrid,
    RbfInterpolant,
    SampleSet,
    SinglePointSolution,
    SolveConfig,
    SolvePath,
    Spectrum,
    WeightVariant,
)
from app.services.grid_service import GridService
from app.utils.errors import (
    DenseGuardError,
    DiagonalDominanceError,
    DimensionMismatchError,
    InputError,
    NonHermitianError,
    SingularSystemError,
)

logger = logging.getLogger(__name__)

# frequency block used by the closed-form single point evaluator
SINGLE_POINT_BLOCK = 8192
# relative asymmetry tolerated before averaging a solved spectrum
SYMMETRY_SLACK = 1e-6


@dataclass(frozen=True)
class ObjectiveTerms:
    misfit: float
    penalty: float
    lam: float

    @property
    def total(self) -> float:
        return self.misfit + self.lam * self.penalty


def hermitian_part(coeffs: np.ndarray, source: str) -> np.ndarray:
    """Average phi_J with conj(phi_-J) once the asymmetry is known to be round-off"""
    deviation = float(np.max(np.abs(coeffs[::-1] - np.conj(coeffs)))) if coeffs.size else 0.0
    scale = max(1.0, float(np.max(np.abs(coeffs))) if coeffs.size else 1.0)
    if deviation > SYMMETRY_SLACK * scale:
        logger.error(f"{source} broke hermitian symmetry: deviation {deviation:.3e}")
        raise NonHermitianError(deviation, SYMMETRY_SLACK)
    return 0.5 * (coeffs + np.conj(coeffs[::-1]))


def _solve_pos(matrix: np.ndarray, rhs: np.ndarray, factorization: str) -> np.ndarray:
    """Cholesky solve; ill-conditioning is treated as singularity"""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter('error', linalg.LinAlgWarning)
            return linalg.solve(matrix, rhs, assume_a='pos')
    except (linalg.LinAlgError, linalg.LinAlgWarning) as e:
        logger.error(f"{factorization} failed: {e!r}")
        raise SingularSystemError(factorization, str(e))


class SolverService:
    """Constraint assembly and the variational solves"""

    @staticmethod
    def assemble_constraint_matrix(grid: FrequencyGrid, samples: SampleSet) -> ConstraintMatrix:
        """
        Build A[k, J] = exp(2 pi i mesh J.x_k) in lexicographic column order

        Args:
            grid (FrequencyGrid): frequency lattice
            samples (SampleSet): sample points

        Returns:
            ConstraintMatrix: n x G complex matrix
        """
        if samples.dim != grid.dim:
            raise DimensionMismatchError(f"samples have dimension {samples.dim}, grid has {grid.dim}")
        n = samples.n
        entries = np.ones((n, 1), dtype=np.complex128)
        for axis in range(grid.dim):
            factor = GridService.axis_exponentials(grid, samples.points[:, axis])
            entries = (entries[:, :, None] * factor[:, None, :]).reshape(n, -1)
        return ConstraintMatrix(grid, entries)

    @staticmethod
    def inverse_weights(grid: FrequencyGrid, config: SolveConfig) -> np.ndarray:
        """w_J^-1 per index; zero marks an index excluded by an infinite weight"""
        if config.weight_variant is WeightVariant.CUSTOM:
            weights = config.custom_weights
            if weights.shape[0] != grid.size:
                raise DimensionMismatchError(f"{weights.shape[0]} custom weights for a grid of {grid.size} indices")
            inverse = np.where(np.isinf(weights), 0.0, 1.0 / weights)
        else:
            inverse = 1.0 / GridService.grid_weights(grid, config.alpha)
        if np.any(np.abs(inverse - inverse[::-1]) > 1e-14 * np.max(inverse)):
            raise InputError("weights must be even in J")
        return inverse

    @staticmethod
    def resolve_path(grid: FrequencyGrid, samples: SampleSet, config: SolveConfig) -> SolvePath:
        if config.path is not SolvePath.AUTO:
            return config.path
        return SolvePath.DUAL if samples.n <= grid.size else SolvePath.DENSE

    @staticmethod
    def solve_general(grid: FrequencyGrid, samples: SampleSet, config: SolveConfig,
                      offset: Optional[Spectrum] = None) -> Spectrum:
        """
        Minimize ||A phi - Y||^2 + lam * sum_J w_J |phi_J - offset_J|^2

        Args:
            grid (FrequencyGrid): frequency lattice
            samples (SampleSet): points and labels
            config (SolveConfig): exponent, multiplier, weights and path
            offset (Spectrum): optional reference spectrum, zero by default

        Returns:
            Spectrum: hermitian-flagged solution
        """
        matrix = SolverService.assemble_constraint_matrix(grid, samples).entries
        inverse = SolverService.inverse_weights(grid, config)
        phi0 = np.zeros(grid.size, dtype=np.complex128) if offset is None else offset.coeffs
        if offset is not None and offset.grid != grid:
            raise DimensionMismatchError("offset spectrum lives on a different grid")
        rhs = samples.labels - (matrix @ phi0).real
        path = SolverService.resolve_path(grid, samples, config)
        logger.info(
            f"Solving n={samples.n} G={grid.size} alpha={config.alpha} lambda={config.lam} "
            f"path={path.value}"
        )

        if path is SolvePath.DUAL:
            delta = SolverService._solve_dual(matrix, inverse, rhs, config.lam)
        elif path is SolvePath.DENSE:
            delta = SolverService._solve_dense(grid, matrix, inverse, rhs, config)
        else:
            if config.lam <= 0:
                raise InputError("the svd path requires lambda > 0")
            scale = np.sqrt(inverse / config.lam)
            delta = scale * SolverService.ridge_svd_solve(matrix * scale[None, :], rhs)

        return Spectrum(grid, hermitian_part(phi0 + delta, f"{path.value} solve"), hermitian=True)

    @staticmethod
    def _solve_dual(matrix: np.ndarray, inverse: np.ndarray, rhs: np.ndarray, lam: float) -> np.ndarray:
        weighted = matrix * inverse[None, :]
        # even weights make A W^-1 A^H real symmetric
        gram = (weighted @ matrix.conj().T).real
        gram[np.diag_indices_from(gram)] += lam
        multipliers = _solve_pos(gram, rhs, 'Cholesky factorization of the n x n dual system')
        return weighted.conj().T @ multipliers

    @staticmethod
    def _solve_dense(grid: FrequencyGrid, matrix: np.ndarray, inverse: np.ndarray,
                     rhs: np.ndarray, config: SolveConfig) -> np.ndarray:
        if grid.size > config.dense_limit:
            raise DenseGuardError(grid.size, config.dense_limit)
        if config.lam <= 0:
            raise InputError("the dense path requires lambda > 0; use path='dual' for exact interpolation")
        if np.any(inverse == 0):
            raise InputError("the dense path needs finite weights on every index")
        normal = matrix.conj().T @ matrix
        normal[np.diag_indices_from(normal)] += config.lam / inverse
        return _solve_pos(normal, matrix.conj().T @ rhs, 'Cholesky factorization of the G x G normal equations')

    @staticmethod
    def ridge_svd_solve(a_tilde, b) -> np.ndarray:
        """(A^H A + I)^-1 A^H b through A = U S V^H: V diag(s / (s^2 + 1)) U^H b"""
        a_tilde = np.atleast_2d(np.asarray(a_tilde, dtype=np.complex128))
        b = np.asarray(b, dtype=np.complex128).reshape(-1)
        if not np.all(np.isfinite(a_tilde)):
            raise InputError("matrix passed to the SVD ridge solve must be finite")
        if b.shape[0] != a_tilde.shape[0]:
            raise DimensionMismatchError(f"right-hand side has {b.shape[0]} rows, matrix has {a_tilde.shape[0]}")
        u, s, vh = linalg.svd(a_tilde, full_matrices=False)
        return vh.conj().T @ ((s / (s * s + 1.0)) * (u.conj().T @ b))

    @staticmethod
    def objective_terms(grid: FrequencyGrid, samples: SampleSet, spectrum: Spectrum,
                        config: SolveConfig) -> ObjectiveTerms:
        """Misfit ||A phi - Y||^2 and penalty sum w |phi|^2 of a spectrum"""
        matrix = SolverService.assemble_constraint_matrix(grid, samples).entries
        misfit = float(np.sum(np.abs(matrix @ spectrum.coeffs - samples.labels) ** 2))
        inverse = SolverService.inverse_weights(grid, config)
        energy = np.abs(spectrum.coeffs) ** 2
        retained = inverse > 0
        penalty = float(np.sum(energy[retained] / inverse[retained]))
        return ObjectiveTerms(misfit=misfit, penalty=penalty, lam=config.lam)

    @staticmethod
    def solve_single_point_analytic(band_limit: int, mesh: float, alpha: float, lam: float) -> SinglePointSolution:
        """Closed form for one sample at the origin with label 2 and phi_0 = 0"""
        grid = FrequencyGrid(1, band_limit, mesh)
        if not (lam >= 0 and math.isfinite(lam)):
            raise InputError(f"lambda must be non-negative and finite, got {lam!r}")
        j = np.arange(1, band_limit + 1, dtype=np.float64)
        inverse = (1.0 + (j * mesh) ** 2) ** (-alpha / 2.0)
        z_squared = float(np.sum(inverse))
        denominator = z_squared + lam

        density = np.zeros(grid.size)
        density[band_limit + 1:] = inverse / (denominator * mesh)
        density[:band_limit] = density[band_limit + 1:][::-1]
        spectrum = Spectrum(grid, density * mesh, hermitian=True)

        phase_step = 2.0 * math.pi * mesh * j
        amplitude = 2.0 * inverse / denominator

        def field(block: np.ndarray) -> np.ndarray:
            total = np.zeros(block.shape[0])
            for start in range(0, band_limit, SINGLE_POINT_BLOCK):
                stop = start + SINGLE_POINT_BLOCK
                total += np.cos(block[:, None] * phase_step[None, start:stop]) @ amplitude[start:stop]
            return total

        def evaluator(x):
            points = np.asarray(x, dtype=np.float64)
            values = executor.map_rows(field, points.reshape(-1))
            return float(values[0]) if points.ndim == 0 else values.reshape(points.shape)

        logger.debug(f"Single point closed form: M={band_limit} Z^2={z_squared:.6g} lambda={lam}")
        return SinglePointSolution(
            grid=grid, alpha=alpha, lam=lam, z_squared=z_squared,
            density=density, spectrum=spectrum, evaluator=evaluator,
        )

    @staticmethod
    def gaussian_rbf_interpolant(samples: SampleSet, sigma: float) -> RbfInterpolant:
        """g = K^-1 Y for K[i, j] = exp(-|x_i - x_j|^2 / 2 sigma^2), K strictly diagonally dominant"""
        if not (sigma > 0 and math.isfinite(sigma)):
            raise InputError(f"sigma must be positive, got {sigma!r}")
        diff = samples.points[:, None, :] - samples.points[None, :, :]
        kernel = np.exp(-np.sum(diff * diff, axis=-1) / (2.0 * sigma ** 2))
        off_diagonal = np.sum(kernel, axis=1) - 1.0
        if np.any(off_diagonal >= 1.0):
            raise DiagonalDominanceError(samples.min_pairwise_distance(), sigma)
        coefficients = _solve_pos(kernel, samples.labels, 'Cholesky factorization of the Gaussian kernel matrix')
        return RbfInterpolant(centers=samples, sigma=sigma, coefficients=coefficients)
