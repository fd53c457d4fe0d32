"""
Frequency lattice enumeration, spectral weights and field evaluation.

Fields are evaluated by direct summation h(x) = sum_J phi_J exp(2 pi i mesh J.x),
contracted one axis at a time so a d-dimensional grid never has to be
materialized per evaluation point.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import List

import numpy as np

from app.extensions import executor
from app.models import FrequencyGrid, MultiIndex, Spectrum
from app.utils.errors import DimensionMismatchError, NonHermitianError

logger = logging.getLogger(__name__)

FIELD_IMAG_TOLERANCE = 1e-10


@dataclass(frozen=True)
class FieldEvaluation:
    values: np.ndarray
    max_imag: float


class GridService:
    """Operations on FrequencyGrid and Spectrum"""

    @staticmethod
    def enumerate_indices(grid: FrequencyGrid) -> List[MultiIndex]:
        """Lexicographically ordered, duplicate-free index set of the grid"""
        axis = range(-grid.band_limit, grid.band_limit + 1)
        return [MultiIndex(components) for components in product(axis, repeat=grid.dim)]

    @staticmethod
    @lru_cache(maxsize=32)
    def index_array(grid: FrequencyGrid) -> np.ndarray:
        """(G, d) integer array of the indices in enumeration order"""
        axes = np.meshgrid(*([grid.axis()] * grid.dim), indexing='ij')
        indices = np.stack([a.reshape(-1) for a in axes], axis=1)
        indices.setflags(write=False)
        return indices

    @staticmethod
    def squared_index_norms(grid: FrequencyGrid) -> np.ndarray:
        """|J|^2 for every index, built from per-axis squares"""
        squares = grid.axis().astype(np.float64) ** 2
        norms = squares
        for _ in range(grid.dim - 1):
            norms = (norms[:, None] + squares[None, :]).reshape(-1)
        return norms

    @staticmethod
    def japanese_bracket_weight(index, mesh: float, alpha: float) -> float:
        """(1 + |J|^2 mesh^2)^(alpha/2)"""
        components = index.components if isinstance(index, MultiIndex) else tuple(np.atleast_1d(index))
        squared = float(sum(int(c) * int(c) for c in components))
        return (1.0 + squared * mesh * mesh) ** (alpha / 2.0)

    @staticmethod
    def grid_weights(grid: FrequencyGrid, alpha: float) -> np.ndarray:
        return (1.0 + GridService.squared_index_norms(grid) * grid.mesh ** 2) ** (alpha / 2.0)

    @staticmethod
    def frequency_norms(grid: FrequencyGrid) -> np.ndarray:
        return np.sqrt(GridService.squared_index_norms(grid)) * grid.mesh

    @staticmethod
    def axis_exponentials(grid: FrequencyGrid, coords: np.ndarray) -> np.ndarray:
        """exp(2 pi i mesh j x) for one coordinate column, shape (P, 2M+1)"""
        phase_step = 2.0 * math.pi * grid.mesh * grid.axis().astype(np.float64)
        return np.exp(1j * (coords[:, None] * phase_step[None, :]))

    @staticmethod
    def _contract(grid: FrequencyGrid, tensor: np.ndarray, points: np.ndarray) -> np.ndarray:
        side = grid.side
        d = grid.dim
        last = GridService.axis_exponentials(grid, points[:, d - 1])
        partial = tensor.reshape(-1, side) @ last.T
        for axis in range(d - 2, -1, -1):
            factor = GridService.axis_exponentials(grid, points[:, axis])
            partial = np.einsum('asp,ps->ap', partial.reshape(-1, side, points.shape[0]), factor)
        return partial.reshape(points.shape[0])

    @staticmethod
    def _as_points(grid: FrequencyGrid, x) -> np.ndarray:
        points = np.asarray(x, dtype=np.float64)
        if points.ndim == 0:
            points = points.reshape(1, 1)
        elif points.ndim == 1:
            points = points.reshape(1, -1) if grid.dim > 1 or points.shape[0] == 1 else points.reshape(-1, 1)
        if points.shape[1] != grid.dim:
            raise DimensionMismatchError(f"evaluation points have dimension {points.shape[1]}, grid has {grid.dim}")
        return points

    @staticmethod
    def evaluate_field_complex(spectrum: Spectrum, x) -> np.ndarray:
        grid = spectrum.grid
        points = GridService._as_points(grid, x)
        tensor = spectrum.coeffs
        return executor.map_rows(lambda block: GridService._contract(grid, tensor, block), points)

    @staticmethod
    def evaluate(spectrum: Spectrum, x) -> FieldEvaluation:
        values = GridService.evaluate_field_complex(spectrum, x)
        max_imag = float(np.max(np.abs(values.imag))) if values.size else 0.0
        return FieldEvaluation(values=values.real.copy(), max_imag=max_imag)

    @staticmethod
    def evaluate_field(spectrum: Spectrum, x):
        """Real field h(x); scalar for a single point, array otherwise

        The imaginary residue bound is 1e-10 * max(1, max |h|), absolute for fields
        of order one.
        """
        result = GridService.evaluate(spectrum, x)
        scale = max(1.0, float(np.max(np.abs(result.values))) if result.values.size else 1.0)
        if result.max_imag >= FIELD_IMAG_TOLERANCE * scale:
            logger.error(f"Imaginary field residue {result.max_imag:.3e} (hermitian={spectrum.hermitian})")
            raise NonHermitianError(result.max_imag, FIELD_IMAG_TOLERANCE)
        points = np.asarray(x, dtype=np.float64)
        single = points.ndim == 0 or (points.ndim == 1 and (spectrum.grid.dim > 1 or points.shape[0] == 1))
        return float(result.values[0]) if single else result.values

    @staticmethod
    def sobolev_quadratic_form(spectrum: Spectrum, alpha: float) -> float:
        """sum_J <xi_J>^alpha |phi_J|^2"""
        weights = GridService.grid_weights(spectrum.grid, alpha)
        return float(np.dot(weights, np.abs(spectrum.coeffs) ** 2))
