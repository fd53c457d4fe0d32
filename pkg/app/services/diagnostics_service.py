"""
Residuals, triviality index, spike width and band-limit convergence.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize

from app.models import (
    DENSE_GRID_LIMIT,
    DiagnosticsReport,
    FrequencyGrid,
    SampleSet,
    SolveConfig,
    Spectrum,
    SweepRecord,
)
from app.services.grid_service import GridService
from app.services.solver_service import SolverService
from app.utils.errors import (
    DimensionMismatchError,
    EmptyProbeSetError,
    HalfLevelError,
    InputError,
)

logger = logging.getLogger(__name__)

MIN_PROBES = 32
DEFAULT_THRESHOLD = 0.1
# Exclusion radius in Nyquist widths 1/((2M+1) mesh). At five widths the alpha = 0.5
# two-point profile is still on its |x|^(-1/2) shoulder at the ball edge (tau ~ 0.11,
# above the 0.1 threshold); ten widths give tau ~ 0.07 while alpha > d stays above 0.3.
DEFAULT_EXCLUSION_WIDTHS = 10.0
WINDOW_PADDING = 0.5


@dataclass(frozen=True)
class ResidualReport:
    residuals: np.ndarray
    max_norm: float


@dataclass(frozen=True)
class Window:
    lower: np.ndarray
    upper: np.ndarray

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, points: np.ndarray) -> bool:
        return bool(np.all(points >= self.lower) and np.all(points <= self.upper))


@dataclass(frozen=True)
class TrivialityResult:
    tau: float
    raw: float
    clamped: bool
    classification: str
    probe_count: int
    exclusion_radius: float
    threshold: float


@dataclass(frozen=True)
class ConvergenceTable:
    band_limits: Tuple[int, ...]
    differences: np.ndarray

    def difference(self, first: int, second: int) -> float:
        return float(self.differences[self.band_limits.index(first), self.band_limits.index(second)])

    @property
    def max_difference(self) -> float:
        return float(np.max(self.differences)) if self.differences.size else 0.0


def default_probe_count(dim: int) -> int:
    if dim == 1:
        return 512
    if dim == 2:
        return 64 * 64
    return 16 ** dim


class DiagnosticsService:
    """Numerical classification of solved interpolants"""

    @staticmethod
    def constraint_residual(spectrum: Spectrum, samples: SampleSet) -> ResidualReport:
        if samples.dim != spectrum.grid.dim:
            raise DimensionMismatchError(f"samples have dimension {samples.dim}, spectrum grid has {spectrum.grid.dim}")
        residuals = np.atleast_1d(GridService.evaluate_field(spectrum, samples.points)) - samples.labels
        return ResidualReport(residuals=residuals, max_norm=float(np.max(np.abs(residuals))))

    @staticmethod
    def default_window(samples: SampleSet) -> Window:
        """Bounding box padded by half its extent per side, 1 unit for flat axes"""
        lower = samples.points.min(axis=0)
        upper = samples.points.max(axis=0)
        extent = upper - lower
        pad = np.where(extent > 0, WINDOW_PADDING * extent, 1.0)
        return Window(lower=lower - pad, upper=upper + pad)

    @staticmethod
    def window_grid(window: Window, probes: int) -> np.ndarray:
        """Uniform tensor grid with about `probes` points in total"""
        per_axis = max(2, int(round(probes ** (1.0 / window.dim))))
        axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(window.lower, window.upper)]
        mesh = np.meshgrid(*axes, indexing='ij')
        return np.stack([m.reshape(-1) for m in mesh], axis=1)

    @staticmethod
    def exclusion_radius(grid: FrequencyGrid, widths: float = DEFAULT_EXCLUSION_WIDTHS) -> float:
        return widths * grid.nyquist_width

    @staticmethod
    def probe_points(grid: FrequencyGrid, samples: SampleSet, window: Optional[Window] = None,
                     probes: Optional[int] = None,
                     exclusion_widths: float = DEFAULT_EXCLUSION_WIDTHS) -> Tuple[np.ndarray, float]:
        window = window or DiagnosticsService.default_window(samples)
        probes = probes or default_probe_count(samples.dim)
        if probes < MIN_PROBES:
            raise InputError(f"at least {MIN_PROBES} probes are required, got {probes}")
        if window.dim != samples.dim:
            raise DimensionMismatchError(f"window dimension {window.dim} does not match samples {samples.dim}")
        if not window.contains(samples.points):
            raise InputError("evaluation window must contain every sample point")
        radius = DiagnosticsService.exclusion_radius(grid, exclusion_widths)
        candidates = DiagnosticsService.window_grid(window, probes)
        distance = np.sqrt(np.min(
            np.sum((candidates[:, None, :] - samples.points[None, :, :]) ** 2, axis=-1), axis=1
        ))
        kept = candidates[distance > radius]
        if kept.shape[0] < MIN_PROBES:
            raise EmptyProbeSetError(
                f"only {kept.shape[0]} of {candidates.shape[0]} probes remain outside the exclusion radius "
                f"{radius:.6g}; shrink the radius or widen the window"
            )
        return kept, radius

    @staticmethod
    def triviality_index(spectrum: Spectrum, samples: SampleSet, window: Optional[Window] = None,
                         probes: Optional[int] = None, threshold: float = DEFAULT_THRESHOLD,
                         exclusion_widths: float = DEFAULT_EXCLUSION_WIDTHS) -> TrivialityResult:
        """
        tau = max |h| over probes away from the samples, relative to max |y|

        Args:
            spectrum (Spectrum): solved spectrum
            samples (SampleSet): the interpolated samples
            window (Window): evaluation box, padded bounding box by default
            probes (int): requested probe count before exclusion
            threshold (float): tau below this is trivial
            exclusion_widths (float): exclusion radius in Nyquist widths

        Returns:
            TrivialityResult: tau clamped to [0, 1], raw value and classification
        """
        points, radius = DiagnosticsService.probe_points(spectrum.grid, samples, window, probes, exclusion_widths)
        field = GridService.evaluate_field(spectrum, points)
        peak = float(np.max(np.abs(field)))
        scale = float(np.max(np.abs(samples.labels)))
        if scale > 0:
            raw = peak / scale
        else:
            raw = 0.0 if peak == 0 else math.inf
        tau = min(raw, 1.0)
        clamped = raw > 1.0
        if clamped:
            logger.warning(f"Triviality index {raw:.4g} exceeds 1; field peaks away from the samples")
        classification = 'trivial' if tau < threshold else 'nontrivial'
        return TrivialityResult(
            tau=tau, raw=raw, clamped=clamped, classification=classification,
            probe_count=int(points.shape[0]), exclusion_radius=radius, threshold=threshold,
        )

    @staticmethod
    def diagnose(spectrum: Spectrum, samples: SampleSet, config: SolveConfig,
                 threshold: float = DEFAULT_THRESHOLD,
                 exclusion_widths: float = DEFAULT_EXCLUSION_WIDTHS) -> DiagnosticsReport:
        residual = DiagnosticsService.constraint_residual(spectrum, samples)
        triviality = DiagnosticsService.triviality_index(
            spectrum, samples, threshold=threshold, exclusion_widths=exclusion_widths,
        )
        return DiagnosticsReport(
            q_alpha=GridService.sobolev_quadratic_form(spectrum, config.alpha),
            max_residual=residual.max_norm,
            triviality_index=triviality.tau,
            classification=triviality.classification,
            probe_count=triviality.probe_count,
            raw_index=triviality.raw,
            clamped=triviality.clamped,
            exclusion_radius=triviality.exclusion_radius,
            threshold=threshold,
        )

    @staticmethod
    def spike_width(source: Union[Spectrum, Callable[[np.ndarray], np.ndarray]], center,
                    half_extent: Optional[float] = None, resolution: Optional[int] = None) -> float:
        """
        Full width at half maximum of |h| along each axis through center, averaged.

        A Spectrum is scanned over half a period 1/(2 mesh) on each side by default;
        a callable takes (m, d) points and needs an explicit half_extent.
        """
        center = np.atleast_1d(np.asarray(center, dtype=np.float64))
        if isinstance(source, Spectrum):
            grid = source.grid
            if center.shape[0] != grid.dim:
                raise DimensionMismatchError(f"center has dimension {center.shape[0]}, grid has {grid.dim}")
            half_extent = half_extent or 0.5 / grid.mesh
            step = grid.nyquist_width / 8.0
            resolution = resolution or max(512, int(math.ceil(half_extent / step)))

            def field(points):
                return GridService.evaluate_field(source, points)
        else:
            if half_extent is None:
                raise InputError("a callable field needs an explicit half_extent")
            resolution = resolution or 4096
            field = source

        def magnitude(points):
            return np.abs(np.asarray(field(points), dtype=np.float64).reshape(-1))

        peak = float(magnitude(center[None, :])[0])
        if peak <= 0:
            raise InputError("field vanishes at the spike center")
        half = 0.5 * peak
        offsets = np.linspace(0.0, half_extent, resolution + 1)[1:]
        widths = []
        for axis in range(center.shape[0]):
            direction = np.zeros_like(center)
            direction[axis] = 1.0
            crossings = []
            for sign in (1.0, -1.0):
                line = center[None, :] + sign * offsets[:, None] * direction[None, :]
                below = np.nonzero(magnitude(line) < half)[0]
                if below.size == 0:
                    raise HalfLevelError(
                        f"half maximum {half:.6g} not crossed within {half_extent:.6g} of the center along axis {axis + 1}"
                    )
                k = int(below[0])
                inner = 0.0 if k == 0 else offsets[k - 1]
                crossings.append(optimize.brentq(
                    lambda t: magnitude((center + sign * t * direction)[None, :])[0] - half,
                    inner, offsets[k], xtol=1e-14 * max(1.0, half_extent),
                ))
            widths.append(crossings[0] + crossings[1])
        return float(np.mean(widths))

    @staticmethod
    def convergence_in_bandlimit(samples: SampleSet, config: SolveConfig, band_limits: Sequence[int],
                                 mesh: float, window: Optional[Window] = None,
                                 probes: Optional[int] = None) -> ConvergenceTable:
        """Pairwise sup-difference of h between band limits on one fixed evaluation grid"""
        band_limits = tuple(int(m) for m in band_limits)
        if len(band_limits) < 2:
            raise InputError("convergence table needs at least two band limits")
        if any(b < a for a, b in zip(band_limits, band_limits[1:])):
            raise InputError("band limits must be ascending")
        window = window or DiagnosticsService.default_window(samples)
        points = DiagnosticsService.window_grid(window, probes or default_probe_count(samples.dim))
        fields = []
        for band_limit in band_limits:
            grid = FrequencyGrid(samples.dim, band_limit, mesh)
            spectrum = SolverService.solve_general(grid, samples, config)
            fields.append(GridService.evaluate_field(spectrum, points))
        stacked = np.stack(fields)
        differences = np.max(np.abs(stacked[:, None, :] - stacked[None, :, :]), axis=-1)
        logger.info(f"Band-limit convergence over M={list(band_limits)}: max difference {np.max(differences):.3e}")
        return ConvergenceTable(band_limits=band_limits, differences=differences)

    @staticmethod
    def solve_and_diagnose(samples: SampleSet, alpha: float, band_limit: int, mesh: float, lam: float,
                           path='auto', threshold: float = DEFAULT_THRESHOLD,
                           exclusion_widths: float = DEFAULT_EXCLUSION_WIDTHS,
                           dense_limit: int = DENSE_GRID_LIMIT) -> Tuple[Spectrum, SweepRecord]:
        grid = FrequencyGrid(samples.dim, band_limit, mesh)
        config = SolveConfig(alpha=alpha, lam=lam, path=path, dense_limit=dense_limit)
        spectrum = SolverService.solve_general(grid, samples, config)
        report = DiagnosticsService.diagnose(spectrum, samples, config, threshold, exclusion_widths)
        logger.info(f"alpha={alpha} M={band_limit}: tau={report.triviality_index:.4f} ({report.classification})")
        return spectrum, SweepRecord(alpha=alpha, band_limit=band_limit, lam=lam, report=report)

    @staticmethod
    def sweep_alpha(samples: SampleSet, alphas: Sequence[float], band_limit: int, mesh: float, lam: float,
                    path='auto', threshold: float = DEFAULT_THRESHOLD,
                    exclusion_widths: float = DEFAULT_EXCLUSION_WIDTHS,
                    dense_limit: int = DENSE_GRID_LIMIT) -> List[SweepRecord]:
        return [
            DiagnosticsService.solve_and_diagnose(samples, alpha, band_limit, mesh, lam, path,
                                                  threshold, exclusion_widths, dense_limit)[1]
            for alpha in alphas
        ]

    @staticmethod
    def sweep_bandlimit(samples: SampleSet, alpha: float, band_limits: Sequence[int], mesh: float, lam: float,
                        path='auto', threshold: float = DEFAULT_THRESHOLD,
                        exclusion_widths: float = DEFAULT_EXCLUSION_WIDTHS,
                        dense_limit: int = DENSE_GRID_LIMIT) -> List[SweepRecord]:
        return [
            DiagnosticsService.solve_and_diagnose(samples, alpha, band_limit, mesh, lam, path,
                                                  threshold, exclusion_widths, dense_limit)[1]
            for band_limit in band_limits
        ]
