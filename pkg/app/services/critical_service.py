"""
Gaussian Sobolev norms, radial moments and the sigma -> 0 limit sweep.
"""
import logging
import math
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, special

from app.extensions import executor
from app.models import (
    FrequencyGrid,
    GaussianProbe,
    LimitClassification,
    NormVariant,
    RbfDecayRow,
    RbfDecayStudy,
    SampleSet,
    Verdict,
)
from app.services.grid_service import GridService
from app.services.solver_service import SolverService
from app.utils.errors import BandLimitError, InputError, QuadratureError

logger = logging.getLogger(__name__)

QUADRATURE_RTOL = 1e-10
QUADRATURE_ACCEPT = 1e-8
SLOPE_BAND = 0.2
LIMIT_SPREAD = 0.05
# Gaussian tail below 1e-8 once the band reaches this many 1/(2 pi sigma)
BAND_WIDTHS = 6.0


def _radial_cutoff(k: float) -> float:
    return 3.0 + math.sqrt(max(k, 0.0)) / math.pi


def _checked_quad(func, lower, upper, label, **kwargs) -> float:
    result = integrate.quad(func, lower, upper, epsabs=0.0, epsrel=kwargs.pop('epsrel', QUADRATURE_RTOL),
                            limit=kwargs.pop('limit', 200), full_output=1, **kwargs)
    value, error = result[0], result[1]
    if len(result) > 3 or error > QUADRATURE_ACCEPT * abs(value):
        logger.error(f"Quadrature for {label} failed: value={value:.6e} error={error:.3e}")
        raise QuadratureError(value, error, label if len(result) <= 3 else f"{label}: {result[3]}")
    logger.debug(f"Quadrature {label}: {value:.12e} (error estimate {error:.2e})")
    return value


class CriticalService:
    """Closed forms and quadrature oracles around the critical exponent alpha = d"""

    @staticmethod
    def sphere_surface_area(dim: int) -> float:
        """omega_d = 2 pi^(d/2) / Gamma(d/2)"""
        if int(dim) != dim or dim < 1:
            raise InputError(f"dimension must be a positive integer, got {dim!r}")
        return 2.0 * math.pi ** (dim / 2.0) / special.gamma(dim / 2.0)

    @staticmethod
    def gaussian_radial_moment(k: float) -> float:
        """int_0^inf r^k exp(-4 pi^2 r^2) dr = Gamma((k+1)/2) (4 pi^2)^(-(k+1)/2) / 2"""
        if not (k >= 0 and math.isfinite(k)):
            raise InputError(f"moment order must be non-negative, got {k!r}")
        return 0.5 * special.gamma((k + 1.0) / 2.0) * (4.0 * math.pi ** 2) ** (-(k + 1.0) / 2.0)

    @staticmethod
    def radial_moment_quadrature(k: float) -> float:
        """Same moment by adaptive quadrature with the r^k factor as an algebraic weight"""
        if not (k >= 0 and math.isfinite(k)):
            raise InputError(f"moment order must be non-negative, got {k!r}")
        return _checked_quad(
            lambda r: math.exp(-4.0 * math.pi ** 2 * r * r), 0.0, _radial_cutoff(k),
            f"radial moment k={k}", weight='alg', wvar=(k, 0.0), epsrel=1e-12,
        )

    @staticmethod
    def factorial_radial_moment(k: int) -> float:
        """Factorial form for integer k; (-1)!! is taken as 1"""
        if int(k) != k or k < 0:
            raise InputError(f"factorial form needs a non-negative integer order, got {k!r}")
        k = int(k)
        two_pi = 2.0 * math.pi
        if k % 2 == 1:
            return 0.5 * float(special.factorial((k - 1) // 2, exact=True)) * two_pi ** (-(k + 1))
        double = 1 if k == 0 else int(special.factorial2(k - 1, exact=True))
        return 0.5 * double * math.sqrt(math.pi) * 2.0 ** (-k / 2.0) * two_pi ** (-(k + 1))

    @staticmethod
    def gaussian_sobolev_norm(sigma: float, alpha: float, dim: int,
                              variant: NormVariant = NormVariant.BRACKET) -> float:
        """
        Weighted L2 norm of the Gaussian profile psi_sigma

        Args:
            sigma (float): Gaussian width
            alpha (float): frequency weight exponent
            dim (int): dimension
            variant (NormVariant): |xi|^alpha (homogeneous) or <xi>^alpha (bracket)

        Returns:
            float: (2 pi)^d sigma^(d-alpha) omega_d times the radial integral
        """
        variant = NormVariant(variant)
        if not (sigma > 0 and math.isfinite(sigma)):
            raise InputError(f"sigma must be positive, got {sigma!r}")
        if not (alpha >= 0 and math.isfinite(alpha)):
            raise InputError(f"alpha must be non-negative, got {alpha!r}")
        prefactor = (2.0 * math.pi) ** dim * sigma ** (dim - alpha) * CriticalService.sphere_surface_area(dim)

        if variant is NormVariant.HOMOGENEOUS:
            order = alpha + dim - 1
            closed = CriticalService.gaussian_radial_moment(order)
            numeric = CriticalService.radial_moment_quadrature(order)
            if abs(numeric - closed) > QUADRATURE_ACCEPT * closed:
                raise QuadratureError(numeric, abs(numeric - closed), f"moment k={order} disagrees with its closed form")
            return prefactor * closed

        s2 = sigma * sigma
        radial = _checked_quad(
            lambda r: r ** (dim - 1) * (s2 + r * r) ** (alpha / 2.0) * math.exp(-4.0 * math.pi ** 2 * r * r),
            0.0, _radial_cutoff(alpha + dim), f"bracket norm sigma={sigma} alpha={alpha} d={dim}",
            points=(sigma,),
        )
        return prefactor * radial

    @staticmethod
    def critical_constant(dim: int) -> float:
        """C_d = (d-1)! (2 pi)^-d omega_d / 2"""
        return 0.5 * math.factorial(dim - 1) * (2.0 * math.pi) ** (-dim) * CriticalService.sphere_surface_area(dim)

    @staticmethod
    def gaussian_probe(sigma: float, dim: int) -> GaussianProbe:
        return GaussianProbe(sigma=sigma, dim=dim)

    @staticmethod
    def classify_limit(sigmas: Sequence[float], values: Sequence[float]) -> LimitClassification:
        """Least-squares log-log slope on the three smallest sigmas decides the verdict"""
        sigmas = [float(s) for s in sigmas]
        values = [float(v) for v in values]
        evidence = tuple(zip(sigmas, values))
        tail_s = np.array(sigmas[-3:])
        tail_v = np.array(values[-3:])
        if np.any(tail_v <= 0):
            return LimitClassification(Verdict.WITHHELD, evidence, math.nan, diagnostic='non-positive values in the tail')
        slope = float(np.polyfit(np.log(tail_s), np.log(tail_v), 1)[0])

        steps = np.diff(tail_v)
        noise = 1e-12 * float(np.max(tail_v))
        if np.any(steps > noise) and np.any(steps < -noise):
            return LimitClassification(
                Verdict.WITHHELD, evidence, slope,
                diagnostic=f"tail is not monotone: {', '.join(f'{v:.6g}' for v in tail_v)}",
            )
        if slope > SLOPE_BAND:
            return LimitClassification(Verdict.TO_ZERO, evidence, slope)
        if slope < -SLOPE_BAND:
            return LimitClassification(Verdict.DIVERGES, evidence, slope)
        mean = float(np.mean(tail_v))
        spread = float((np.max(tail_v) - np.min(tail_v)) / mean)
        if spread < LIMIT_SPREAD:
            return LimitClassification(Verdict.FINITE_LIMIT, evidence, slope, limit_value=mean)
        return LimitClassification(
            Verdict.WITHHELD, evidence, slope,
            diagnostic=f"flat slope {slope:.3f} but relative spread {spread:.3%} of the last three values",
        )

    @staticmethod
    def limit_sweep(dim: int, alpha: float, sigmas: Sequence[float],
                    variant: NormVariant = NormVariant.BRACKET) -> LimitClassification:
        sigmas = [float(s) for s in sigmas]
        if len(sigmas) < 4:
            raise InputError(f"limit sweep needs at least 4 sigma values, got {len(sigmas)}")
        if any(b >= a for a, b in zip(sigmas, sigmas[1:])):
            raise InputError("sigma values must be strictly descending")
        if sigmas[-1] <= 0 or sigmas[0] / sigmas[-1] < 100.0:
            raise InputError("sigma values must be positive and span at least two decades")
        values = [CriticalService.gaussian_sobolev_norm(s, alpha, dim, variant) for s in sigmas]
        result = CriticalService.classify_limit(sigmas, values)
        logger.info(f"Limit sweep d={dim} alpha={alpha} ({NormVariant(variant).value}): "
                    f"{result.verdict.value} slope={result.slope:.4f}")
        return result

    @staticmethod
    def default_decay_grid(dim: int, sigma_min: float, mesh: float = 0.1) -> FrequencyGrid:
        band_limit = math.ceil(BAND_WIDTHS / (2.0 * math.pi * sigma_min * mesh)) + 8
        return FrequencyGrid(dim, band_limit, mesh)

    @staticmethod
    def rbf_norm_decay_study(samples: SampleSet, alpha: float, sigmas: Sequence[float],
                             grid: Optional[FrequencyGrid] = None) -> RbfDecayStudy:
        """
        Q(sigma) = sum_J <xi_J>^alpha |phi_sigma(xi_J)|^2 mesh^d for the Gaussian RBF
        interpolant at each width; 1-D also integrates by adaptive quadrature
        """
        sigmas = [float(s) for s in sigmas]
        if not sigmas:
            raise InputError("rbf decay study needs at least one sigma")
        sigma_min = min(sigmas)
        if grid is None:
            grid = CriticalService.default_decay_grid(samples.dim, sigma_min)
        required = BAND_WIDTHS / (2.0 * math.pi * sigma_min)
        if grid.band < required:
            raise BandLimitError(grid.band, required)
        if grid.dim != samples.dim:
            raise InputError(f"grid dimension {grid.dim} does not match samples dimension {samples.dim}")

        frequencies = GridService.index_array(grid) * grid.mesh
        weights = GridService.grid_weights(grid, alpha)
        measure = grid.mesh ** grid.dim
        rows = []
        previous = None
        for sigma in sigmas:
            interpolant = SolverService.gaussian_rbf_interpolant(samples, sigma)
            values = executor.map_rows(interpolant.spectrum_at, frequencies)
            q_riemann = float(np.dot(weights, np.abs(values) ** 2) * measure)

            q_quadrature, status = None, ''
            if samples.dim == 1:
                half_range = 1.2 * BAND_WIDTHS / (2.0 * math.pi * sigma)
                try:
                    q_quadrature = _checked_quad(
                        lambda xi: (1.0 + xi * xi) ** (alpha / 2.0) * abs(interpolant.spectrum_at([[xi]])[0]) ** 2,
                        -half_range, half_range, f"rbf norm sigma={sigma}", limit=2000, epsrel=1e-9,
                    )
                    status = 'ok'
                except QuadratureError as e:
                    # the Riemann value still stands; the row is flagged
                    logger.warning(f"rbf quadrature dropped at sigma={sigma}: {e}")
                    status = 'failed'

            local_slope = None
            if previous is not None:
                local_slope = math.log(q_riemann / previous[1]) / math.log(sigma / previous[0])
            rows.append(RbfDecayRow(sigma, q_riemann, q_quadrature, local_slope, status))
            previous = (sigma, q_riemann)

        tail_slope = rows[-1].local_slope if len(rows) > 1 else math.nan
        logger.info(f"rbf decay alpha={alpha}: tail slope {tail_slope:.4f} over {len(rows)} widths")
        return RbfDecayStudy(rows=tuple(rows), tail_slope=tail_slope, grid=grid)
