"""
Linear frequency-principle gradient flow on a frequency grid.

d phi_J / dt = -gamma_J^2 (1/n) sum_i u(x_i) exp(-2 pi i mesh J.x_i), u = h - y,
integrated by explicit Euler.
"""
import logging
import math
from typing import Optional

import numpy as np

from app.models import (
    EquivalenceReport,
    FrequencyGrid,
    LfpCheckpoint,
    LfpKernel,
    LfpState,
    LfpTrajectory,
    SampleSet,
    SolveConfig,
    SolvePath,
    Spectrum,
    WeightVariant,
    ZeroModePolicy,
)
from app.services.grid_service import GridService
from app.services.solver_service import SolverService, hermitian_part
from app.utils.errors import (
    DimensionMismatchError,
    InputError,
    NotConvergedError,
    NumericalError,
    StabilityError,
)

logger = logging.getLogger(__name__)

ENERGY_RTOL = 1e-12
ENERGY_ATOL = 1e-28
STABLE_FRACTION = 0.9


class LfpService:
    """Kernel construction, Euler integration and the minimum-norm equivalence"""

    @staticmethod
    def relu_gamma_sq(xi_norm, dim: int, moment_r3: float = 1.0, moment_a2r: float = 1.0):
        """m3 / (16 pi^4 |xi|^(d+3)) + m_a2r / (4 pi^2 |xi|^(d+1))"""
        xi = np.asarray(xi_norm, dtype=np.float64)
        if np.any(xi <= 0) or not np.all(np.isfinite(xi)):
            raise InputError("the ReLU rate is singular at zero frequency; |xi| must be positive")
        value = moment_r3 / (16.0 * math.pi ** 4 * xi ** (dim + 3)) + moment_a2r / (4.0 * math.pi ** 2 * xi ** (dim + 1))
        return float(value) if xi.ndim == 0 else value

    @staticmethod
    def build_kernel(grid: FrequencyGrid, moment_r3: float = 1.0, moment_a2r: float = 1.0,
                     zero_mode_policy: ZeroModePolicy = ZeroModePolicy.CAP) -> LfpKernel:
        policy = ZeroModePolicy(zero_mode_policy)
        if moment_r3 < 0 or moment_a2r < 0:
            raise InputError("initialization moments must be non-negative")
        if moment_r3 == 0 and moment_a2r == 0:
            raise InputError("both initialization moments vanish; the ReLU kernel would be identically zero")
        norms = GridService.frequency_norms(grid)
        zero = grid.size // 2
        gamma_sq = np.zeros(grid.size)
        nonzero = np.arange(grid.size) != zero
        gamma_sq[nonzero] = LfpService.relu_gamma_sq(norms[nonzero], grid.dim, moment_r3, moment_a2r)
        if policy is ZeroModePolicy.CAP:
            # nearest nonzero grid frequency has norm mesh
            gamma_sq[zero] = LfpService.relu_gamma_sq(grid.mesh, grid.dim, moment_r3, moment_a2r)
        return LfpKernel(grid=grid, gamma_sq=gamma_sq, moment_r3=moment_r3,
                         moment_a2r=moment_a2r, zero_mode_policy=policy)

    @staticmethod
    def max_stable_dt(kernel: LfpKernel, n: int) -> float:
        """Guard dt * max gamma^2 * G / n < 1"""
        return n / (kernel.grid.size * kernel.max_rate)

    @staticmethod
    def initial_state(grid: FrequencyGrid, samples: SampleSet, spectrum: Optional[Spectrum] = None) -> LfpState:
        spectrum = spectrum or Spectrum.zeros(grid)
        if spectrum.grid != grid:
            raise DimensionMismatchError("initial spectrum lives on a different grid")
        if not spectrum.hermitian:
            spectrum = Spectrum(grid, spectrum.coeffs, hermitian=True)
        matrix = SolverService.assemble_constraint_matrix(grid, samples).entries
        residuals = (matrix @ spectrum.coeffs).real - samples.labels
        return LfpState(spectrum=spectrum, time=0.0, residuals=residuals)

    @staticmethod
    def lfp_evolve(state: LfpState, kernel: LfpKernel, samples: SampleSet, dt: float, steps: int,
                   checkpoint_every: Optional[int] = None,
                   until_residual: Optional[float] = None) -> LfpTrajectory:
        """
        Explicit Euler integration with a per-step energy descent check

        Args:
            state (LfpState): starting state
            kernel (LfpKernel): per-index rates
            samples (SampleSet): points and labels
            dt (float): time step, must satisfy the stability guard
            steps (int): maximum number of steps
            checkpoint_every (int): steps between stored states
            until_residual (float): stop once max |u| drops below this

        Returns:
            LfpTrajectory: stored states and checkpoints
        """
        grid = kernel.grid
        if state.spectrum.grid != grid:
            raise DimensionMismatchError("state and kernel live on different grids")
        if steps < 0 or int(steps) != steps:
            raise InputError(f"steps must be a non-negative integer, got {steps!r}")
        max_dt = LfpService.max_stable_dt(kernel, samples.n)
        if not (0 < dt < max_dt):
            logger.error(f"LFP step {dt} rejected, guard allows {max_dt}")
            raise StabilityError(dt, max_dt)
        checkpoint_every = checkpoint_every or max(1, steps // 100)

        matrix = SolverService.assemble_constraint_matrix(grid, samples).entries
        adjoint = matrix.conj().T / samples.n
        rates = kernel.gamma_sq
        phi = state.spectrum.coeffs.copy()
        u = (matrix @ phi).real - samples.labels
        energy = float(np.mean(u * u))
        time = state.time

        states = [LfpState(Spectrum(grid, phi, hermitian=True), time, u)]
        checkpoints = [LfpCheckpoint(time, float(np.max(np.abs(u))), energy)]
        taken = 0
        for step in range(1, int(steps) + 1):
            if until_residual is not None and np.max(np.abs(u)) < until_residual:
                break
            phi = phi - dt * rates * (adjoint @ u)
            phi = hermitian_part(phi, "LFP step")
            u = (matrix @ phi).real - samples.labels
            new_energy = float(np.mean(u * u))
            if new_energy > energy * (1.0 + ENERGY_RTOL) + ENERGY_ATOL:
                raise NumericalError(f"residual energy increased at step {step}: {energy:.6e} -> {new_energy:.6e}")
            energy = new_energy
            time = state.time + step * dt
            taken = step
            if step % checkpoint_every == 0:
                states.append(LfpState(Spectrum(grid, phi, hermitian=True), time, u))
                checkpoints.append(LfpCheckpoint(time, float(np.max(np.abs(u))), energy))
                logger.debug(f"LFP t={time:.6g} max|u|={checkpoints[-1].max_residual:.3e} energy={energy:.3e}")

        if taken % checkpoint_every != 0 or taken == 0:
            states.append(LfpState(Spectrum(grid, phi, hermitian=True), time, u))
            checkpoints.append(LfpCheckpoint(time, float(np.max(np.abs(u))), energy))
        logger.info(f"LFP ran {taken} steps to t={time:.6g}, max residual {checkpoints[-1].max_residual:.3e}")
        return LfpTrajectory(states=tuple(states), checkpoints=tuple(checkpoints), steps=taken, dt=dt)

    @staticmethod
    def minimum_norm_reference(samples: SampleSet, kernel: LfpKernel,
                               initial: Optional[Spectrum] = None) -> Spectrum:
        """Minimizer of sum gamma^-2 |phi - phi_ini|^2 subject to exact interpolation"""
        with np.errstate(divide='ignore'):
            weights = np.where(kernel.gamma_sq > 0, 1.0 / kernel.gamma_sq, np.inf)
        config = SolveConfig(lam=0.0, weight_variant=WeightVariant.CUSTOM,
                             path=SolvePath.DUAL, custom_weights=weights)
        return SolverService.solve_general(kernel.grid, samples, config, offset=initial)

    @staticmethod
    def lfp_equivalence_check(samples: SampleSet, kernel: LfpKernel, grid: Optional[FrequencyGrid] = None,
                              tol: float = 1e-6, dt: Optional[float] = None, max_steps: int = 1_000_000,
                              initial: Optional[Spectrum] = None) -> EquivalenceReport:
        """Run the flow to residual < tol/10 and compare with the weighted minimum-norm solve"""
        grid = grid or kernel.grid
        if grid != kernel.grid:
            raise DimensionMismatchError("kernel was built on a different grid")
        dt = dt or STABLE_FRACTION * LfpService.max_stable_dt(kernel, samples.n)
        state = LfpService.initial_state(grid, samples, initial)
        trajectory = LfpService.lfp_evolve(state, kernel, samples, dt, max_steps,
                                           checkpoint_every=max_steps, until_residual=tol / 10.0)
        final = trajectory.final
        if final.max_residual >= tol / 10.0:
            raise NotConvergedError(
                f"LFP residual {final.max_residual:.3e} still above {tol / 10.0:.3e} after {trajectory.steps} steps"
            )
        reference = LfpService.minimum_norm_reference(samples, kernel, initial)
        difference = float(np.max(np.abs(final.spectrum.coeffs - reference.coeffs)))
        logger.info(f"LFP equivalence: max coefficient difference {difference:.3e} (tol {tol:.1e})")
        return EquivalenceReport(max_coefficient_difference=difference, tolerance=tol,
                                 final_residual=final.max_residual, steps=trajectory.steps)
