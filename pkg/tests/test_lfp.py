import math

import numpy as np
import pytest

from app.models import FrequencyGrid, LfpKernel, SampleSet, Spectrum, ZeroModePolicy
from app.services.experiment_service import LFP
from app.services.lfp_service import STABLE_FRACTION, LfpService
from app.utils.errors import InputError, NonHermitianError, NotConvergedError, StabilityError


@pytest.fixture
def lfp_grid():
    return FrequencyGrid(1, LFP['band_limit'], LFP['mesh'])


def origin_sample(label=1.0):
    return SampleSet(points=[[0.0]], labels=[label])


def test_relu_rate_values():
    expected = 1 / (16 * math.pi ** 4) + 1 / (4 * math.pi ** 2)
    assert LfpService.relu_gamma_sq(1.0, 1) == pytest.approx(expected, rel=1e-14)
    assert LfpService.relu_gamma_sq(1.0, 1) == pytest.approx(0.025975, rel=1e-4)


def test_relu_rate_homogeneity():
    for xi in (0.1, 0.7, 3.0):
        assert LfpService.relu_gamma_sq(2 * xi, 1, moment_a2r=0.0) == pytest.approx(
            LfpService.relu_gamma_sq(xi, 1, moment_a2r=0.0) / 16, rel=1e-13
        )


def test_relu_rate_rejects_zero_frequency():
    with pytest.raises(InputError):
        LfpService.relu_gamma_sq(0.0, 1)


def test_kernel_zero_mode_policies(lfp_grid):
    zero = lfp_grid.size // 2
    capped = LfpService.build_kernel(lfp_grid)
    assert capped.gamma_sq[zero] == pytest.approx(capped.gamma_sq[zero + 1])
    assert capped.retained.all()

    excluded = LfpService.build_kernel(lfp_grid, zero_mode_policy=ZeroModePolicy.EXCLUDE)
    assert excluded.gamma_sq[zero] == 0.0
    assert not excluded.retained[zero]
    assert np.array_equal(excluded.gamma_sq, excluded.gamma_sq[::-1])


def test_kernel_needs_a_moment(lfp_grid):
    with pytest.raises(InputError):
        LfpService.build_kernel(lfp_grid, moment_r3=0.0, moment_a2r=0.0)


def test_zero_labels_are_a_fixed_point(lfp_grid):
    samples = SampleSet(points=[[-0.5], [0.5]], labels=[0.0, 0.0])
    kernel = LfpService.build_kernel(lfp_grid)
    dt = 0.5 * LfpService.max_stable_dt(kernel, samples.n)
    trajectory = LfpService.lfp_evolve(LfpService.initial_state(lfp_grid, samples), kernel, samples, dt, 50)
    assert np.all(trajectory.final.spectrum.coeffs == 0)
    assert trajectory.final.energy == 0.0


def test_stability_guard(lfp_grid, two_points):
    kernel = LfpService.build_kernel(lfp_grid)
    max_dt = LfpService.max_stable_dt(kernel, two_points.n)
    assert max_dt == pytest.approx(2 / (lfp_grid.size * kernel.max_rate))
    with pytest.raises(StabilityError) as info:
        LfpService.lfp_evolve(LfpService.initial_state(lfp_grid, two_points), kernel, two_points, max_dt, 10)
    assert info.value.max_dt == pytest.approx(max_dt)


def test_uneven_rates_break_the_flow(lfp_grid, two_points):
    kernel = LfpService.build_kernel(lfp_grid)
    rates = kernel.gamma_sq.copy()
    rates[lfp_grid.size // 2 + 1] *= 1.5
    uneven = LfpKernel(lfp_grid, rates)
    dt = STABLE_FRACTION * LfpService.max_stable_dt(uneven, two_points.n)
    with pytest.raises(NonHermitianError):
        LfpService.lfp_evolve(LfpService.initial_state(lfp_grid, two_points), uneven, two_points, dt, 5)


def test_single_point_flow_keeps_kernel_shape():
    grid = FrequencyGrid(1, 16, 0.1)
    samples = origin_sample()
    kernel = LfpService.build_kernel(grid)
    dt = STABLE_FRACTION * LfpService.max_stable_dt(kernel, 1)
    trajectory = LfpService.lfp_evolve(LfpService.initial_state(grid, samples), kernel, samples, dt, 200,
                                       checkpoint_every=20)
    final = trajectory.final.spectrum.coeffs.real
    for state in trajectory.states[1:]:
        ratio = state.spectrum.coeffs.real / final
        assert np.max(ratio) - np.min(ratio) < 1e-10
    positive = final[grid.band_limit + 1:]
    assert np.all(np.diff(positive) < 0)


def test_energy_never_increases(lfp_grid, two_points):
    kernel = LfpService.build_kernel(lfp_grid)
    dt = STABLE_FRACTION * LfpService.max_stable_dt(kernel, two_points.n)
    trajectory = LfpService.lfp_evolve(LfpService.initial_state(lfp_grid, two_points), kernel, two_points,
                                       dt, 2000, checkpoint_every=100)
    energies = [c.energy for c in trajectory.checkpoints]
    assert all(b <= a for a, b in zip(energies, energies[1:]))
    assert len(trajectory.checkpoints) == 21


def test_two_point_flow_interpolates(lfp_grid, two_points):
    kernel = LfpService.build_kernel(lfp_grid)
    dt = STABLE_FRACTION * LfpService.max_stable_dt(kernel, two_points.n)
    trajectory = LfpService.lfp_evolve(LfpService.initial_state(lfp_grid, two_points), kernel, two_points,
                                       dt, LFP['steps'], until_residual=1e-7)
    assert trajectory.final.max_residual < 1e-6
    assert trajectory.steps < LFP['steps']


def test_single_point_equivalence_closed_form():
    grid = FrequencyGrid(1, 16, 0.1)
    kernel = LfpService.build_kernel(grid)
    expected = kernel.gamma_sq / kernel.gamma_sq.sum()
    reference = LfpService.minimum_norm_reference(origin_sample(), kernel)
    np.testing.assert_allclose(reference.coeffs, expected, atol=1e-12)
    report = LfpService.lfp_equivalence_check(origin_sample(), kernel, tol=1e-8)
    assert report.passed


def test_two_point_equivalence(lfp_grid, two_points):
    report = LfpService.lfp_equivalence_check(two_points, LfpService.build_kernel(lfp_grid), tol=LFP['tol'])
    assert report.passed
    assert report.max_coefficient_difference < 1e-6
    assert report.final_residual < 1e-7


def test_equivalence_with_excluded_zero_mode(lfp_grid, two_points):
    kernel = LfpService.build_kernel(lfp_grid, zero_mode_policy=ZeroModePolicy.EXCLUDE)
    report = LfpService.lfp_equivalence_check(two_points, kernel, tol=LFP['tol'])
    assert report.passed


def test_equivalence_from_nonzero_start(lfp_grid, two_points):
    initial = Spectrum.constant(lfp_grid, 0.3)
    report = LfpService.lfp_equivalence_check(two_points, LfpService.build_kernel(lfp_grid),
                                              tol=LFP['tol'], initial=initial)
    assert report.passed


def test_equivalence_with_zero_labels(lfp_grid):
    samples = SampleSet(points=[[-0.5], [0.5]], labels=[0.0, 0.0])
    report = LfpService.lfp_equivalence_check(samples, LfpService.build_kernel(lfp_grid))
    assert report.max_coefficient_difference == 0.0
    assert report.steps == 0


def test_equivalence_reports_non_convergence(lfp_grid, two_points):
    with pytest.raises(NotConvergedError):
        LfpService.lfp_equivalence_check(two_points, LfpService.build_kernel(lfp_grid), max_steps=10)
