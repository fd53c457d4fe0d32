import math

import numpy as np
import pytest
from scipy import optimize

from app.models import FrequencyGrid, SolveConfig, Spectrum
from app.services.diagnostics_service import DiagnosticsService, Window, default_probe_count
from app.services.experiment_service import ONE_D, TWO_D
from app.services.grid_service import GridService
from app.services.solver_service import SolverService
from app.utils.errors import DenseGuardError, EmptyProbeSetError, HalfLevelError, InputError


def solve_1d(samples, alpha, band_limit=ONE_D['band_limit'], lam=ONE_D['lam'], mesh=ONE_D['mesh'], path='auto'):
    grid = FrequencyGrid(1, band_limit, mesh)
    return SolverService.solve_general(grid, samples, SolveConfig(alpha=alpha, lam=lam, path=path))


def test_residual_of_zero_spectrum(two_points):
    report = DiagnosticsService.constraint_residual(Spectrum.zeros(FrequencyGrid(1, 3, 0.1)), two_points)
    np.testing.assert_allclose(report.residuals, -two_points.labels)
    assert report.max_norm == pytest.approx(0.9)


def test_residual_small_near_interpolation(two_points):
    spectrum = solve_1d(two_points, 4.0, band_limit=64, lam=1e-6)
    assert DiagnosticsService.constraint_residual(spectrum, two_points).max_norm < 1e-4


def test_residual_independent_of_solve_path(two_points):
    dense = solve_1d(two_points, 2.0, band_limit=32, lam=0.1, path='dense')
    dual = solve_1d(two_points, 2.0, band_limit=32, lam=0.1, path='dual')
    np.testing.assert_allclose(
        DiagnosticsService.constraint_residual(dense, two_points).residuals,
        DiagnosticsService.constraint_residual(dual, two_points).residuals,
        atol=1e-10,
    )


def test_default_window_and_probe_counts(two_points, twenty_points):
    window = DiagnosticsService.default_window(two_points)
    np.testing.assert_allclose(window.lower, [-1.0])
    np.testing.assert_allclose(window.upper, [1.0])
    flat = DiagnosticsService.default_window(type(two_points)(points=[[0.0, 1.0]], labels=[1.0]))
    np.testing.assert_allclose(flat.lower, [-1.0, 0.0])
    assert default_probe_count(1) == 512
    assert default_probe_count(2) == 4096
    assert default_probe_count(3) == 4096
    assert DiagnosticsService.window_grid(DiagnosticsService.default_window(twenty_points), 4096).shape == (4096, 2)


def test_constant_field_triviality(two_points):
    grid = FrequencyGrid(1, 8, 0.1)
    full = DiagnosticsService.triviality_index(Spectrum.constant(grid, 0.9), two_points)
    assert full.tau == pytest.approx(1.0)
    assert full.classification == 'nontrivial'

    zero = DiagnosticsService.triviality_index(Spectrum.zeros(grid), two_points)
    assert zero.tau == 0.0
    assert zero.classification == 'trivial'


def test_triviality_index_is_clamped(two_points):
    result = DiagnosticsService.triviality_index(Spectrum.constant(FrequencyGrid(1, 8, 0.1), 1.8), two_points)
    assert result.tau == 1.0
    assert result.raw == pytest.approx(2.0)
    assert result.clamped


def test_too_few_probes_rejected(two_points):
    with pytest.raises(InputError):
        DiagnosticsService.triviality_index(Spectrum.zeros(FrequencyGrid(1, 8, 0.1)), two_points, probes=16)


def test_exclusion_swallowing_window(two_points):
    with pytest.raises(EmptyProbeSetError):
        DiagnosticsService.triviality_index(Spectrum.zeros(FrequencyGrid(1, 8, 0.1)), two_points,
                                            exclusion_widths=1e6)


def test_window_must_contain_samples(two_points):
    window = Window(lower=np.array([0.0]), upper=np.array([1.0]))
    with pytest.raises(InputError):
        DiagnosticsService.triviality_index(Spectrum.zeros(FrequencyGrid(1, 8, 0.1)), two_points, window=window)


def test_one_dimensional_classification_by_alpha(two_points):
    records = DiagnosticsService.sweep_alpha(two_points, ONE_D['alphas'], ONE_D['band_limit'],
                                             ONE_D['mesh'], ONE_D['lam'])
    labels = [r.report.classification for r in records]
    assert labels[0] == 'trivial'
    assert labels[-1] == 'nontrivial'
    by_alpha = {r.alpha: r.report for r in records}
    for alpha in (3.0, 10.0):
        assert by_alpha[alpha].triviality_index > by_alpha[alpha].threshold
        assert not by_alpha[alpha].is_trivial
    assert by_alpha[0.5].is_trivial
    # once nontrivial, larger alpha stays nontrivial
    first = labels.index('nontrivial')
    assert all(label == 'nontrivial' for label in labels[first:])
    assert all(len(r.as_row()) == 7 for r in records)


def test_two_dimensional_classification(twenty_points):
    subcritical = DiagnosticsService.solve_and_diagnose(
        twenty_points, 1.0, TWO_D['band_limit'], TWO_D['mesh'], TWO_D['lam'])[1]
    supercritical = DiagnosticsService.solve_and_diagnose(
        twenty_points, 10.0, TWO_D['band_limit'], TWO_D['mesh'], TWO_D['lam'])[1]
    assert subcritical.report.classification == 'trivial'
    assert supercritical.report.classification == 'nontrivial'
    assert supercritical.report.triviality_index > supercritical.report.threshold
    alpha_four = DiagnosticsService.solve_and_diagnose(
        twenty_points, 4.0, TWO_D['band_limit'], TWO_D['mesh'], TWO_D['lam'])[1]
    assert alpha_four.report.triviality_index > alpha_four.report.threshold


def test_dirichlet_kernel_width():
    grid = FrequencyGrid(1, 50, 0.1)
    spectrum = Spectrum(grid, np.full(grid.size, 1.0 / grid.size), hermitian=True)
    size = grid.size
    half_root = optimize.brentq(
        lambda u: math.sin(size * u) / (size * math.sin(u)) - 0.5, 1e-9, math.pi / size, xtol=1e-15,
    )
    expected = 2.0 * half_root / (math.pi * grid.mesh)
    width = DiagnosticsService.spike_width(spectrum, [0.0])
    assert width == pytest.approx(expected, rel=1e-6)
    assert width == pytest.approx(1.207 / (size * grid.mesh), rel=1e-2)


def test_gaussian_width():
    sigma = 0.2

    def gaussian(points):
        return np.exp(-np.sum(points ** 2, axis=-1) / (2 * sigma ** 2))

    width = DiagnosticsService.spike_width(gaussian, [0.0], half_extent=1.0)
    assert width == pytest.approx(2 * sigma * math.sqrt(2 * math.log(2)), rel=1e-6)
    width_2d = DiagnosticsService.spike_width(gaussian, [0.0, 0.0], half_extent=1.0)
    assert width_2d == pytest.approx(width, rel=1e-9)


def test_width_needs_a_crossing():
    with pytest.raises(HalfLevelError):
        DiagnosticsService.spike_width(lambda points: np.ones(points.shape[0]), [0.0], half_extent=1.0)
    with pytest.raises(InputError):
        DiagnosticsService.spike_width(lambda points: np.ones(points.shape[0]), [0.0])


def test_subcritical_spike_is_narrow(two_points):
    narrow = DiagnosticsService.spike_width(solve_1d(two_points, 0.5), [0.5])
    smooth = DiagnosticsService.spike_width(solve_1d(two_points, 10.0), [0.5])
    assert smooth > 5 * narrow
    assert narrow < 0.1 * two_points.min_pairwise_distance()


def test_supercritical_bandlimit_convergence(two_points):
    config = SolveConfig(alpha=10.0, lam=ONE_D['lam'])
    table = DiagnosticsService.convergence_in_bandlimit(two_points, config, (500, 1000), ONE_D['mesh'])
    assert table.difference(500, 1000) < 0.01 * 0.9

    same = DiagnosticsService.convergence_in_bandlimit(two_points, config, (500, 500), ONE_D['mesh'])
    assert same.max_difference == 0.0


def test_two_dimensional_bandlimit_convergence(twenty_points):
    config = SolveConfig(alpha=10.0, lam=TWO_D['lam'])
    table = DiagnosticsService.convergence_in_bandlimit(twenty_points, config, (50, 100), TWO_D['mesh'])
    assert table.difference(50, 100) < 0.05 * 0.5


def test_convergence_requires_ascending_band_limits(two_points):
    with pytest.raises(InputError):
        DiagnosticsService.convergence_in_bandlimit(two_points, SolveConfig(alpha=1.0, lam=0.1), (100, 50), 0.1)


def test_subcritical_norm_collapses(two_points):
    values = []
    for band_limit in (100, 400, 1600):
        spectrum = solve_1d(two_points, 0.5, band_limit=band_limit, lam=1e-4)
        values.append(GridService.sobolev_quadratic_form(spectrum, 0.5))
    assert values[1] < 0.9 * values[0]
    assert values[2] < 0.9 * values[1]


def test_supercritical_norm_stabilizes(two_points):
    coarse, fine = (
        GridService.sobolev_quadratic_form(solve_1d(two_points, 3.0, band_limit=m, lam=1e-4), 3.0)
        for m in (800, 1600)
    )
    assert abs(fine - coarse) / fine < 0.05


def test_bandlimit_sweep_records(two_points):
    records = DiagnosticsService.sweep_bandlimit(two_points, 3.0, (100, 200), 0.1, 0.5)
    assert [r.band_limit for r in records] == [100, 200]
    assert all(r.report.probe_count >= 32 for r in records)


def test_sweeps_honor_the_dense_limit(two_points):
    with pytest.raises(DenseGuardError):
        DiagnosticsService.sweep_alpha(two_points, (2.0,), 100, 0.1, 0.5, path='dense', dense_limit=50)
    with pytest.raises(DenseGuardError):
        DiagnosticsService.sweep_bandlimit(two_points, 2.0, (100,), 0.1, 0.5, path='dense', dense_limit=50)
    records = DiagnosticsService.sweep_alpha(two_points, (2.0,), 100, 0.1, 0.5, path='dense', dense_limit=201)
    assert records[0].band_limit == 100
