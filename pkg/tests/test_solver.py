import math

import numpy as np
import pytest

from app.models import FrequencyGrid, SampleSet, SolveConfig, SolvePath, Spectrum, WeightVariant
from app.services.grid_service import GridService
from app.services.solver_service import SolverService
from app.utils.errors import (
    DenseGuardError,
    DiagonalDominanceError,
    DimensionMismatchError,
    DuplicatePointError,
    InputError,
    NonHermitianError,
    SingularSystemError,
)
from tests.conftest import random_samples


def single_origin_sample(label=2.0):
    return SampleSet(points=[[0.0]], labels=[label])


def test_constraint_matrix_entries():
    grid = FrequencyGrid(1, 1, 1.0)
    matrix = SolverService.assemble_constraint_matrix(grid, SampleSet(points=[[0.0], [0.5]], labels=[1, 1]))
    np.testing.assert_allclose(matrix.entries[0], [1, 1, 1], atol=1e-15)
    np.testing.assert_allclose(matrix.entries[1], [-1, 1, -1], atol=1e-15)


def test_constraint_matrix_unit_modulus(rng):
    grid = FrequencyGrid(2, 4, 0.3)
    matrix = SolverService.assemble_constraint_matrix(grid, random_samples(rng, 7, 2, -5, 5))
    assert matrix.shape == (7, 81)
    np.testing.assert_allclose(np.abs(matrix.entries), 1.0, atol=1e-14)


def test_constraint_matrix_dimension_mismatch(rng):
    with pytest.raises(DimensionMismatchError):
        SolverService.assemble_constraint_matrix(FrequencyGrid(2, 2, 0.1), random_samples(rng, 3, 1))


def test_duplicate_points_rejected():
    with pytest.raises(DuplicatePointError):
        SampleSet(points=[[0.1], [0.1]], labels=[1.0, 2.0])


def test_single_point_exact_interpolation():
    grid = FrequencyGrid(1, 1, 0.5)
    spectrum = SolverService.solve_general(grid, single_origin_sample(), SolveConfig(alpha=0.0, lam=0.0, path='dual'))
    np.testing.assert_allclose(spectrum.coeffs, [2 / 3, 2 / 3, 2 / 3], atol=1e-14)
    assert GridService.evaluate_field(spectrum, 0.0) == pytest.approx(2.0, abs=1e-13)


def test_single_point_with_penalty():
    grid = FrequencyGrid(1, 1, 0.5)
    spectrum = SolverService.solve_general(grid, single_origin_sample(), SolveConfig(alpha=0.0, lam=3.0, path='dual'))
    np.testing.assert_allclose(spectrum.coeffs, [1 / 3, 1 / 3, 1 / 3], atol=1e-14)
    assert GridService.evaluate_field(spectrum, 0.0) == pytest.approx(1.0, abs=1e-13)


def test_dense_dual_svd_agree(rng):
    grid = FrequencyGrid(1, 8, 0.2)
    samples = random_samples(rng, 3, 1)
    solutions = [
        SolverService.solve_general(grid, samples, SolveConfig(alpha=4.0, lam=0.5, path=path)).coeffs
        for path in ('dense', 'dual', 'svd')
    ]
    np.testing.assert_allclose(solutions[0], solutions[1], rtol=0, atol=1e-10)
    np.testing.assert_allclose(solutions[2], solutions[1], rtol=0, atol=1e-10)


def test_dense_dual_agree_on_random_instances(rng):
    for _ in range(10):
        dim = int(rng.integers(1, 3))
        grid = FrequencyGrid(dim, int(rng.integers(2, 17)), float(rng.uniform(0.05, 0.5)))
        samples = random_samples(rng, int(rng.integers(1, 6)), dim, -2, 2)
        config = dict(alpha=float(rng.uniform(0, 4)), lam=float(rng.uniform(0.1, 2)))
        dense = SolverService.solve_general(grid, samples, SolveConfig(path='dense', **config))
        dual = SolverService.solve_general(grid, samples, SolveConfig(path='dual', **config))
        assert np.max(np.abs(dense.coeffs - dual.coeffs)) < 1e-10


def test_solution_is_hermitian(rng):
    grid = FrequencyGrid(2, 5, 0.25)
    spectrum = SolverService.solve_general(grid, random_samples(rng, 4, 2), SolveConfig(alpha=2.0, lam=0.1))
    assert spectrum.hermitian_deviation() < 1e-12


def test_auto_path_choice(rng):
    grid = FrequencyGrid(1, 1, 0.5)
    assert SolverService.resolve_path(grid, random_samples(rng, 2, 1), SolveConfig()) is SolvePath.DUAL
    assert SolverService.resolve_path(grid, random_samples(rng, 4, 1), SolveConfig()) is SolvePath.DENSE


def test_tikhonov_monotonicity(two_points):
    grid = FrequencyGrid(1, 40, 0.1)
    terms = []
    for lam in (1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0):
        config = SolveConfig(alpha=2.0, lam=lam)
        spectrum = SolverService.solve_general(grid, two_points, config)
        terms.append(SolverService.objective_terms(grid, two_points, spectrum, config))
    for earlier, later in zip(terms, terms[1:]):
        assert later.penalty <= earlier.penalty * (1 + 1e-10)
        assert later.misfit >= earlier.misfit * (1 - 1e-10)


def test_nested_grids_do_not_increase_objective(two_points):
    config = SolveConfig(alpha=1.0, lam=0.1)
    totals = []
    for band_limit in (4, 8, 16, 32):
        grid = FrequencyGrid(1, band_limit, 0.1)
        spectrum = SolverService.solve_general(grid, two_points, config)
        totals.append(SolverService.objective_terms(grid, two_points, spectrum, config).total)
    for coarse, fine in zip(totals, totals[1:]):
        assert fine <= coarse * (1 + 1e-12)


def test_residual_vanishes_as_lambda_decreases(two_points):
    grid = FrequencyGrid(1, 64, 0.1)
    matrix = SolverService.assemble_constraint_matrix(grid, two_points).entries
    residuals = []
    for lam in (1.0, 1e-2, 1e-4, 1e-6):
        spectrum = SolverService.solve_general(grid, two_points, SolveConfig(alpha=4.0, lam=lam))
        residuals.append(np.max(np.abs((matrix @ spectrum.coeffs).real - two_points.labels)))
    assert all(b < a for a, b in zip(residuals, residuals[1:]))
    assert residuals[-1] < 1e-4


def test_offset_already_interpolating_is_kept():
    grid = FrequencyGrid(1, 3, 0.2)
    samples = SampleSet(points=[[0.0], [1.0]], labels=[0.4, 0.4])
    offset = Spectrum.constant(grid, 0.4)
    spectrum = SolverService.solve_general(grid, samples, SolveConfig(alpha=1.0, lam=0.0, path='dual'), offset=offset)
    np.testing.assert_allclose(spectrum.coeffs, offset.coeffs, atol=1e-13)


def test_asymmetric_offset_is_not_averaged_away():
    grid = FrequencyGrid(1, 3, 0.2)
    samples = SampleSet(points=[[0.0], [1.0]], labels=[0.4, 0.4])
    coeffs = np.zeros(grid.size, dtype=complex)
    coeffs[4] = 0.3
    offset = Spectrum(grid, coeffs)
    with pytest.raises(NonHermitianError) as info:
        SolverService.solve_general(grid, samples, SolveConfig(alpha=1.0, lam=0.1, path='dual'), offset=offset)
    assert info.value.imag_magnitude == pytest.approx(0.3)


def test_custom_infinite_weight_excludes_index():
    grid = FrequencyGrid(1, 2, 0.5)
    weights = np.array([1.0, 1.0, np.inf, 1.0, 1.0])
    config = SolveConfig(weight_variant=WeightVariant.CUSTOM, custom_weights=weights, lam=0.0, path='dual')
    spectrum = SolverService.solve_general(grid, single_origin_sample(1.0), config)
    assert spectrum.coeffs[2] == 0
    assert GridService.evaluate_field(spectrum, 0.0) == pytest.approx(1.0, abs=1e-13)


def test_uneven_custom_weights_rejected():
    grid = FrequencyGrid(1, 1, 0.5)
    config = SolveConfig(weight_variant=WeightVariant.CUSTOM, custom_weights=[1.0, 2.0, 3.0], lam=1.0)
    with pytest.raises(InputError):
        SolverService.solve_general(grid, single_origin_sample(), config)


def test_dense_guard(twenty_points):
    grid = FrequencyGrid(2, 40, 0.1)
    with pytest.raises(DenseGuardError) as info:
        SolverService.solve_general(grid, twenty_points, SolveConfig(alpha=1.0, lam=0.1, path='dense'))
    assert info.value.grid_size == 6561
    assert 'dual' in str(info.value)


def test_dense_requires_positive_lambda(two_points):
    with pytest.raises(InputError):
        SolverService.solve_general(FrequencyGrid(1, 4, 0.1), two_points, SolveConfig(alpha=1.0, lam=0.0, path='dense'))


def test_negative_lambda_rejected():
    with pytest.raises(InputError):
        SolveConfig(alpha=1.0, lam=-1.0)


def test_rank_deficient_dual_system_is_singular(rng):
    grid = FrequencyGrid(1, 1, 0.1)
    samples = SampleSet(points=np.linspace(-1, 1, 5).reshape(-1, 1), labels=rng.normal(size=5))
    with pytest.raises(SingularSystemError) as info:
        SolverService.solve_general(grid, samples, SolveConfig(alpha=1.0, lam=0.0, path='dual'))
    assert 'dual' in info.value.factorization


def test_ridge_svd_examples(rng):
    assert SolverService.ridge_svd_solve([[1.0]], [1.0])[0] == pytest.approx(0.5)
    np.testing.assert_array_equal(SolverService.ridge_svd_solve(rng.normal(size=(2, 4)), np.zeros(2)), 0)

    a_tilde = rng.normal(size=(1, 10)) + 1j * rng.normal(size=(1, 10))
    b = np.array([0.7])
    direct = np.linalg.solve(a_tilde.conj().T @ a_tilde + np.eye(10), a_tilde.conj().T @ b)
    np.testing.assert_allclose(SolverService.ridge_svd_solve(a_tilde, b), direct, atol=1e-12)


def test_ridge_svd_rejects_non_finite():
    with pytest.raises(InputError):
        SolverService.ridge_svd_solve([[np.nan, 1.0]], [1.0])


@pytest.mark.parametrize('lam, expected', [(0.0, 2.0), (0.7, 1.0)])
def test_single_point_closed_form(lam, expected):
    solution = SolverService.solve_single_point_analytic(2, 1.0, 2.0, lam)
    assert solution.z_squared == pytest.approx(0.7)
    assert solution.value_at_origin == pytest.approx(expected, abs=1e-12)
    assert solution(0.0) == pytest.approx(expected, abs=1e-12)
    assert GridService.evaluate_field(solution.spectrum, 0.0) == pytest.approx(expected, abs=1e-12)


def test_single_point_against_direct_summation(rng):
    mesh, alpha, lam = 0.01, 3.0, 1.0
    solution = SolverService.solve_single_point_analytic(10_000, mesh, alpha, lam)
    x = rng.uniform(-2, 2, size=100)
    j = np.arange(1, 10_001)
    inverse = (1.0 + (j * mesh) ** 2) ** (-alpha / 2)
    z_squared = inverse.sum()
    expected = np.array([2.0 * np.sum(inverse * np.cos(2 * math.pi * mesh * j * point)) for point in x])
    expected /= z_squared + lam
    np.testing.assert_allclose(solution(x), expected, rtol=1e-8, atol=1e-10)
    assert solution.value_at_origin == pytest.approx(2 * z_squared / (z_squared + lam), rel=1e-12)


def test_single_point_density_is_even():
    solution = SolverService.solve_single_point_analytic(50, 0.1, 1.0, 0.5)
    assert np.array_equal(solution.density, solution.density[::-1])
    assert solution.density[50] == 0


def test_gaussian_rbf_single_point():
    interpolant = SolverService.gaussian_rbf_interpolant(SampleSet(points=[[0.3]], labels=[1.7]), 0.2)
    np.testing.assert_allclose(interpolant.coefficients, [1.7])


def test_gaussian_rbf_two_points():
    samples = SampleSet(points=[[0.0], [1.0]], labels=[1.0, 2.0])
    interpolant = SolverService.gaussian_rbf_interpolant(samples, 0.1)
    np.testing.assert_allclose(interpolant.coefficients, [1.0, 2.0], atol=1e-15)
    np.testing.assert_allclose(interpolant([[0.0], [1.0]]), [1.0, 2.0], atol=1e-12)


def test_gaussian_rbf_interpolates_random_points(rng):
    samples = random_samples(rng, 5, 2, -3, 3)
    interpolant = SolverService.gaussian_rbf_interpolant(samples, 0.1 * samples.min_pairwise_distance())
    np.testing.assert_allclose(interpolant(samples.points), samples.labels, atol=1e-8)


def test_gaussian_rbf_diagonal_dominance():
    samples = SampleSet(points=[[0.0], [0.1]], labels=[1.0, 1.0])
    with pytest.raises(DiagonalDominanceError):
        SolverService.gaussian_rbf_interpolant(samples, 1.0)
