import click
import numpy as np
from flask import current_app

from app.models import FrequencyGrid, SolveConfig
from app.services.diagnostics_service import DiagnosticsService
from app.services.experiment_service import ExperimentService, SINGLE_POINT
from app.services.io_service import IOService
from app.services.plot_service import PlotService
from app.services.solver_service import SolverService
from app.solver import bp
from app.utils.options import handle_errors, load_samples, open_run, run_options, samples_options


@bp.cli.command('solve')
@samples_options
@click.option('--band-limit', type=int, default=100, show_default=True, help='M, indices run over -M..M.')
@click.option('--mesh', type=float, default=0.1, show_default=True, help='Frequency mesh.')
@click.option('--alpha', type=float, default=2.0, show_default=True)
@click.option('--lambda', 'lam', type=float, default=0.0, show_default=True)
@click.option('--path', 'solve_path', type=click.Choice(['dense', 'dual', 'svd', 'auto']), default='auto',
              show_default=True)
@run_options
@handle_errors
def solve(data, preset, dim, band_limit, mesh, alpha, lam, solve_path, out_dir, plot, no_timestamp, seed, threads):
    """Solve the weighted interpolation problem for one dataset."""
    params = dict(data=data, preset=preset, dim=dim, band_limit=band_limit, mesh=mesh, alpha=alpha,
                  lam=lam, path=solve_path, plot=plot, seed=seed)
    with open_run('solve', params, out_dir, no_timestamp, threads) as recorder:
        samples = load_samples(recorder, data, preset, dim)
        config = SolveConfig(alpha=alpha, lam=lam, path=solve_path,
                             dense_limit=current_app.config['DENSE_GRID_LIMIT'])
        grid = FrequencyGrid(samples.dim, band_limit, mesh)
        spectrum = SolverService.solve_general(grid, samples, config)
        ExperimentService.write_solution(recorder, 'solve', spectrum, samples, plot, not no_timestamp,
                                         title=f'alpha={alpha:g}, M={band_limit}')
        report = DiagnosticsService.diagnose(
            spectrum, samples, config,
            threshold=current_app.config['TRIVIALITY_THRESHOLD'],
            exclusion_widths=current_app.config['EXCLUSION_WIDTHS'],
        )
        summary = {**grid.to_dict(), **config.to_dict(), **report.to_dict()}
        recorder.add_output(IOService.write_rows(
            recorder.output_path('solve_diagnostics.csv'), list(summary), [list(summary.values())],
        ))
        click.echo(f"tau={report.triviality_index:.6g} ({report.classification}), "
                   f"max residual {report.max_residual:.3e}, Q={report.q_alpha:.6g}")


@bp.cli.command('single-point')
@click.option('--band-limit', type=int, default=SINGLE_POINT['band_limit'], show_default=True)
@click.option('--full-scale', is_flag=True, default=False, help='Use M = 10^6.')
@click.option('--mesh', type=float, default=SINGLE_POINT['mesh'], show_default=True)
@click.option('--alpha', type=float, default=3.0, show_default=True)
@click.option('--lambda', 'lam', type=float, default=SINGLE_POINT['lam'], show_default=True)
@click.option('--half-width', type=float, default=SINGLE_POINT['half_width'], show_default=True,
              help='Field is written on [-half_width, half_width].')
@click.option('--points', type=click.IntRange(min=2), default=SINGLE_POINT['points'], show_default=True)
@run_options
@handle_errors
def single_point(band_limit, full_scale, mesh, alpha, lam, half_width, points, out_dir, plot, no_timestamp,
                 seed, threads):
    """Closed-form solution for one sample at the origin."""
    if full_scale:
        band_limit = SINGLE_POINT['full_band_limit']
    params = dict(band_limit=band_limit, full_scale=full_scale, mesh=mesh, alpha=alpha, lam=lam,
                  half_width=half_width, points=points, plot=plot, seed=seed)
    with open_run('single-point', params, out_dir, no_timestamp, threads) as recorder:
        solution = SolverService.solve_single_point_analytic(band_limit, mesh, alpha, lam)
        x = np.linspace(-half_width, half_width, points)
        values = solution(x)
        recorder.add_output(IOService.write_field(recorder.output_path('single_point_field.csv'), x, values))
        recorder.add_output(IOService.write_spectrum(recorder.output_path('single_point_spectrum.csv'),
                                                     solution.spectrum))
        if plot:
            recorder.add_output(PlotService.line_plot(
                recorder.output_path('single_point_field.svg'), [(x, values, f'alpha={alpha:g}')], 'x', 'h(x)',
                title=f'single point, M={band_limit}', timestamp=not no_timestamp,
            ))
        click.echo(f"h(0)={solution.value_at_origin:.12g}, Z^2={solution.z_squared:.12g}")
