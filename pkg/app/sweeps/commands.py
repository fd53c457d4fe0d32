import click
from flask import current_app

from app.models import FrequencyGrid, SolveConfig
from app.services.diagnostics_service import DiagnosticsService
from app.services.experiment_service import ExperimentService
from app.services.plot_service import PlotService
from app.services.solver_service import SolverService
from app.sweeps import bp
from app.utils.options import (
    FLOAT_LIST,
    INT_LIST,
    handle_errors,
    load_samples,
    open_run,
    run_options,
    samples_options,
)


def _diagnostic_settings():
    return dict(threshold=current_app.config['TRIVIALITY_THRESHOLD'],
                exclusion_widths=current_app.config['EXCLUSION_WIDTHS'],
                dense_limit=current_app.config['DENSE_GRID_LIMIT'])


@bp.cli.command('sweep-alpha')
@samples_options
@click.option('--alphas', type=FLOAT_LIST, default='0.5,1.5,3,10', show_default=True)
@click.option('--band-limit', type=int, default=1000, show_default=True)
@click.option('--mesh', type=float, default=0.1, show_default=True)
@click.option('--lambda', 'lam', type=float, default=0.5, show_default=True)
@click.option('--path', 'solve_path', type=click.Choice(['dense', 'dual', 'svd', 'auto']), default='auto')
@run_options
@handle_errors
def sweep_alpha(data, preset, dim, alphas, band_limit, mesh, lam, solve_path, out_dir, plot, no_timestamp,
                seed, threads):
    """Classify solutions over a list of exponents at a fixed band limit."""
    params = dict(data=data, preset=preset, dim=dim, alphas=alphas, band_limit=band_limit, mesh=mesh,
                  lam=lam, path=solve_path, plot=plot, seed=seed)
    with open_run('sweep-alpha', params, out_dir, no_timestamp, threads) as recorder:
        samples = load_samples(recorder, data, preset, dim)
        records = DiagnosticsService.sweep_alpha(samples, alphas, band_limit, mesh, lam, solve_path,
                                                 **_diagnostic_settings())
        ExperimentService.write_sweep(recorder, 'sweep_alpha.csv', records)
        if plot:
            recorder.add_output(PlotService.line_plot(
                recorder.output_path('sweep_alpha.svg'),
                [([r.alpha for r in records], [r.report.triviality_index for r in records], 'tau')],
                'alpha', 'tau', title=f'M={band_limit}, lambda={lam:g}', timestamp=not no_timestamp,
            ))
        for record in records:
            click.echo(f"alpha={record.alpha:g}: tau={record.report.triviality_index:.4f} "
                       f"{record.report.classification}")
        nontrivial = [record.alpha for record in records if not record.report.is_trivial]
        if nontrivial:
            click.echo(f"smallest nontrivial alpha: {min(nontrivial):g}")
        else:
            click.echo("every alpha gave a trivial solution")


@bp.cli.command('sweep-bandlimit')
@samples_options
@click.option('--alpha', type=float, default=10.0, show_default=True)
@click.option('--band-limits', type=INT_LIST, default='250,500,1000', show_default=True)
@click.option('--mesh', type=float, default=0.1, show_default=True)
@click.option('--lambda', 'lam', type=float, default=0.5, show_default=True)
@click.option('--path', 'solve_path', type=click.Choice(['dense', 'dual', 'svd', 'auto']), default='auto')
@run_options
@handle_errors
def sweep_bandlimit(data, preset, dim, alpha, band_limits, mesh, lam, solve_path, out_dir, plot, no_timestamp,
                    seed, threads):
    """Solve at increasing band limits and tabulate how far the fields move."""
    params = dict(data=data, preset=preset, dim=dim, alpha=alpha, band_limits=band_limits, mesh=mesh,
                  lam=lam, path=solve_path, plot=plot, seed=seed)
    with open_run('sweep-bandlimit', params, out_dir, no_timestamp, threads) as recorder:
        samples = load_samples(recorder, data, preset, dim)
        records = DiagnosticsService.sweep_bandlimit(samples, alpha, band_limits, mesh, lam, solve_path,
                                                     **_diagnostic_settings())
        ExperimentService.write_sweep(recorder, 'sweep_bandlimit.csv', records)
        config = SolveConfig(alpha=alpha, lam=lam, path=solve_path,
                             dense_limit=current_app.config['DENSE_GRID_LIMIT'])
        table = DiagnosticsService.convergence_in_bandlimit(samples, config, band_limits, mesh)
        ExperimentService.write_convergence(recorder, 'bandlimit_convergence.csv', table)
        if plot:
            spectra = {
                f'M={m}': SolverService.solve_general(FrequencyGrid(samples.dim, m, mesh), samples, config)
                for m in band_limits
            }
            ExperimentService.plot_fields(recorder, 'sweep_bandlimit.svg', samples, spectra,
                                          not no_timestamp, f'alpha={alpha:g}')
        click.echo(f"max sup-difference between band limits: {table.max_difference:.3e}")
