import click
import numpy as np

from app.critical import bp
from app.models import FrequencyGrid, NormVariant, Verdict
from app.services.critical_service import CriticalService
from app.services.experiment_service import CRITICAL_HEADER, RBF_HEADER, ExperimentService
from app.services.io_service import IOService
from app.services.plot_service import PlotService
from app.utils.errors import InconsistentEvidenceError
from app.utils.options import FLOAT_LIST, handle_errors, load_samples, open_run, run_options, samples_options


@bp.cli.command('critical')
@click.option('--dim', type=click.IntRange(min=1), default=1, show_default=True)
@click.option('--alpha', type=float, default=1.0, show_default=True)
@click.option('--sigmas', type=FLOAT_LIST, default='1e-1,1e-2,1e-3,1e-4', show_default=True)
@click.option('--variant', type=click.Choice([v.value for v in NormVariant]), default='bracket', show_default=True)
@click.option('--strict', is_flag=True, default=False, help='Fail when the verdict is withheld.')
@run_options
@handle_errors
def critical(dim, alpha, sigmas, variant, strict, out_dir, plot, no_timestamp, seed, threads):
    """Gaussian Sobolev norm as sigma -> 0 and its limit verdict."""
    params = dict(dim=dim, alpha=alpha, sigmas=sigmas, variant=variant, strict=strict, plot=plot, seed=seed)
    with open_run('critical', params, out_dir, no_timestamp, threads) as recorder:
        result = CriticalService.limit_sweep(dim, alpha, sigmas, NormVariant(variant))
        recorder.add_output(IOService.write_rows(
            recorder.output_path('critical_sweep.csv'), CRITICAL_HEADER,
            ExperimentService.critical_rows(dim, alpha, result),
        ))
        if plot:
            recorder.add_output(PlotService.line_plot(
                recorder.output_path('critical_sweep.svg'),
                [(np.array(sigmas), np.array([v for _, v in result.evidence]), variant)],
                'sigma', 'norm', title=f'd={dim}, alpha={alpha:g}', logx=True, logy=True,
                timestamp=not no_timestamp,
            ))
        line = f"verdict {result.verdict.value}, slope {result.slope:.4f}"
        if result.limit_value is not None:
            line += f", limit {result.limit_value:.10g} (C_d = {CriticalService.critical_constant(dim):.10g})"
        click.echo(line)
        if result.verdict is Verdict.WITHHELD:
            click.echo(f"withheld: {result.diagnostic}", err=True)
            if strict:
                raise InconsistentEvidenceError(result.diagnostic)


@bp.cli.command('rbf-decay')
@samples_options
@click.option('--alpha', type=float, default=0.5, show_default=True)
@click.option('--sigmas', type=FLOAT_LIST, default='0.1,0.05,0.025,0.0125', show_default=True)
@click.option('--mesh', type=float, default=0.1, show_default=True)
@click.option('--band-limit', type=int, default=None, help='Default covers the smallest sigma.')
@run_options
@handle_errors
def rbf_decay(data, preset, dim, alpha, sigmas, mesh, band_limit, out_dir, plot, no_timestamp, seed, threads):
    """Sobolev quadratic form of Gaussian RBF interpolants as sigma shrinks."""
    params = dict(data=data, preset=preset, dim=dim, alpha=alpha, sigmas=sigmas, mesh=mesh,
                  band_limit=band_limit, plot=plot, seed=seed)
    with open_run('rbf-decay', params, out_dir, no_timestamp, threads) as recorder:
        samples = load_samples(recorder, data, preset, dim)
        if band_limit is None:
            grid = CriticalService.default_decay_grid(samples.dim, min(sigmas), mesh)
        else:
            grid = FrequencyGrid(samples.dim, band_limit, mesh)
        study = CriticalService.rbf_norm_decay_study(samples, alpha, sigmas, grid)
        recorder.add_output(IOService.write_rows(
            recorder.output_path('rbf_decay.csv'), RBF_HEADER,
            (r.as_row() for r in study.rows),
        ))
        if plot:
            recorder.add_output(PlotService.line_plot(
                recorder.output_path('rbf_decay.svg'), [(np.array(study.sigmas), np.array(study.values), 'Q')],
                'sigma', 'Q', title=f'alpha={alpha:g}', logx=True, logy=True, timestamp=not no_timestamp,
            ))
        click.echo(f"tail slope {study.tail_slope:.4f} (d - alpha = {samples.dim - alpha:g})")
