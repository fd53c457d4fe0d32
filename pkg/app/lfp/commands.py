import click

from app.lfp import bp
from app.models import FrequencyGrid, ZeroModePolicy
from app.services.experiment_service import ExperimentService
from app.services.io_service import IOService
from app.services.lfp_service import STABLE_FRACTION, LfpService
from app.utils.options import handle_errors, load_samples, open_run, run_options, samples_options


@bp.cli.command('lfp')
@samples_options
@click.option('--band-limit', type=int, default=64, show_default=True)
@click.option('--mesh', type=float, default=0.1, show_default=True)
@click.option('--steps', type=click.IntRange(min=0), default=100_000, show_default=True)
@click.option('--dt', type=click.FloatRange(min=0, min_open=True), default=None,
              help='Time step (default 0.9 of the stability bound).')
@click.option('--checkpoint-every', type=click.IntRange(min=1), default=None)
@click.option('--moment-r3', type=float, default=1.0, show_default=True)
@click.option('--moment-a2r', type=float, default=1.0, show_default=True)
@click.option('--zero-mode', type=click.Choice([p.value for p in ZeroModePolicy]), default='cap', show_default=True)
@click.option('--initial', type=click.Path(dir_okay=False), default=None,
              help='Initial spectrum CSV (zero by default).')
@click.option('--check-equivalence', is_flag=True, default=False,
              help='Compare the converged flow with the weighted minimum-norm solve.')
@click.option('--tol', type=float, default=1e-6, show_default=True)
@run_options
@handle_errors
def lfp(data, preset, dim, band_limit, mesh, steps, dt, checkpoint_every, moment_r3, moment_a2r, zero_mode,
        initial, check_equivalence, tol, out_dir, plot, no_timestamp, seed, threads):
    """Integrate the linear frequency-principle flow."""
    params = dict(data=data, preset=preset, dim=dim, band_limit=band_limit, mesh=mesh, steps=steps, dt=dt,
                  checkpoint_every=checkpoint_every, moment_r3=moment_r3, moment_a2r=moment_a2r,
                  zero_mode=zero_mode, initial=initial, check_equivalence=check_equivalence, tol=tol,
                  plot=plot, seed=seed)
    with open_run('lfp', params, out_dir, no_timestamp, threads) as recorder:
        samples = load_samples(recorder, data, preset, dim)
        grid = FrequencyGrid(samples.dim, band_limit, mesh)
        kernel = LfpService.build_kernel(grid, moment_r3, moment_a2r, ZeroModePolicy(zero_mode))
        start = None
        if initial is not None:
            start = IOService.read_spectrum(initial, mesh)
            recorder.add_input(initial)
        if dt is None:
            dt = STABLE_FRACTION * LfpService.max_stable_dt(kernel, samples.n)
        trajectory = LfpService.lfp_evolve(LfpService.initial_state(grid, samples, start), kernel, samples,
                                           dt, steps, checkpoint_every=checkpoint_every)
        ExperimentService.write_trajectory(recorder, 'lfp_trajectory.csv', trajectory)
        recorder.add_output(IOService.write_spectrum(recorder.output_path('lfp_spectrum.csv'),
                                                     trajectory.final.spectrum))
        if plot:
            ExperimentService.plot_trajectory(recorder, 'lfp_trajectory.svg', trajectory, not no_timestamp)
        click.echo(f"{trajectory.steps} steps, dt={dt:.6g}, max residual {trajectory.final.max_residual:.3e}")

        if check_equivalence:
            report = LfpService.lfp_equivalence_check(samples, kernel, tol=tol, dt=dt, initial=start)
            summary = report.to_dict()
            recorder.add_output(IOService.write_rows(
                recorder.output_path('lfp_equivalence.csv'), list(summary), [list(summary.values())],
            ))
            click.echo(f"equivalence: difference {report.max_coefficient_difference:.3e} "
                       f"({'pass' if report.passed else 'fail'})")
