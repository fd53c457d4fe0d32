import click

from app.reproduce import bp
from app.services.experiment_service import ExperimentService
from app.utils.options import handle_errors, open_run, run_options

TARGETS = ('fig1', 'fig2', 'fig3', 'critical', 'lfp')


@bp.cli.group('reproduce')
def reproduce():
    """Desk-scale reruns of the published experiments."""


def _run_target(target, recorder, plot, timestamp, full_scale=False):
    if target == 'fig1':
        origin = ExperimentService.fig1(recorder, full_scale, plot, timestamp)
        for alpha, value in origin.items():
            click.echo(f"fig1 alpha={alpha:g}: h(0)={value:.10g}")
    elif target == 'fig2':
        for tag, table in ExperimentService.fig2(recorder, plot, timestamp).items():
            click.echo(f"fig2 {tag}: max sup-difference {table.max_difference:.3e}")
    elif target == 'fig3':
        for tag, records in ExperimentService.fig3(recorder, plot, timestamp).items():
            summary = ', '.join(f"{r.alpha:g}:{r.report.classification}" for r in records)
            click.echo(f"fig3 {tag}: {summary}")
    elif target == 'critical':
        tables = ExperimentService.critical_tables(recorder, plot, timestamp)
        for alpha, result in tables['verdicts'].items():
            click.echo(f"critical d=1 alpha={alpha:g}: {result.verdict.value} (slope {result.slope:.4f})")
        for alpha, study in tables['studies'].items():
            click.echo(f"rbf alpha={alpha:g}: tail slope {study.tail_slope:.4f}")
    elif target == 'lfp':
        for name, report in ExperimentService.lfp_demo(recorder, plot, timestamp)['reports'].items():
            click.echo(f"lfp {name}: difference {report.max_coefficient_difference:.3e} "
                       f"({'pass' if report.passed else 'fail'})")


def _target_command(target):
    @click.option('--full-scale', is_flag=True, default=False, help='fig1 only: M = 10^6.')
    @run_options
    @handle_errors
    def command(full_scale, out_dir, plot, no_timestamp, seed, threads):
        params = dict(target=target, full_scale=full_scale, plot=plot, seed=seed)
        with open_run(f'reproduce {target}', params, out_dir, no_timestamp, threads) as recorder:
            targets = TARGETS if target == 'all' else (target,)
            for name in targets:
                _run_target(name, recorder, plot, not no_timestamp, full_scale)
    command.__name__ = f'reproduce_{target}'
    command.__doc__ = f'Reproduce {"every target" if target == "all" else target}.'
    return reproduce.command(target)(command)


for _target in TARGETS + ('all',):
    _target_command(_target)
