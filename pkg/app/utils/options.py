"""
Click plumbing shared by the command blueprints.
"""
import functools
import os

import click
from flask import current_app

from app.extensions import executor
from app.services.io_service import IOService, ManifestRecorder
from app.services.experiment_service import preset_samples
from app.utils.errors import ConfigFileError, DimensionMismatchError, SpecboundError

CONFIG_ALIASES = {'lambda': 'lam'}


class CommandFailure(click.ClickException):
    """Carries the exit code of a SpecboundError to click"""

    def __init__(self, error: SpecboundError):
        super().__init__(str(error))
        self.exit_code = error.exit_code


class FloatList(click.ParamType):
    name = 'float-list'

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)):
            return [float(v) for v in value]
        try:
            return [float(v) for v in str(value).split(',') if v.strip()]
        except ValueError:
            self.fail(f"{value!r} is not a comma separated list of numbers", param, ctx)


class IntList(click.ParamType):
    name = 'int-list'

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)):
            return [int(v) for v in value]
        try:
            return [int(v) for v in str(value).split(',') if v.strip()]
        except ValueError:
            self.fail(f"{value!r} is not a comma separated list of integers", param, ctx)


FLOAT_LIST = FloatList()
INT_LIST = IntList()


def handle_errors(f):
    """Log library errors and turn them into click exits with their own code"""
    @functools.wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except SpecboundError as e:
            current_app.logger.error(f"{f.__name__} failed: {e!r}")
            raise CommandFailure(e)
    return decorated_function


def run_options(f):
    """--out-dir, --plot, --no-timestamp, --seed and --threads"""
    options = [
        click.option('--out-dir', type=click.Path(file_okay=False), default=None,
                     help='Output directory (default from SPECBOUND_OUT_DIR).'),
        click.option('--plot/--no-plot', default=False, help='Also write SVG figures.'),
        click.option('--no-timestamp', is_flag=True, default=False, help='Leave timestamps out of SVGs and the manifest.'),
        click.option('--seed', type=int, default=0, show_default=True, help='Seed recorded for the run.'),
        click.option('--threads', type=click.IntRange(min=1), default=None,
                     help='Parallelism degree (default SPECBOUND_THREADS).'),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def samples_options(f):
    options = [
        click.option('--data', type=click.Path(dir_okay=False), default=None,
                     help='Samples CSV with header x1,...,xd,y.'),
        click.option('--preset', type=click.Choice(['1d', '2d']), default=None,
                     help='Built-in dataset used when --data is not given.'),
        click.option('--dim', type=click.IntRange(min=1), default=None, help='Expected point dimension.'),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def open_run(command: str, params: dict, out_dir=None, no_timestamp: bool = False,
             threads=None) -> ManifestRecorder:
    """Apply --threads and build the manifest recorder of a run"""
    config = current_app.config
    executor.configure(threads or config.get('SPECBOUND_THREADS') or 1)
    parameters = {key: value for key, value in params.items() if key != 'out_dir'}
    parameters['threads'] = executor.threads
    return ManifestRecorder(
        out_dir or config.get('DEFAULT_OUT_DIR', 'out'), command, parameters,
        timezone_name=config.get('TIMEZONE', 'UTC'), timestamp=not no_timestamp,
    )


def load_samples(recorder: ManifestRecorder, data=None, preset=None, dim=None, default_preset='1d'):
    if data is not None:
        samples = IOService.read_samples(data, dim)
        recorder.add_input(data)
        return samples
    samples = preset_samples(preset or default_preset)
    if dim is not None and dim != samples.dim:
        raise DimensionMismatchError(f"preset {preset or default_preset!r} is {samples.dim}-D but --dim is {dim}")
    return samples


def load_config_file(path) -> dict:
    """Parse `key = value` lines; '#' starts a comment"""
    if not os.path.isfile(path):
        raise ConfigFileError(f"{path}: config file not found")
    values = {}
    with open(path, encoding='utf-8') as handle:
        for number, line in enumerate(handle, start=1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ConfigFileError(f"{path}: line {number} is not of the form key = value")
            key, value = (part.strip() for part in line.split('=', 1))
            key = key.lstrip('-').replace('-', '_')
            values[CONFIG_ALIASES.get(key, key)] = value
    return values


def split_config_argument(argv):
    """Remove `--config file` from argv and return (argv, path or None)"""
    argv = list(argv)
    for i, token in enumerate(argv):
        if token == '--config':
            if i + 1 >= len(argv):
                raise click.UsageError('--config needs a file argument')
            return argv[:i] + argv[i + 2:], argv[i + 1]
        if token.startswith('--config='):
            return argv[:i] + argv[i + 1:], token.split('=', 1)[1]
    return argv, None


def build_default_map(argv, values: dict) -> dict:
    """Scope config-file values to the invoked command (and reproduce target)"""
    positional = [token for token in argv if not token.startswith('-')]
    if not positional:
        return {}
    command = positional[0]
    if command == 'reproduce' and len(positional) > 1:
        return {command: {positional[1]: values}}
    return {command: values}
