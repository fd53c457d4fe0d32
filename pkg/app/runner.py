"""
Entry point used by run.py.

Exit codes: 0 success, 1 numerical failure, 2 usage or input error.
"""
import os
import sys

import click

from app import create_app
from app.utils.errors import SpecboundError
from app.utils.options import build_default_map, load_config_file, split_config_argument


def _config_class():
    from config import config
    return config.get(os.environ.get('SPECBOUND_ENV', 'default'), config['default'])


def run(argv=None, config_class=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    app = create_app(config_class or _config_class())
    try:
        argv, config_path = split_config_argument(argv)
        default_map = build_default_map(argv, load_config_file(config_path)) if config_path else {}
    except click.UsageError as e:
        e.show()
        return e.exit_code
    except SpecboundError as e:
        click.echo(f"Error: {e}", err=True)
        return e.exit_code

    with app.app_context():
        try:
            result = app.cli.main(args=argv, prog_name='specbound', standalone_mode=False,
                                  default_map=default_map)
        except click.ClickException as e:
            e.show()
            return e.exit_code
        except click.exceptions.Abort:
            click.echo('Aborted!', err=True)
            return 1
        except SpecboundError as e:
            app.logger.error(f"Run failed: {e!r}")
            click.echo(f"Error: {e}", err=True)
            return e.exit_code
    return result if isinstance(result, int) else 0

