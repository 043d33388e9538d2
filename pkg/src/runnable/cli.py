import logging
import sys

import click
from dotenv import load_dotenv

from src.definitions import (
    EXIT_CONFIG_ERROR, EXIT_OK, EXIT_RUNTIME_ERROR
)
from .config import ConfigError, load_config
from .experiments import run_experiment

LOG_FMT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def execute(experiment: str, config_path: str, out: str = None,
            seed: int = None) -> int:
    """Load the configuration, run the experiment, return the exit code."""
    logger = logging.getLogger(__name__)
    try:
        config = load_config(config_path, experiment=experiment, out=out,
                             seed=seed)
        logger.info(
            'Running %(experiment)s as %(run_name)s with seed=%(seed)s, '
            'beta=%(beta)s.',
            {'experiment': experiment, 'run_name': config.run_name,
             'seed': config.seed, 'beta': config.params.beta},
        )
        outcome = run_experiment(config)
    except ConfigError as error:
        logger.error('Invalid configuration: %s', error)
        click.echo(f"config error: {error}", err=True)
        return EXIT_CONFIG_ERROR
    except Exception as error:
        logger.exception('Run failed')
        click.echo(f"error: {error}", err=True)
        return EXIT_RUNTIME_ERROR
    logger.info('Finished %(experiment)s with exit status %(status)d',
                {'experiment': experiment, 'status': outcome.exit_status})
    return outcome.exit_status


def run_options(command):
    command = click.option(
        '--seed', type=click.IntRange(min=0), default=None,
        help='Random number seed; overrides the config.')(command)
    command = click.option(
        '--out', type=click.Path(file_okay=False), default=None,
        help='Output directory; overrides output.directory.')(command)
    command = click.option(
        '--config', 'config_path', required=True,
        type=click.Path(dir_okay=False),
        help='Path to the YAML run configuration.')(command)
    return click.pass_context(command)


@click.group()
def cli():
    """Numerical lab for the MMT kinetic wave equation at alpha = 1/2."""


@cli.command()
@run_options
def evolve(ctx, config_path, out, seed):
    """Integrate dN/dt = C(N) and write snapshots and diagnostics."""
    ctx.exit(execute('evolve', config_path, out, seed))


@cli.command()
@run_options
def verify(ctx, config_path, out, seed):
    """Run the named check suites; exit 0 iff every check passes."""
    ctx.exit(execute('verify', config_path, out, seed))


@cli.command()
@run_options
def oracle(ctx, config_path, out, seed):
    """Compare Monte-Carlo estimates with the quadrature collision."""
    ctx.exit(execute('oracle', config_path, out, seed))


@cli.command()
@run_options
def lemma2(ctx, config_path, out, seed):
    """Growth of the collision L^p norm on concentrating data."""
    ctx.exit(execute('lemma2', config_path, out, seed))


@cli.command()
@run_options
def sweep(ctx, config_path, out, seed):
    """Run one child experiment per parameter override."""
    ctx.exit(execute('sweep', config_path, out, seed))


def main():
    """Console entry point; usage errors exit with the config-error code."""
    logging.basicConfig(level=logging.INFO, format=LOG_FMT)
    load_dotenv()
    try:
        status = cli.main(standalone_mode=False)
    except click.ClickException as error:
        error.show()
        status = EXIT_CONFIG_ERROR
    except click.Abort:
        status = EXIT_RUNTIME_ERROR
    sys.exit(EXIT_OK if status is None else status)


if __name__ == '__main__':
    logging.basicConfig(level=logging.INFO, format=LOG_FMT)

    main()
