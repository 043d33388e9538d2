import logging
from pathlib import Path

import click
import yaml

from src.data.analytic import build_spectrum
from src.data.data_loader import write_spectrum
from src.data.grid import FrequencyGrid
from src.data.params import ModelParams
from src.data.spectrum import Form, convert_form


@click.command()
@click.option('--spectrum', 'spectrum_spec',
              required=True,
              help="Analytic n-form spectrum as a YAML mapping, e.g. "
                   "'{kind: gaussian_bump, floor: 1.0}'.")
@click.option('--beta', required=True, type=float,
              help='Nonlinearity exponent written into the beta column.')
@click.option('--omega-min', default=1e-2, type=float)
@click.option('--omega-max', default=1e2, type=float)
@click.option('--nodes', default=256, type=int,
              help='Number of log-uniform grid nodes.')
@click.option('--form',
              type=click.Choice([form.value for form in Form]),
              default=Form.WAVE_ACTION.value,
              help='Write n(w) or N(w) = w^(2 beta + 3/2) n(w).')
@click.option('-o', '--output', required=True,
              type=click.Path(dir_okay=False),
              help='Target spectrum CSV.')
def main(spectrum_spec, beta, omega_min, omega_max, nodes, form, output):
    """ Tabulates an analytic spectrum on a frequency grid, ready to be used
        as initial.path of an evolve run.
    """
    logger = logging.getLogger(__name__)
    params = ModelParams(beta)
    spec = yaml.safe_load(spectrum_spec)
    if not isinstance(spec, dict):
        raise click.BadParameter('must be a YAML mapping',
                                 param_hint='--spectrum')
    spectrum = build_spectrum(spec, params)
    grid = FrequencyGrid(omega_min, omega_max, nodes)

    logger.info('Tabulate %(kind)s on %(nodes)d nodes in [%(lo)g, %(hi)g]',
                {'kind': spectrum.kind, 'nodes': nodes, 'lo': omega_min,
                 'hi': omega_max})
    field = convert_form(spectrum.to_field(grid, Form.WAVE_ACTION), params,
                         Form(form))

    output = Path(output)
    logger.info('Save to %s', output)
    output.parent.mkdir(parents=True, exist_ok=True)
    write_spectrum(field, params, output)


if __name__ == '__main__':
    log_fmt = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    logging.basicConfig(level=logging.INFO, format=log_fmt)

    main()
