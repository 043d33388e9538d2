import logging
from pathlib import Path
import re
from typing import Tuple

import numpy as np
import pandas as pd

from .grid import FrequencyGrid
from .params import ModelParams
from .spectrum import Extrapolation, Form, GridFunction, SpectrumField
from .var_names import spectrum_file

LOG = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'
SNAPSHOT_PATTERN = re.compile(r'^snap_t(?P<time>[0-9.eE+-]+)\.csv$')


def snapshot_name(t: float) -> str:
    return f"snap_t{t:.6f}.csv"


def write_spectrum(field: GridFunction,
                   params: ModelParams,
                   path: Path,
                   form: str = None) -> None:
    """Write one row per node with full double precision.

    Args:
        field (GridFunction): Field to export. Signed grid functions (for
            instance collision values) need an explicit ``form`` label.
        params (ModelParams): Supplies the beta column.
        path (pathlib.Path): Target CSV file.
        form (str, optional): Label for the form column.
    """
    if form is None:
        form = field.form.value
    df = pd.DataFrame({
        'omega': field.grid.nodes,
        'value': field.values,
        'form': form,
        'beta': params.beta,
    }, columns=spectrum_file.features)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def grid_from_nodes(omega: np.ndarray, rtol: float = 1e-9) -> FrequencyGrid:
    """Recover the log-uniform grid behind a column of nodes."""
    if omega.size < 2 or np.any(np.diff(omega) <= 0):
        raise ValueError("omega column must be strictly increasing")
    grid = FrequencyGrid(float(omega[0]), float(omega[-1]), omega.size)
    if not np.allclose(grid.nodes, omega, rtol=rtol, atol=0.0):
        raise ValueError("omega column is not a log-uniform grid")
    return grid


def read_spectrum(path: Path,
                  extrapolation: Extrapolation = Extrapolation.CONSTANT) \
        -> Tuple[SpectrumField, float]:
    """Read a spectrum CSV.

    Returns:
        tuple: The field and the beta recorded in the file.
    """
    df = pd.read_csv(path)
    missing = set(spectrum_file.features) - set(df.columns)
    if missing:
        raise ValueError(f"{path}: missing columns {sorted(missing)}")
    forms = df['form'].unique()
    betas = df['beta'].unique()
    if len(forms) != 1 or len(betas) != 1:
        raise ValueError(f"{path}: form and beta must be constant per file")
    grid = grid_from_nodes(df['omega'].to_numpy(dtype=float))
    field = SpectrumField(
        grid, df['value'].to_numpy(dtype=float), Form(forms[0]), extrapolation
    )
    LOG.debug("Read %d nodes from %s", grid.node_count, path)
    return field, float(betas[0])


class SnapshotLoader:
    """Iterates over the snapshots of a run directory in time order.

    Yields (t, SpectrumField) pairs.
    """

    def __init__(self, run_dir: Path):
        self.run_dir = Path(run_dir)

    @property
    def files(self):
        found = []
        for path in self.run_dir.glob('snap_t*.csv'):
            match = SNAPSHOT_PATTERN.match(path.name)
            if match:
                found.append((float(match.group('time')), path))
        return sorted(found)

    def __len__(self):
        return len(self.files)

    def __iter__(self):
        self._files = iter(self.files)
        return self

    def __next__(self):
        t, path = next(self._files)
        field, _ = read_spectrum(path)
        return t, field
