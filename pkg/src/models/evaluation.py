from datetime import datetime, timezone
import hashlib
import json
import logging
from pathlib import Path
import shutil
from typing import Iterable, Sequence

import pandas as pd

from src import __version__
from src.data.data_loader import FLOAT_FORMAT, snapshot_name, write_spectrum
from src.data.params import ModelParams
from src.data.spectrum import Form, GridFunction
from src.data.var_names import diagnostics_file
from .collision import CollisionResult
from .evolution import Trajectory

LOG = logging.getLogger(__name__)


def config_hash(config: dict) -> str:
    """sha256 of the canonical JSON of a config mapping."""
    canonical = json.dumps(config, sort_keys=True, separators=(',', ':'),
                           default=str)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def write_json(payload: dict, path: Path) -> None:
    with open(path, 'w') as file:
        json.dump(payload, file, sort_keys=True, indent=2, default=str)
        file.write('\n')


def write_collision(result: CollisionResult,
                    params: ModelParams,
                    path: Path) -> None:
    """Collision values as a spectrum CSV plus a JSON sidecar.

    The sidecar ``<stem>.json`` holds the evaluator, the quadrature metadata
    and the extrapolated fraction.
    """
    path = Path(path)
    form = 'n' if result.evaluator.value in ('sum', 'plus') else 'N'
    write_spectrum(result.as_grid_function(), params, path,
                   form=f'C({form})')
    write_json(result.describe(), path.with_suffix('.json'))


class ResultManager:
    """Utility object for saving the artifacts of one run.

    Writes run metadata, spectra, diagnostics and reports below
    ``save_root / run_name`` and, optionally, scalars to TensorBoard.

    Attributes:
        save_root (pathlib.Path): Directory of the current run.
        tensorboard_dir (pathlib.Path): Log directory of the SummaryWriter;
            None disables TensorBoard.
    """
    def __init__(self,
                 save_root: Path,
                 run_name: str,
                 tensorboard_dir: Path = None):
        self.save_root = Path(save_root) / run_name
        if self.save_root.exists():
            shutil.rmtree(self.save_root)
        self.save_root.mkdir(parents=True)
        self.tensorboard_dir = tensorboard_dir
        self._writer = None

    @property
    def writer(self):
        """Lazily created SummaryWriter, or None."""
        if self.tensorboard_dir is None:
            return None
        if self._writer is None:
            from torch.utils.tensorboard import SummaryWriter
            self._writer = SummaryWriter(log_dir=str(self.tensorboard_dir))
        return self._writer

    def path(self, name: str) -> Path:
        return self.save_root / name

    def save_run_metadata(self, config: dict, **extra) -> str:
        """Write run.json; returns the config hash.

        ``wall_clock`` is the only field that differs between two runs of
        the same config.
        """
        digest = config_hash(config)
        payload = {
            'config': config,
            'config_hash': digest,
            'code_version': __version__,
            'wall_clock': datetime.now(timezone.utc).isoformat(),
        }
        payload.update(extra)
        write_json(payload, self.path('run.json'))
        return digest

    def save_json(self, name: str, payload: dict) -> None:
        write_json(payload, self.path(name))

    def save_spectrum(self,
                      field: GridFunction,
                      params: ModelParams,
                      name: str,
                      form: str = None) -> None:
        write_spectrum(field, params, self.path(name), form=form)

    def save_collision(self,
                       result: CollisionResult,
                       params: ModelParams,
                       name: str = 'collision.csv') -> None:
        write_collision(result, params, self.path(name))

    def save_trajectory(self, trajectory: Trajectory,
                        params: ModelParams) -> None:
        """Snapshots as N-form spectrum CSVs plus diagnostics.csv."""
        for t, field in zip(trajectory.times, trajectory.snapshots):
            assert field.form is Form.RESCALED
            self.save_spectrum(field, params, snapshot_name(t))
        self.save_table('diagnostics.csv',
                        [r.to_dict() for r in trajectory.diagnostics],
                        diagnostics_file.features)

    def save_table(self,
                   name: str,
                   rows: Iterable[dict],
                   columns: Sequence[str]) -> None:
        df = pd.DataFrame(list(rows), columns=list(columns))
        df.to_csv(self.path(name), index=False, float_format=FLOAT_FORMAT)

    def finish(self) -> None:
        """Flush and close the TensorBoard writer, if any."""
        if self._writer is not None:
            self._writer.flush()
            self._writer.close()
            self._writer = None
        LOG.info("Results written to %s", self.save_root)
