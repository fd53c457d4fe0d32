"""
CSV ingestion/emission and the per-run manifest.

All CSV files are UTF-8 with LF line endings; floats are written with repr so
a rerun with the same inputs reproduces the files byte for byte.
"""
import csv
import hashlib
import json
import logging
import os
import time
from typing import Any, Iterable, List, Optional, Sequence

import numpy as np

from app.models import FrequencyGrid, RunManifest, SampleSet, Spectrum
from app.services.grid_service import GridService
from app.utils.errors import (
    DimensionMismatchError,
    InputError,
    MalformedCsvError,
    SpecboundError,
)
from app.utils.timezone import format_local_datetime, now_utc

logger = logging.getLogger(__name__)

SPECTRUM_SUFFIX = ['re', 'im']


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ''
    return str(value)


def _open_csv(path):
    if not os.path.isfile(path):
        raise InputError(f"{path}: file not found")
    try:
        with open(path, newline='', encoding='utf-8') as handle:
            return [row for row in csv.reader(handle) if any(cell.strip() for cell in row)]
    except (OSError, UnicodeDecodeError, csv.Error) as e:
        raise MalformedCsvError(path, f"cannot read file: {e}")


def _numeric_table(path, rows: List[List[str]], header: List[str]) -> np.ndarray:
    table = np.empty((len(rows), len(header)))
    for r, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise MalformedCsvError(path, f"expected {len(header)} columns, found {len(row)}", row=r)
        for c, cell in enumerate(row):
            try:
                table[r - 2, c] = float(cell)
            except ValueError:
                raise MalformedCsvError(path, f"non-numeric value {cell!r}", row=r, column=header[c])
    return table


class IOService:
    """File formats of the command line"""

    @staticmethod
    def read_samples(path, dim: Optional[int] = None) -> SampleSet:
        """Read a `x1,...,xd,y` file; dim, when given, must match the header"""
        rows = _open_csv(path)
        if not rows:
            raise MalformedCsvError(path, "file is empty")
        header = [cell.strip() for cell in rows[0]]
        inferred = len(header) - 1
        expected = [f'x{i}' for i in range(1, inferred + 1)] + ['y']
        if inferred < 1 or header != expected:
            raise MalformedCsvError(path, f"header must be {','.join(expected) if inferred >= 1 else 'x1,...,xd,y'}, "
                                          f"got {','.join(header)}", row=1)
        if dim is not None and dim != inferred:
            raise DimensionMismatchError(f"{path}: header describes {inferred}-D points but --dim is {dim}")
        if len(rows) < 2:
            raise MalformedCsvError(path, "no data rows")
        table = _numeric_table(path, rows[1:], header)
        samples = SampleSet(points=table[:, :inferred], labels=table[:, inferred])
        logger.info(f"Read {samples.n} samples in {samples.dim}-D from {path}")
        return samples

    @staticmethod
    def write_rows(path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        with open(path, 'w', newline='', encoding='utf-8') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(value) for value in row])
        return str(path)

    @staticmethod
    def write_samples(path, samples: SampleSet) -> str:
        header = [f'x{i}' for i in range(1, samples.dim + 1)] + ['y']
        rows = (list(point) + [label] for point, label in zip(samples.points, samples.labels))
        return IOService.write_rows(path, header, rows)

    @staticmethod
    def spectrum_header(dim: int) -> List[str]:
        return [f'j{i}' for i in range(1, dim + 1)] + SPECTRUM_SUFFIX

    @staticmethod
    def write_spectrum(path, spectrum: Spectrum) -> str:
        indices = GridService.index_array(spectrum.grid)
        rows = (
            [int(j) for j in index] + [float(c.real), float(c.imag)]
            for index, c in zip(indices, spectrum.coeffs)
        )
        return IOService.write_rows(path, IOService.spectrum_header(spectrum.grid.dim), rows)

    @staticmethod
    def read_spectrum(path, mesh: float) -> Spectrum:
        """Read a spectrum CSV; the grid is recovered from the index columns"""
        rows = _open_csv(path)
        if len(rows) < 2:
            raise MalformedCsvError(path, "no data rows")
        header = [cell.strip() for cell in rows[0]]
        dim = len(header) - 2
        if dim < 1 or header != IOService.spectrum_header(dim):
            raise MalformedCsvError(path, f"header must be j1,...,jd,re,im, got {','.join(header)}", row=1)
        table = _numeric_table(path, rows[1:], header)
        band_limit = int(np.max(np.abs(table[:, :dim])))
        grid = FrequencyGrid(dim, band_limit, mesh)
        if table.shape[0] != grid.size or not np.array_equal(table[:, :dim], GridService.index_array(grid)):
            raise MalformedCsvError(path, f"index columns must enumerate the full grid of {grid.size} indices in order")
        return Spectrum(grid, table[:, dim] + 1j * table[:, dim + 1])

    @staticmethod
    def write_field(path, points: np.ndarray, values: np.ndarray) -> str:
        points = np.asarray(points).reshape(len(values), -1)
        header = [f'x{i}' for i in range(1, points.shape[1] + 1)] + ['h']
        return IOService.write_rows(path, header, (list(p) + [v] for p, v in zip(points, values)))

    @staticmethod
    def file_digest(path) -> str:
        digest = hashlib.sha256()
        with open(path, 'rb') as handle:
            for block in iter(lambda: handle.read(65536), b''):
                digest.update(block)
        return digest.hexdigest()


class ManifestRecorder:
    """
    Context manager that writes manifest.json into the output directory when
    the run ends, whether it succeeded or raised.
    """

    def __init__(self, out_dir, command: str, parameters: dict, timezone_name: str = 'UTC',
                 timestamp: bool = True):
        self.out_dir = str(out_dir)
        self.timezone_name = timezone_name
        self.timestamp = timestamp
        self.manifest = RunManifest(command=command, parameters=dict(parameters))
        self._started = None

    @property
    def path(self) -> str:
        return os.path.join(self.out_dir, 'manifest.json')

    def output_path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def add_input(self, path) -> None:
        self.manifest.input_digests[str(path)] = IOService.file_digest(path)

    def add_output(self, path) -> str:
        path = str(path)
        if path not in self.manifest.outputs:
            self.manifest.outputs.append(path)
        return path

    def __enter__(self) -> 'ManifestRecorder':
        os.makedirs(self.out_dir, exist_ok=True)
        self._started = time.perf_counter()
        if self.timestamp:
            self.manifest.started_at = format_local_datetime(now_utc(), self.timezone_name)
        logger.info(f"Run {self.manifest.command} started, output in {self.out_dir}")
        return self

    def __exit__(self, exc_type, exc, tb):
        self.manifest.duration_seconds = round(time.perf_counter() - self._started, 6)
        missing = [p for p in self.manifest.outputs if not (os.path.isfile(p) and os.path.getsize(p) > 0)]
        if exc is not None:
            self.manifest.status = 'failed'
            self.manifest.error = str(exc)
        elif missing:
            self.manifest.status = 'failed'
            self.manifest.error = f"declared outputs missing or empty: {', '.join(missing)}"
        else:
            self.manifest.status = 'ok'
        try:
            with open(self.path, 'w', encoding='utf-8', newline='\n') as handle:
                json.dump(self.manifest.to_dict(), handle, indent=2, sort_keys=True, default=str)
                handle.write('\n')
        finally:
            logger.info(f"Run {self.manifest.command} {self.manifest.status} in {self.manifest.duration_seconds:.3f}s")
        if exc is None and missing:
            raise SpecboundError(self.manifest.error)
        return False
