"""HOM x TTT sweep and the CSV file that carries the KPI table."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._io import atomic_write_text
from .seeding import derive_seed
from .sim import KPI_NAMES, TTT_VALUES_MS, KpiRecord, SimConfig, run_simulation

FEATURE_NAMES = ("HOM", "TTT")
TARGET_NAMES = KPI_NAMES
HEADER = FEATURE_NAMES + TARGET_NAMES

DEFAULT_HOM_VALUES = tuple(i * 0.5 for i in range(33))
DEFAULT_TTT_VALUES = tuple(float(t) for t in TTT_VALUES_MS)


class DatasetParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Grid:
    hom_values: tuple[float, ...] = DEFAULT_HOM_VALUES
    ttt_values: tuple[float, ...] = DEFAULT_TTT_VALUES

    def __post_init__(self):
        for name in ("hom_values", "ttt_values"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise ValueError(f"{name} is empty")
            if list(values) != sorted(set(values)):
                raise ValueError(f"{name} must be sorted ascending without duplicates")
            object.__setattr__(self, name, values)

    def __len__(self) -> int:
        return len(self.hom_values) * len(self.ttt_values)

    def cells(self):
        """(hom_index, ttt_index, hom, ttt) in row-major order, HOM outer."""
        for i, hom in enumerate(self.hom_values):
            for j, ttt in enumerate(self.ttt_values):
                yield i, j, hom, ttt


@dataclass
class Dataset:
    rows: list[KpiRecord] = field(default_factory=list)
    feature_names: tuple[str, ...] = FEATURE_NAMES
    target_names: tuple[str, ...] = TARGET_NAMES

    def __len__(self) -> int:
        return len(self.rows)

    def __eq__(self, other) -> bool:
        return isinstance(other, Dataset) and self.rows == other.rows

    @property
    def X(self) -> np.ndarray:
        return np.array([[r.hom, r.ttt] for r in self.rows], dtype=float).reshape(-1, 2)

    @property
    def Y(self) -> np.ndarray:
        return np.array([r.targets for r in self.rows], dtype=float).reshape(-1, len(TARGET_NAMES))

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset([self.rows[i] for i in indices])


def cell_seed(base_seed: int, hom_index: int, ttt_index: int) -> int:
    return derive_seed(base_seed, hom_index, ttt_index)


def _run_cell(args) -> KpiRecord:
    config, hom, ttt = args
    try:
        return run_simulation(config)
    except Exception as exc:
        raise RuntimeError(f"simulation failed at HOM={hom}, TTT={ttt}: {exc}") from exc


def sweep(grid: Grid, base_config: SimConfig, workers: int | None = 1) -> Dataset:
    """Run one simulation per (HOM, TTT) cell of ``grid``.

    Rows come back in row-major order whatever the number of workers.
    """
    jobs = [(base_config.replace(hom=hom, ttt=ttt, seed=cell_seed(base_config.seed, i, j)), hom, ttt)
            for i, j, hom, ttt in grid.cells()]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(jobs) == 1:
        rows = [_run_cell(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return Dataset(rows)


def to_csv_text(dataset: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for r in dataset.rows:
        writer.writerow([repr(float(v)) for v in (r.hom, r.ttt, *r.targets)])
    return buf.getvalue()


def write_csv(dataset: Dataset, destination: str | Path) -> None:
    atomic_write_text(destination, to_csv_text(dataset))


def parse_csv(text: str) -> Dataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetParseError(1, "missing header") from None
    if tuple(h.strip() for h in header) != HEADER:
        raise DatasetParseError(1, f"header must be {','.join(HEADER)}, got {','.join(header)}")
    rows = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(HEADER):
            raise DatasetParseError(line, f"expected {len(HEADER)} columns, got {len(row)}")
        try:
            values = [float(v) for v in row]
        except ValueError:
            raise DatasetParseError(line, f"non-numeric cell in {row}") from None
        if not all(math.isfinite(v) for v in values):
            raise DatasetParseError(line, "non-finite value")
        try:
            rows.append(KpiRecord(*values))
        except ValueError as exc:
            raise DatasetParseError(line, str(exc)) from None
    return Dataset(rows)


def read_csv(source: str | Path) -> Dataset:
    return parse_csv(Path(source).read_text())


def check_grid_coverage(dataset: Dataset, grid: Grid) -> None:
    keys = [(r.hom, r.ttt) for r in dataset.rows]
    expected = [(h, t) for _, _, h, t in grid.cells()]
    if len(set(keys)) != len(keys):
        raise ValueError("duplicate (HOM, TTT) rows")
    if sorted(keys) != sorted(expected):
        raise ValueError("rows do not cover the grid exactly")


def parse_values(spec: str | Sequence[float]) -> tuple[float, ...]:
    """'0,0.5,1' or a sequence -> sorted tuple of floats."""
    if isinstance(spec, str):
        spec = [s for s in spec.replace(" ", ",").split(",") if s]
    return tuple(sorted({float(v) for v in spec}))
