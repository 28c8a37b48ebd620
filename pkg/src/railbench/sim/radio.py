"""Cell layout, link budget and the handover decision rules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import SimConfig


@dataclass(frozen=True)
class Cell:
    cell_id: int
    site_id: int
    position: tuple[float, float]
    tx_power: float


@dataclass(frozen=True)
class Topology:
    cells: tuple[Cell, ...]

    @property
    def positions(self) -> np.ndarray:
        return np.array([c.position for c in self.cells], dtype=float).reshape(-1, 2)

    @property
    def tx_powers(self) -> np.ndarray:
        return np.array([c.tx_power for c in self.cells], dtype=float)

    @property
    def site_ids(self) -> np.ndarray:
        return np.array([c.site_id for c in self.cells], dtype=int)

    def __len__(self) -> int:
        return len(self.cells)


def build_topology(config: SimConfig) -> Topology:
    """Sites on a line parallel to the track (y = 0), offset by ``track_offset``.

    Each site carries ``cells_per_site`` co-located omnidirectional cells.
    """
    config.validate()
    cells = []
    for site in range(config.num_sites):
        xy = (site * config.inter_site_distance, config.track_offset)
        for _ in range(config.cells_per_site):
            cells.append(Cell(len(cells), site, xy, config.tx_power))
    return Topology(tuple(cells))


def rsrp(tx_power, distance, shadowing=0.0, pathloss_ref_db=30.0, pathloss_exponent=3.5):
    """Received power in dBm under log-distance path loss with d0 = 1 m.

    Distances below 1 m are clamped. Works elementwise on arrays.
    """
    d = np.maximum(np.asarray(distance, dtype=float), 1.0)
    out = tx_power - (pathloss_ref_db + 10.0 * pathloss_exponent * np.log10(d)) + shadowing
    return float(out) if np.ndim(out) == 0 else out


def a3_condition(rsrp_serving: float, rsrp_target: float, hom_effective: float) -> bool:
    """A3 entry: the biased target power strictly exceeds the serving power."""
    return rsrp_target + hom_effective > rsrp_serving


def effective_hom(serving_load: float, configured_hom: float, load_threshold: float) -> float:
    """The margin is only applied while the serving cell is overloaded."""
    return configured_hom if serving_load >= load_threshold else 0.0


@dataclass(frozen=True)
class Neighbor:
    cell_id: int
    rsrp: float
    load: float


def select_target(neighbors: Sequence[Neighbor], load_threshold: float) -> int:
    """Strongest neighbor among the under-loaded ones.

    Falls back to the strongest neighbor overall when every neighbor is at
    or above the threshold. Ties go to the lowest cell id.
    """
    if len(neighbors) == 0:
        raise ValueError("no neighbors")
    neighbors = [n if isinstance(n, Neighbor) else Neighbor(*n) for n in neighbors]
    restricted = [n for n in neighbors if n.load < load_threshold]
    pool = restricted or neighbors
    return min(pool, key=lambda n: (-n.rsrp, n.cell_id)).cell_id


def select_targets(rsrp_matrix: np.ndarray, serving: np.ndarray, loads: np.ndarray,
                   load_threshold: float) -> np.ndarray:
    """Row-wise :func:`select_target` over every non-serving cell.

    ``rsrp_matrix`` is users x cells; returns -1 for users with no neighbor.
    """
    n_users, n_cells = rsrp_matrix.shape
    if n_cells < 2:
        return np.full(n_users, -1, dtype=int)
    rows = np.arange(n_users)
    cand = rsrp_matrix.copy()
    cand[rows, serving] = -np.inf
    restricted = np.where(loads[None, :] < load_threshold, cand, -np.inf)
    restricted[rows, serving] = -np.inf
    has_restricted = np.isfinite(restricted).any(axis=1)
    # argmax returns the first maximum, i.e. the lowest cell id on ties
    return np.where(has_restricted, restricted.argmax(axis=1), cand.argmax(axis=1))
