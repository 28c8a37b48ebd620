"""Tick-driven simulation of measured train users moving past the cell line.

All users are advanced together with array operations; only handover
executions are applied one user at a time (in user-id order) because
admission control depends on loads changed by earlier executions in the
same tick.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import SimConfig
from .radio import Topology, build_topology, select_targets

KPI_NAMES = ("L", "T", "CDR", "RLF", "SE", "HOPP", "HOP")
COUNTER_NAMES = ("ho_attempts", "ho_success", "ho_pingpong", "rlf_events",
                 "call_drops", "calls_total")


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class KpiRecord:
    hom: float
    ttt: float
    L: float
    T: float
    CDR: float
    RLF: float
    SE: float
    HOPP: float
    HOP: float

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"KPI {k} out of range: {v}")
        if self.HOPP > 100 or self.CDR > 100:
            raise ValueError(f"percentage KPI above 100: HOPP={self.HOPP}, CDR={self.CDR}")

    @property
    def targets(self) -> tuple[float, ...]:
        return tuple(getattr(self, k) for k in KPI_NAMES)


@dataclass
class UserState:
    user_id: int
    position: float
    serving_cell: int
    ttt_candidate: tuple[int, float] | None
    time_since_last_ho: float
    previous_cell: int | None
    rlf_timer_elapsed: float
    session_active: bool
    counters: dict = field(default_factory=dict)


@dataclass
class CellState:
    cell_id: int
    load: float
    background_load: float
    attached_users: int


@dataclass
class HandoverEvent:
    time: float
    user_id: int
    source: int
    target: int
    kind: str  # "success", "pingpong", "blocked" or "rlf"


@dataclass
class SimResult:
    kpis: KpiRecord
    counters: dict
    events: list


class Simulation:
    """Mutable state of one run. ``step()`` advances by one tick.

    Parameters
    ----------
    config : SimConfig
    topology : Topology, optional
        Defaults to ``build_topology(config)``.
    initial_positions : array-like, optional
        Start coordinate along the track for each measured user; drawn at
        random when omitted.
    """

    def __init__(self, config: SimConfig, topology: Topology | None = None,
                 initial_positions=None):
        config.validate()
        self.config = config
        self.topology = topology or build_topology(config)
        self.rng = np.random.default_rng(config.seed)

        c = config
        n_users, n_cells = c.num_measured_users, len(self.topology)
        self._cell_xy = self.topology.positions
        self._tx = self.topology.tx_powers
        self._noise_mw = 10.0 ** (c.noise_power / 10.0)
        self._rows = np.arange(n_users)

        self.n_ticks = c.num_ticks
        self.ticks_per_cycle = c.ticks_per_cycle
        n_cycles = max(1, self.n_ticks // self.ticks_per_cycle)
        self.warmup_ticks = int(c.warmup_fraction * n_cycles) * self.ticks_per_cycle

        self.time = 0.0
        self.tick_index = 0

        track_len = (c.num_sites - 1) * c.inter_site_distance
        travel = c.speed_mps * c.sim_duration
        if initial_positions is None:
            self.pos = self.rng.uniform(0.0, max(0.0, track_len - travel), n_users)
        else:
            self.pos = np.asarray(initial_positions, dtype=float).reshape(n_users).copy()
        self.lane = self.rng.uniform(-c.lane_spread, c.lane_spread, n_users)
        self.segment = self._segments()
        self.shadow = self.rng.normal(0.0, c.shadowing_sigma, (n_users, n_cells))
        self.bg_load = self._draw_background()

        self.rsrp = self._rsrp_matrix()
        self.serving = self.rsrp.argmax(axis=1)
        self.prev_cell = np.full(n_users, -1)
        self.time_since_ho = np.full(n_users, np.inf)
        self.cand_target = np.full(n_users, -1)
        self.cand_elapsed = np.zeros(n_users)
        self.rlf_elapsed = np.zeros(n_users)
        self.call_remaining = self._draw_calls(n_users)

        self.counters = {k: np.zeros(n_users, dtype=np.int64) for k in COUNTER_NAMES}
        self._tput_sum = 0.0
        self._se_sum = 0.0
        self._load_sum = 0.0
        self._samples = 0
        self.measured_ticks = 0
        self.events: list[HandoverEvent] = []
        self.sinr_db = np.full(n_users, np.nan)

    # -- random draws -----------------------------------------------------
    def _draw_background(self) -> np.ndarray:
        lo, hi = self.config.background_load_range
        return self.rng.uniform(lo, hi, len(self.topology))

    def _draw_calls(self, n: int) -> np.ndarray:
        return self.rng.exponential(self.config.mean_call_duration * 1000.0, n)

    # -- radio ------------------------------------------------------------
    def _segments(self) -> np.ndarray:
        return np.floor(self.pos / self.config.inter_site_distance).astype(np.int64)

    def _rsrp_matrix(self) -> np.ndarray:
        c = self.config
        dx = self.pos[:, None] - self._cell_xy[None, :, 0]
        dy = self.lane[:, None] - self._cell_xy[None, :, 1]
        d = np.maximum(np.hypot(dx, dy), 1.0)
        return self._tx[None, :] - (c.pathloss_ref_db + 10.0 * c.pathloss_exponent * np.log10(d)) + self.shadow

    def attached(self) -> np.ndarray:
        return np.bincount(self.serving, minlength=len(self.topology))

    def loads(self) -> np.ndarray:
        return np.clip(self.bg_load + self.attached() * self.config.per_user_load, 0.0, 1.0)

    def _sinr(self, loads: np.ndarray) -> np.ndarray:
        rx = 10.0 ** (self.rsrp / 10.0)
        signal = rx[self._rows, self.serving]
        interference = rx @ loads - signal * loads[self.serving]
        return signal / (interference + self._noise_mw)

    # -- one tick -----------------------------------------------------------
    def step(self) -> None:
        c = self.config
        k = self.tick_index
        measuring = k >= self.warmup_ticks
        if k == self.warmup_ticks:
            self.counters["calls_total"] += 1  # calls already in progress

        self.tick_index += 1
        self.time += c.tick
        self.pos = self.pos + c.speed_mps * c.tick / 1000.0
        if k > 0 and k % self.ticks_per_cycle == 0:
            self.bg_load = self._draw_background()
        seg = self._segments()
        for u in np.flatnonzero(seg != self.segment):
            self.shadow[u] = self.rng.normal(0.0, c.shadowing_sigma, len(self.topology))
        self.segment = seg
        self.rsrp = self._rsrp_matrix()

        if self.serving.min() < 0 or self.serving.max() >= len(self.topology):
            raise SimulationError("user attached to a non-existent cell")

        attached = self.attached()
        loads = np.clip(self.bg_load + attached * c.per_user_load, 0.0, 1.0)
        sinr = self._sinr(loads)
        self.sinr_db = 10.0 * np.log10(sinr)
        if measuring:
            share = attached[self.serving] + self.bg_load[self.serving] / max(c.per_user_load, 1e-12)
            se = np.log2(1.0 + sinr)
            self._se_sum += se.sum()
            self._tput_sum += (c.carrier_bandwidth / share * se).sum() / 1e6
            self._load_sum += loads[self.serving].sum()
            self._samples += len(sinr)
            self.measured_ticks += 1

        # radio link monitoring
        self.rlf_elapsed = np.where(self.sinr_db < c.rlf_sinr_threshold, self.rlf_elapsed + c.tick, 0.0)
        failed = self.rlf_elapsed >= c.rlf_timer
        for u in np.flatnonzero(failed):
            best = int(self.rsrp[u].argmax())
            self.events.append(HandoverEvent(self.time, int(u), int(self.serving[u]), best, "rlf"))
            if best != self.serving[u]:
                self.prev_cell[u] = self.serving[u]
                self.serving[u] = best
                self.time_since_ho[u] = np.inf
            self._drop_call(u, measuring)
            if measuring:
                self.counters["rlf_events"][u] += 1
        self.rlf_elapsed[failed] = 0.0

        # A3 / time-to-trigger
        hom_eff = np.where(loads[self.serving] >= c.load_threshold, c.hom, 0.0)
        targets = select_targets(self.rsrp, self.serving, loads, c.load_threshold)
        valid = (targets >= 0) & ~failed
        safe_t = np.where(valid, targets, 0)
        a3 = valid & (self.rsrp[self._rows, safe_t] + hom_eff > self.rsrp[self._rows, self.serving])
        same = a3 & (self.cand_target == targets)
        self.cand_elapsed = np.where(same, np.minimum(self.cand_elapsed + c.tick, c.ttt), 0.0)
        self.cand_target = np.where(a3, targets, -1)
        for u in np.flatnonzero(a3 & (self.cand_elapsed >= c.ttt)):
            self._execute_handover(int(u), int(targets[u]), measuring)

        # call holding
        self.call_remaining = self.call_remaining - c.tick
        for u in np.flatnonzero(self.call_remaining <= 0):
            self.call_remaining[u] += self._draw_calls(1)[0]
            if measuring:
                self.counters["calls_total"][u] += 1

        self.time_since_ho = self.time_since_ho + c.tick

    def _drop_call(self, u: int, measuring: bool) -> None:
        self.call_remaining[u] = self._draw_calls(1)[0]
        if measuring:
            self.counters["call_drops"][u] += 1
            self.counters["calls_total"][u] += 1

    def _execute_handover(self, u: int, target: int, measuring: bool) -> None:
        c = self.config
        source = int(self.serving[u])
        self.cand_target[u] = -1
        self.cand_elapsed[u] = 0.0
        if measuring:
            self.counters["ho_attempts"][u] += 1
        attached = self.attached()
        if self.bg_load[target] + (attached[target] + 1) * c.per_user_load > 1.0:
            self.events.append(HandoverEvent(self.time, u, source, target, "blocked"))
            self._drop_call(u, measuring)
            return
        pingpong = target == self.prev_cell[u] and self.time_since_ho[u] <= c.pingpong_window
        if measuring:
            self.counters["ho_success"][u] += 1
            self.counters["ho_pingpong"][u] += int(pingpong)
        self.events.append(HandoverEvent(self.time, u, source, target, "pingpong" if pingpong else "success"))
        self.prev_cell[u] = source
        self.serving[u] = target
        self.time_since_ho[u] = 0.0
        self.rlf_elapsed[u] = 0.0

    # -- inspection ---------------------------------------------------------
    def users(self) -> list[UserState]:
        out = []
        for u in range(self.config.num_measured_users):
            cand = None
            if self.cand_target[u] >= 0:
                cand = (int(self.cand_target[u]), float(self.cand_elapsed[u]))
            out.append(UserState(
                user_id=u,
                position=float(self.pos[u]),
                serving_cell=int(self.serving[u]),
                ttt_candidate=cand,
                time_since_last_ho=float(self.time_since_ho[u]),
                previous_cell=None if self.prev_cell[u] < 0 else int(self.prev_cell[u]),
                rlf_timer_elapsed=float(self.rlf_elapsed[u]),
                session_active=True,
                counters={k: int(v[u]) for k, v in self.counters.items()},
            ))
        return out

    def cells(self) -> list[CellState]:
        attached, loads = self.attached(), self.loads()
        return [CellState(i, float(loads[i]), float(self.bg_load[i]), int(attached[i]))
                for i in range(len(self.topology))]

    def totals(self) -> dict:
        return {k: int(v.sum()) for k, v in self.counters.items()}

    def kpis(self) -> KpiRecord:
        c = self.config
        tot = self.totals()
        n = max(self._samples, 1)
        cycles = self.measured_ticks / self.ticks_per_cycle
        hop_den = c.num_measured_users * cycles
        return KpiRecord(
            hom=float(c.hom),
            ttt=float(c.ttt),
            L=float(100.0 * self._load_sum / n),
            T=float(self._tput_sum / n),
            CDR=100.0 * tot["call_drops"] / tot["calls_total"] if tot["calls_total"] else 0.0,
            RLF=100.0 * tot["rlf_events"] / tot["ho_attempts"] if tot["ho_attempts"] else 0.0,
            SE=float(self._se_sum / n),
            HOPP=100.0 * tot["ho_pingpong"] / tot["ho_success"] if tot["ho_success"] else 0.0,
            HOP=100.0 * tot["ho_success"] / hop_den if hop_den else 0.0,
        )


def simulate(config: SimConfig, initial_positions=None) -> SimResult:
    sim = Simulation(config, initial_positions=initial_positions)
    for _ in range(sim.n_ticks):
        sim.step()
    return SimResult(sim.kpis(), sim.totals(), sim.events)


def run_simulation(config: SimConfig) -> KpiRecord:
    return simulate(config).kpis
