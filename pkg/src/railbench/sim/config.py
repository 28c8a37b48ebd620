"""Scenario parameters for one simulation run and the key=value loader."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

HOM_MIN_DB = 0.0
HOM_MAX_DB = 16.0
HOM_STEP_DB = 0.5
TTT_VALUES_MS = (0, 40, 64, 80, 100, 128, 160, 256, 320, 480, 512, 640, 1024, 1280, 2560, 5120)


class ConfigError(ValueError):
    """Invalid scenario parameter. ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class SimConfig:
    """Parameters of a single (HOM, TTT) simulation run.

    Distances are meters, powers dBm, times milliseconds unless the name says
    otherwise (``sim_duration`` and ``mean_call_duration`` are seconds).
    """

    num_sites: int = 39
    cells_per_site: int = 3
    inter_site_distance: float = 500.0
    track_offset: float = 50.0
    tx_power: float = 30.0
    carrier_bandwidth: float = 20e6
    noise_power: float = -94.0
    pathloss_exponent: float = 3.5
    pathloss_ref_db: float = 30.0
    shadowing_sigma: float = 4.0
    user_speed: float = 400.0
    tick: float = 40.0
    num_measured_users: int = 15
    sim_duration: float = 60.0
    hom: float = 0.0
    ttt: float = 0.0
    load_threshold: float = 0.65
    rlf_sinr_threshold: float = -8.0
    rlf_timer: float = 1000.0
    pingpong_window: float = 1000.0
    background_load_range: tuple[float, float] = (0.3, 0.9)
    seed: int = 0
    # not named by the scenario description; fixed modelling choices
    per_user_load: float = 0.05
    measurement_cycle: float = 1000.0
    warmup_fraction: float = 0.1
    mean_call_duration: float = 30.0
    lane_spread: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "background_load_range", tuple(float(v) for v in self.background_load_range))
        self.validate()

    def validate(self) -> None:
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            values = value if isinstance(value, tuple) else (value,)
            for v in values:
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ConfigError(f.name, f"expected a number, got {v!r}")
                if not math.isfinite(v):
                    raise ConfigError(f.name, "must be finite")

        for name in ("num_sites", "cells_per_site", "num_measured_users"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigError(name, "must be a positive integer")
        for name in ("inter_site_distance", "tick", "user_speed", "sim_duration",
                     "measurement_cycle", "mean_call_duration", "carrier_bandwidth"):
            if getattr(self, name) <= 0:
                raise ConfigError(name, "must be > 0")
        for name in ("track_offset", "shadowing_sigma", "rlf_timer", "pingpong_window",
                     "per_user_load", "lane_spread", "pathloss_exponent"):
            if getattr(self, name) < 0:
                raise ConfigError(name, "must be >= 0")

        if not HOM_MIN_DB <= self.hom <= HOM_MAX_DB or (self.hom / HOM_STEP_DB) % 1 != 0:
            raise ConfigError("hom", f"must lie in [0, 16] dB on a 0.5 dB grid, got {self.hom}")
        if self.ttt not in TTT_VALUES_MS:
            raise ConfigError("ttt", f"must be one of {TTT_VALUES_MS}, got {self.ttt}")
        if not 0 < self.load_threshold < 1:
            raise ConfigError("load_threshold", "must lie strictly between 0 and 1")
        if not 0 <= self.warmup_fraction < 1:
            raise ConfigError("warmup_fraction", "must lie in [0, 1)")
        lo, hi = self.background_load_range
        if len(self.background_load_range) != 2 or not 0 <= lo <= hi <= 1:
            raise ConfigError("background_load_range", "must be two fractions lo <= hi in [0, 1]")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")

    @property
    def num_cells(self) -> int:
        return self.num_sites * self.cells_per_site

    @property
    def num_ticks(self) -> int:
        return int(round(self.sim_duration * 1000.0 / self.tick))

    @property
    def ticks_per_cycle(self) -> int:
        return max(1, int(round(self.measurement_cycle / self.tick)))

    @property
    def speed_mps(self) -> float:
        return self.user_speed / 3.6

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


_INT_FIELDS = {"num_sites", "cells_per_site", "num_measured_users", "seed"}


def parse_config(text: str, base: SimConfig | None = None) -> SimConfig:
    """Parse ``key=value`` lines into a :class:`SimConfig`.

    Blank lines and ``#`` comments are ignored. Keys are SimConfig field
    names; ``background_load_range`` takes two comma-separated fractions.
    """
    known = {f.name for f in dataclasses.fields(SimConfig)}
    changes: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(key, f"unknown field (line {lineno})")
        try:
            if key == "background_load_range":
                parts = [float(p) for p in value.replace("[", "").replace("]", "").split(",")]
                if len(parts) != 2:
                    raise ValueError(value)
                changes[key] = tuple(parts)
            elif key in _INT_FIELDS:
                changes[key] = int(value)
            else:
                changes[key] = float(value)
        except ValueError:
            raise ConfigError(key, f"cannot parse {value!r} (line {lineno})") from None
    return dataclasses.replace(base or SimConfig(), **changes)


def load_config(path: str | Path) -> SimConfig:
    return parse_config(Path(path).read_text())


def format_config(config: SimConfig) -> str:
    lines = []
    for f in dataclasses.fields(config):
        v = getattr(config, f.name)
        if isinstance(v, tuple):
            v = ",".join(repr(x) for x in v)
        lines.append(f"{f.name}={v}")
    return "\n".join(lines) + "\n"
