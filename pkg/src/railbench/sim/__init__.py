from .config import TTT_VALUES_MS, ConfigError, SimConfig, format_config, load_config, parse_config
from .engine import (
    KPI_NAMES,
    CellState,
    HandoverEvent,
    KpiRecord,
    SimResult,
    Simulation,
    SimulationError,
    UserState,
    run_simulation,
    simulate,
)
from .radio import (
    Cell,
    Neighbor,
    Topology,
    a3_condition,
    build_topology,
    effective_hom,
    rsrp,
    select_target,
    select_targets,
)
