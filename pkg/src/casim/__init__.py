"""Frame-level simulator for carrier scheduling in LTE-A carrier aggregation."""

from .config import PRESETS, config_from_mapping, parse_config, preset
from .engine import ConfigError, Engine, RunResult, SimConfig, run, simulate
from .eventlog import EventKind, EventLog
from .metrics import MetricsReport, evaluate, qoe_coefficient
from .schedulers import SchedulerKind
from .traffic import Workload, generate_workload

__all__ = [
    "PRESETS",
    "ConfigError",
    "Engine",
    "EventKind",
    "EventLog",
    "MetricsReport",
    "RunResult",
    "SchedulerKind",
    "SimConfig",
    "Workload",
    "config_from_mapping",
    "evaluate",
    "generate_workload",
    "parse_config",
    "preset",
    "qoe_coefficient",
    "run",
    "simulate",
]
