"""Autonomous mobility-on-demand dispatch simulator."""

from ._amod import (
    ComparisonMismatch,
    ConfigError,
    LoadError,
    RunConfig,
    compare,
    haversine_m,
    load_config,
    rate_improvement_pct,
    run,
    time_improvement_pct,
    validate,
)

__all__ = [
    "ComparisonMismatch",
    "ConfigError",
    "LoadError",
    "RunConfig",
    "compare",
    "haversine_m",
    "load_config",
    "rate_improvement_pct",
    "run",
    "time_improvement_pct",
    "validate",
]
