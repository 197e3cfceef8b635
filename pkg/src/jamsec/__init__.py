"""Buffer-aided link under an energy-harvesting jam/eavesdrop attacker."""

from .params import (AttackerPolicy, ConfigError, DerivedParams, InfeasibleError,
                     SystemConfig, db_to_linear, derive, linear_to_db)
from .sim import SimFlags, SimReport, run

__version__ = "0.1.0"

__all__ = [
    "AttackerPolicy", "ConfigError", "DerivedParams", "InfeasibleError", "SimFlags",
    "SimReport", "SystemConfig", "db_to_linear", "derive", "linear_to_db", "run",
]
