"""Repage reputation memory inside a seeded marketplace simulator."""

from .agents import Level
from .engine import ConfigError, SimConfig, run, simulate
from .memory import RepageMemory, Role

__all__ = ["ConfigError", "Level", "RepageMemory", "Role", "SimConfig", "run", "simulate"]
__version__ = "0.1.0"
