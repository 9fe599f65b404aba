"""
Exception types shared by the simulator, the harness and the CLI
"""
from typing import List, Optional


class SimulationError(Exception):
    """Base class for every error raised by this package"""


class InvalidArgumentError(SimulationError, ValueError):
    """Out-of-range sites, odd chain lengths, mismatched sizes and the like"""


class UnsupportedConfigurationError(SimulationError):
    """A request that is valid in general but not for this chain layout"""


class FitUnavailableError(SimulationError):
    """Not enough usable points inside a fit window"""


class ConfigError(InvalidArgumentError):
    """Invalid run configuration or config file"""


class OutputError(SimulationError, OSError):
    """Result files could not be written"""


class InvariantViolationError(SimulationError):
    """One or more invariant checks failed"""

    def __init__(self, message: str, failures: Optional[List[str]] = None):
        super().__init__(message)
        self.failures = list(failures or [])
