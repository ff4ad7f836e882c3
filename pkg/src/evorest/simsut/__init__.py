"""Deterministic in-process simulated SUT + driver for desk-scale testing."""

from .service import SimService, SimulatedConnectionRefused, SimulatedTimeout, load_fixture
from .wire import serve

__all__ = [
    "SimService",
    "SimulatedConnectionRefused",
    "SimulatedTimeout",
    "load_fixture",
    "serve",
]
