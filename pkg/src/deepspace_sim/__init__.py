"""Earth-Moon inter-satellite link simulator with reflectarray antennas and solar plasma."""
from __future__ import annotations

__version__ = "0.1.0"

from .config import ScenarioConfig, load_config
from .constants import CONSTANTS, PhysicalConstants
from .geometry import LinkGeometry, sample_link_distance

__all__ = ["CONSTANTS", "LinkGeometry", "PhysicalConstants", "ScenarioConfig",
           "load_config", "sample_link_distance", "__version__"]
