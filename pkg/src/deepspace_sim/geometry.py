"""Earth-orbiter to Moon-orbiter link geometry."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class LinkGeometry:
    """Distances bounding the inter-satellite path.

    The closest approach is the Earth-Moon distance itself; the longest path
    has the two orbiters at opposite edges of their coverage half-spheres.
    """

    earth_moon_distance_m: float = 3.844e8
    orbit_height_1_m: float = 37_786_000.0
    orbit_height_2_m: float = 37_786_000.0

    def __post_init__(self):
        if not self.earth_moon_distance_m > 0:
            raise ValueError("earth_moon_distance_m must be > 0")
        for name in ("orbit_height_1_m", "orbit_height_2_m"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def min_distance(self) -> float:
        return self.earth_moon_distance_m

    @property
    def max_distance(self) -> float:
        h = self.orbit_height_1_m + self.orbit_height_2_m
        return math.hypot(self.earth_moon_distance_m + h, h)


def sample_link_distance(geometry: LinkGeometry, u: float) -> float:
    """Map a uniform variate ``u`` in [0, 1] linearly onto [min, max] distance."""
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"u must lie in [0, 1], got {u!r}")
    lo, hi = geometry.min_distance, geometry.max_distance
    return (1.0 - u) * lo + u * hi
