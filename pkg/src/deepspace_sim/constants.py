"""Physical constants (CODATA 2018, SI units)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field


def _electron_radius(e: float, m_e: float, eps0: float, c: float) -> float:
    return e**2 / (4.0 * math.pi * c**2 * eps0 * m_e)


@dataclass(frozen=True)
class PhysicalConstants:
    electron_charge: float = 1.602176634e-19        # C (exact)
    electron_mass: float = 9.1093837015e-31         # kg
    vacuum_permittivity: float = 8.8541878128e-12   # F/m
    speed_of_light: float = 299792458.0             # m/s (exact)
    boltzmann: float = 1.380649e-23                 # J/K (exact)
    sun_radius: float = 6.957e8                     # m (IAU nominal)
    # Derived from the fields above rather than copied from the CODATA table,
    # whose rounded r_e differs from e^2/(4 pi c^2 eps0 m_e) at 2e-12.
    classical_electron_radius: float = field(init=False)

    def __post_init__(self):
        for name in ("electron_charge", "electron_mass", "vacuum_permittivity",
                     "speed_of_light", "boltzmann", "sun_radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        object.__setattr__(
            self, "classical_electron_radius",
            _electron_radius(self.electron_charge, self.electron_mass,
                             self.vacuum_permittivity, self.speed_of_light))


CONSTANTS = PhysicalConstants()

C = CONSTANTS.speed_of_light
K_B = CONSTANTS.boltzmann


def wavelength(frequency_hz: float) -> float:
    if frequency_hz <= 0:
        raise ValueError("frequency must be positive")
    return C / frequency_hz


def wavenumber(wavelength_m: float) -> float:
    return 2.0 * math.pi / wavelength_m


def db(x):
    """Power ratio to decibels."""
    return 10.0 * math.log10(x)
