"""Moist-air properties at a fixed atmospheric pressure.

Every function accepts scalars or numpy arrays. Temperatures are in degC,
pressures in kPa, relative humidity in percent (0-100), specific humidity
in kg water vapour per kg dry air and enthalpy in kJ per kg dry air.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import PsychroDomainError

ATMOSPHERIC_PRESSURE = 101.3  # kPa

MOLAR_MASS_RATIO = 0.622
CP_DRY_AIR = 1.006  # kJ/(kg K)
CP_VAPOUR = 1.86  # kJ/(kg K)
LATENT_HEAT = 2501.0  # kJ/kg at 0 degC

_MAGNUS_A = 0.6108
_MAGNUS_B = 17.27
_MAGNUS_C = 237.3


def _check_pressure(pressure):
    if not pressure > 0:
        raise PsychroDomainError(f"atmospheric pressure must be positive, got {pressure}")


def _psat(t, exp=np.exp):
    # unchecked kernel for callers that mask invalid entries themselves
    return _MAGNUS_A * exp(_MAGNUS_B * t / (t + _MAGNUS_C))


def saturation_vapor_pressure(temperature):
    """Saturation vapour pressure over water (kPa), Magnus/Tetens form."""
    t = np.asarray(temperature, dtype=float)
    if np.any(t <= -_MAGNUS_C):
        raise PsychroDomainError(f"temperature must exceed {-_MAGNUS_C} degC")
    out = _psat(t)
    return out if out.ndim else float(out)


def vapor_pressure(temperature, relative_humidity):
    """Partial pressure of water vapour (kPa) at the given RH (%)."""
    rh = np.asarray(relative_humidity, dtype=float)
    if np.any((rh < 0) | (rh > 100)) or np.any(np.isnan(rh)):
        raise PsychroDomainError(f"relative humidity must lie in [0, 100] %, got {relative_humidity}")
    out = saturation_vapor_pressure(temperature) * rh / 100.0
    return out if np.ndim(out) else float(out)


def specific_humidity(temperature, relative_humidity, pressure=ATMOSPHERIC_PRESSURE):
    """Specific humidity (kg/kg) from dry-bulb temperature and RH."""
    _check_pressure(pressure)
    pv = np.asarray(vapor_pressure(temperature, relative_humidity))
    if np.any(pv >= pressure):
        raise PsychroDomainError("vapour pressure reaches total pressure")
    out = MOLAR_MASS_RATIO * pv / (pressure - pv)
    return out if out.ndim else float(out)


def enthalpy(temperature, humidity):
    """Specific enthalpy (kJ/kg dry air): sensible plus latent heat."""
    d = np.asarray(humidity, dtype=float)
    if np.any(d < 0):
        raise PsychroDomainError("specific humidity must be non-negative")
    t = np.asarray(temperature, dtype=float)
    out = CP_DRY_AIR * t + (LATENT_HEAT + CP_VAPOUR * t) * d
    return out if out.ndim else float(out)


def temperature_from_enthalpy(h, humidity):
    """Dry-bulb temperature that gives enthalpy ``h`` at specific humidity ``humidity``.

    Exact inverse of :func:`enthalpy` in its first argument.
    """
    d = np.asarray(humidity, dtype=float)
    if np.any(d < 0):
        raise PsychroDomainError("specific humidity must be non-negative")
    out = (np.asarray(h, dtype=float) - LATENT_HEAT * d) / (CP_DRY_AIR + CP_VAPOUR * d)
    return out if out.ndim else float(out)


def relative_humidity_from_specific(temperature, humidity, pressure=ATMOSPHERIC_PRESSURE):
    """Relative humidity (%) of air at ``temperature`` holding ``humidity`` kg/kg.

    Not clamped: supersaturated air reports values above 100.
    """
    _check_pressure(pressure)
    d = np.asarray(humidity, dtype=float)
    if np.any(d < 0):
        raise PsychroDomainError("specific humidity must be non-negative")
    pv = d * pressure / (MOLAR_MASS_RATIO + d)
    out = 100.0 * pv / saturation_vapor_pressure(temperature)
    return out if np.ndim(out) else float(out)


def saturation_specific_humidity(temperature, pressure=ATMOSPHERIC_PRESSURE):
    """Specific humidity of saturated air (kg/kg)."""
    return specific_humidity(temperature, 100.0, pressure)


@dataclass(frozen=True)
class MoistAir:
    """Psychrometric state of an air stream.

    Parameters
    ----------
    temperature : float
        Dry-bulb temperature, degC.
    specific_humidity : float
        kg water vapour per kg dry air; must not exceed saturation.
    pressure : float
        Atmospheric pressure, kPa.
    """

    temperature: float
    specific_humidity: float
    pressure: float = ATMOSPHERIC_PRESSURE

    def __post_init__(self):
        _check_pressure(self.pressure)
        if self.specific_humidity < 0:
            raise PsychroDomainError("specific humidity must be non-negative")
        if self.relative_humidity > 100.0 + 1e-9:
            raise PsychroDomainError(
                f"air at {self.temperature} degC cannot hold {self.specific_humidity} kg/kg"
            )

    @classmethod
    def from_relative_humidity(cls, temperature, relative_humidity, pressure=ATMOSPHERIC_PRESSURE):
        d = specific_humidity(temperature, relative_humidity, pressure)
        return cls(float(temperature), d, pressure)

    @property
    def enthalpy(self) -> float:
        return enthalpy(self.temperature, self.specific_humidity)

    @property
    def relative_humidity(self) -> float:
        return relative_humidity_from_specific(self.temperature, self.specific_humidity, self.pressure)
