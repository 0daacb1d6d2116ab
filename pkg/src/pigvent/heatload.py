"""Sensible heat sources of a pig room.

All heat flows are in W and positive when they add heat to the indoor air.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

STEFAN_BOLTZMANN = 5.67e-8  # W/(m2 K4)
KELVIN_OFFSET = 273.0  # the pig model works with a rounded offset


def pig_surface_area(weight):
    """Body surface area of a pig (m2) from live weight (kg)."""
    if np.any(np.asarray(weight) <= 0):
        raise ValueError(f"pig weight must be positive, got {weight}")
    return 0.09 * weight ** 0.66


def convective_coefficient(air_speed, weight):
    """Convective heat-transfer coefficient of pig skin, W/(m2 degC)."""
    if weight <= 0:
        raise ValueError(f"pig weight must be positive, got {weight}")
    if air_speed < 0:
        raise ValueError(f"air speed must be non-negative, got {air_speed}")
    return 15.0 * air_speed ** 0.6 * weight ** -0.13


@dataclass(frozen=True)
class PigGroup:
    """A homogeneous group of pigs.

    ``emissivity`` of pig skin is not reported by the source model; 0.95 is
    the usual value for animal skin.
    """

    count: int
    weight: float
    air_speed: float = 0.2
    skin_temperature: float = 30.0
    emissivity: float = 0.95

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("pig count must be non-negative")
        if self.weight <= 0:
            raise ValueError("pig weight must be positive")
        if self.air_speed < 0:
            raise ValueError("air speed must be non-negative")
        if not 0 <= self.emissivity <= 1:
            raise ValueError("emissivity must lie in [0, 1]")

    @cached_property
    def surface_area(self) -> float:
        return pig_surface_area(self.weight)

    @cached_property
    def convective_coefficient(self) -> float:
        return convective_coefficient(self.air_speed, self.weight)

    @cached_property
    def radiative_conductance(self) -> float:
        """n * A_p * eps * sigma, W/K4."""
        return self.count * self.surface_area * self.emissivity * STEFAN_BOLTZMANN

    @cached_property
    def convective_conductance(self) -> float:
        """n * A_p * h_c, W/K."""
        return self.count * self.surface_area * self.convective_coefficient


@dataclass(frozen=True)
class Envelope:
    """Insulation layer. Polyurethane conducts 0.02-0.03 W/(m K)."""

    conductivity: float = 0.025
    area: float = 200.0
    thickness: float = 0.05

    def __post_init__(self):
        for name in ("conductivity", "area", "thickness"):
            if not getattr(self, name) > 0:
                raise ValueError(f"envelope {name} must be positive")

    @cached_property
    def conductance(self) -> float:
        """k * A / d, W/K."""
        return self.conductivity * self.area / self.thickness


@dataclass(frozen=True)
class HeatBreakdown:
    q_pig: float
    q_envelope: float
    q_devices: float
    q_total: float


def pig_heat(group: PigGroup, indoor_temp):
    """Radiative plus convective heat released by the group into the air (W)."""
    ts = group.skin_temperature + KELVIN_OFFSET
    ti = np.asarray(indoor_temp, dtype=float) + KELVIN_OFFSET
    radiative = group.radiative_conductance * (ts ** 4 - ti ** 4)
    convective = group.convective_conductance * (group.skin_temperature - np.asarray(indoor_temp, dtype=float))
    out = radiative + convective
    return out if out.ndim else float(out)


def envelope_heat(env: Envelope, indoor_temp, outdoor_temp):
    """Conductive gain through the insulation (W); negative when losing heat."""
    out = env.conductance * (np.asarray(outdoor_temp, dtype=float) - np.asarray(indoor_temp, dtype=float))
    return out if out.ndim else float(out)


def total_heat(group: PigGroup, env: Envelope, q_devices, indoor_temp, outdoor_temp) -> HeatBreakdown:
    q_pig = pig_heat(group, indoor_temp)
    q_env = envelope_heat(env, indoor_temp, outdoor_temp)
    return HeatBreakdown(q_pig, q_env, q_devices, q_pig + q_env + q_devices)
