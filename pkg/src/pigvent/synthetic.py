"""Deterministic synthetic weather and pseudo-observations.

Outdoor temperature is a diurnal sine plus a slow seasonal drift and AR(1)
weather noise; moisture content is held near a daily dew point, so relative
humidity falls in the afternoon as it does in real records. An optional
evaporative cooling pad conditions the inlet air adiabatically: enthalpy is
conserved while the temperature drops a fraction ``pad_efficiency`` of the way
to the wet-bulb temperature.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Optional

import numpy as np

from . import psychro
from .plant import ExogenousSeries, HouseState, PlantParams, simulate


@dataclass(frozen=True)
class Climate:
    """Parameters of the synthetic outdoor climate.

    Temperatures in degC, relative humidity in %, times in hours.
    """

    mean_temperature: float = 20.0
    daily_amplitude: float = 5.0
    drift_per_day: float = 0.0
    noise_std: float = 0.8
    noise_correlation_hours: float = 6.0
    mean_relative_humidity: float = 65.0
    peak_hour: float = 15.0
    pad_on_temperature: Optional[float] = None
    pad_efficiency: float = 0.8
    extra_gain_amplitude: float = 0.0


def wet_bulb_temperature(t, d, pressure=psychro.ATMOSPHERIC_PRESSURE):
    """Adiabatic-saturation temperature of air at ``t`` degC and humidity ``d``.

    Found by bisection on the saturated enthalpy, which is increasing in
    temperature.
    """
    t = np.asarray(t, dtype=float)
    h = psychro.enthalpy(t, d)
    lo = np.full_like(t, -40.0)
    hi = t.copy()
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        above = psychro.enthalpy(mid, psychro.saturation_specific_humidity(mid, pressure)) > h
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return 0.5 * (lo + hi)


def cooling_pad(t_out, rh_out, efficiency, pressure=psychro.ATMOSPHERIC_PRESSURE):
    """Inlet temperature and RH after an evaporative pad (constant enthalpy)."""
    t_out = np.asarray(t_out, dtype=float)
    d_out = psychro.specific_humidity(t_out, rh_out, pressure)
    h = psychro.enthalpy(t_out, d_out)
    t_in = t_out - efficiency * (t_out - wet_bulb_temperature(t_out, d_out, pressure))
    d_in = (h - psychro.CP_DRY_AIR * t_in) / (psychro.LATENT_HEAT + psychro.CP_VAPOUR * t_in)
    rh_in = np.minimum(psychro.relative_humidity_from_specific(t_in, d_in, pressure), 100.0)
    return t_in, rh_in


def weather(climate: Climate, days: float, dt: float = 600.0, seed: int = 0,
            start: datetime = datetime(2024, 7, 1)) -> ExogenousSeries:
    """Generate ``days`` of exogenous inputs at ``dt`` seconds."""
    n = int(round(days * 86400 / dt))
    rng = np.random.default_rng(seed)
    hours = np.arange(n) * dt / 3600.0
    phi = np.exp(-dt / 3600.0 / climate.noise_correlation_hours)
    shocks = rng.normal(0.0, climate.noise_std * np.sqrt(1 - phi ** 2), n)
    noise = np.empty(n)
    acc = rng.normal(0.0, climate.noise_std)
    for k in range(n):
        acc = phi * acc + shocks[k]
        noise[k] = acc
    diurnal = np.cos(2 * np.pi * (hours - climate.peak_hour) / 24.0)
    t_out = climate.mean_temperature + climate.drift_per_day * hours / 24.0 + climate.daily_amplitude * diurnal + noise

    # hold moisture at the level of the daily-mean state, with a small wobble
    t_mean = climate.mean_temperature + climate.drift_per_day * hours / 24.0
    d_mean = psychro.specific_humidity(t_mean, climate.mean_relative_humidity)
    d = d_mean * (1.0 + 0.05 * np.sin(2 * np.pi * hours / 71.0))
    d = np.minimum(d, 0.98 * psychro.saturation_specific_humidity(t_out))
    rh_out = np.clip(psychro.relative_humidity_from_specific(t_out, d), 0.0, 100.0)

    t_in, rh_in = t_out.copy(), rh_out.copy()
    if climate.pad_on_temperature is not None:
        on = t_out > climate.pad_on_temperature
        pad_t, pad_rh = cooling_pad(t_out[on], rh_out[on], climate.pad_efficiency)
        t_in[on], rh_in[on] = pad_t, pad_rh

    gain = climate.extra_gain_amplitude * np.maximum(diurnal, 0.0)
    stamps = [start + timedelta(seconds=k * dt) for k in range(n)]
    return ExogenousSeries(t_in, rh_in, t_out, gain, stamps)


def ventilation_schedule(exo: ExogenousSeries, u_min: float = 4.0, u_max: float = 120.0,
                         setpoint: float = 18.0, bandwidth: float = 10.0) -> np.ndarray:
    """A smooth, plausible recorded ventilation series driven by inlet temperature."""
    frac = np.clip((exo.inlet_temperature - setpoint) / bandwidth, 0.0, 1.0)
    return u_min + (u_max - u_min) * frac


def pseudo_observations(initial: HouseState, exo: ExogenousSeries, params: PlantParams, ventilation,
                        noise_std: float = 0.0, rh_noise_std: Optional[float] = None, seed: int = 0,
                        dt: float = 600.0):
    """Simulated indoor temperature and RH with additive Gaussian sensor noise.

    RH noise defaults to ``noise_std`` as well; noisy RH is clipped to [0, 100].
    """
    log = simulate(initial, ventilation, exo, params, dt)
    rng = np.random.default_rng(seed)
    rh_std = noise_std if rh_noise_std is None else rh_noise_std
    t_obs = log.indoor_temperature + (rng.normal(0.0, noise_std, len(log)) if noise_std > 0 else 0.0)
    rh_obs = log.indoor_rh + (rng.normal(0.0, rh_std, len(log)) if rh_std > 0 else 0.0)
    return t_obs, np.clip(rh_obs, 0.0, 100.0)
