"""Enthalpy-balance ventilation model of a pig room.

Indoor air is treated as the inlet stream (air after the cooling pad) that has
picked up the room's sensible heat and the animals' moisture. Given a
ventilation rate per animal the balance fixes indoor enthalpy and specific
humidity, from which temperature and relative humidity follow.

Units: W for heat, m3/h for air flow, kJ/kg for enthalpy, kg/kg for specific
humidity, s for time steps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from typing import Optional, Sequence

import numpy as np

from . import psychro
from .exceptions import InfeasibleVentilation, SimulationError
from .heatload import KELVIN_OFFSET, Envelope, HeatBreakdown, PigGroup, envelope_heat, pig_heat
from .psychro import CP_DRY_AIR, CP_VAPOUR, LATENT_HEAT, MOLAR_MASS_RATIO

SECONDS_PER_HOUR = 3600.0
JOULE_PER_WH = 3.6  # kJ/h per W

_NEWTON_TOL = 1e-11
_NEWTON_MAXITER = 60
_SUPERSATURATION_TOL = 1e-9
_DEFAULT_START = datetime(2024, 1, 1)


@dataclass(frozen=True)
class HouseState:
    indoor_temperature: float
    indoor_relative_humidity: float


@dataclass(frozen=True)
class Exogenous:
    """Boundary conditions for one time step.

    ``inlet_*`` describe the air entering the room (after the cooling pad);
    ``outdoor_real_temperature`` is the ambient air outside the envelope.
    """

    inlet_temperature: float
    inlet_relative_humidity: float
    outdoor_real_temperature: float
    extra_gain: float = 0.0

    def __post_init__(self):
        if not 0 <= self.inlet_relative_humidity <= 100:
            raise ValueError("inlet relative humidity must lie in [0, 100] %")


@dataclass(frozen=True)
class ExogenousSeries:
    """Column-oriented exogenous inputs for a run."""

    inlet_temperature: np.ndarray
    inlet_relative_humidity: np.ndarray
    outdoor_real_temperature: np.ndarray
    extra_gain: Optional[np.ndarray] = None
    timestamps: Optional[Sequence[datetime]] = None

    def __post_init__(self):
        n = len(self.inlet_temperature)
        for name in ("inlet_temperature", "inlet_relative_humidity", "outdoor_real_temperature"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{name} must be one-dimensional with length {n}")
            object.__setattr__(self, name, arr)
        gain = np.zeros(n) if self.extra_gain is None else np.asarray(self.extra_gain, dtype=float)
        if gain.shape != (n,):
            raise ValueError(f"extra_gain must have length {n}")
        object.__setattr__(self, "extra_gain", gain)
        if self.timestamps is not None:
            object.__setattr__(self, "timestamps", tuple(self.timestamps))
            if len(self.timestamps) != n:
                raise ValueError(f"timestamps must have length {n}")
        rh = self.inlet_relative_humidity
        if np.any((rh < 0) | (rh > 100)):
            raise ValueError("inlet relative humidity must lie in [0, 100] %")

    def __len__(self):
        return len(self.inlet_temperature)

    def __getitem__(self, key):
        if isinstance(key, slice):
            ts = None if self.timestamps is None else self.timestamps[key]
            return ExogenousSeries(
                self.inlet_temperature[key],
                self.inlet_relative_humidity[key],
                self.outdoor_real_temperature[key],
                self.extra_gain[key],
                ts,
            )
        return Exogenous(
            float(self.inlet_temperature[key]),
            float(self.inlet_relative_humidity[key]),
            float(self.outdoor_real_temperature[key]),
            float(self.extra_gain[key]),
        )

    @classmethod
    def constant(cls, exo: Exogenous, length: int, timestamps=None):
        return cls(
            np.full(length, exo.inlet_temperature),
            np.full(length, exo.inlet_relative_humidity),
            np.full(length, exo.outdoor_real_temperature),
            np.full(length, exo.extra_gain),
            timestamps,
        )

    def rows(self) -> list:
        """Per-step ``(inlet_t, inlet_rh, outdoor_t, extra_gain)`` tuples of Python floats."""
        return list(zip(self.inlet_temperature.tolist(), self.inlet_relative_humidity.tolist(),
                        self.outdoor_real_temperature.tolist(), self.extra_gain.tolist()))

    def every(self, stride: int) -> "ExogenousSeries":
        return self[::stride]

    def timestamp(self, k: int, dt: float) -> datetime:
        if self.timestamps is not None:
            return self.timestamps[k]
        return _DEFAULT_START + timedelta(seconds=k * dt)


@dataclass(frozen=True)
class PlantParams:
    """Physical configuration of the room.

    Parameters
    ----------
    pigs, envelope
        Heat sources, see :mod:`pigvent.heatload`.
    room_volume : float
        Air volume of the room, m3. Only used by the mixing mode.
    air_density : float
        kg/m3.
    moisture_production : float
        Water released per animal, kg/h.
    q_devices : float
        Constant heat from lamps and other equipment, W.
    pressure : float
        Atmospheric pressure, kPa.
    animal_places : int, optional
        Number of places the ventilation rate is specified for. Defaults to
        the pig count; set it explicitly for an empty room.
    heat_evaluation : {"implicit", "explicit"}
        "implicit" evaluates the temperature-dependent heat loads at the new
        indoor temperature (solved per step). "explicit" uses the previous
        temperature and is unstable below about 30 m3/h per animal.
    mixing : bool
        If true the indoor air relaxes toward the balance state with the
        room's air-change time constant instead of reaching it within a step.
    """

    pigs: PigGroup
    envelope: Envelope = field(default_factory=Envelope)
    room_volume: float = 1000.0
    air_density: float = 1.2
    moisture_production: float = 0.0
    q_devices: float = 0.0
    pressure: float = psychro.ATMOSPHERIC_PRESSURE
    animal_places: Optional[int] = None
    heat_evaluation: str = "implicit"
    mixing: bool = False

    def __post_init__(self):
        if not self.air_density > 0:
            raise ValueError("air density must be positive")
        if not self.room_volume > 0:
            raise ValueError("room volume must be positive")
        if self.moisture_production < 0:
            raise ValueError("moisture production must be non-negative")
        if not self.pressure > 0:
            raise ValueError("pressure must be positive")
        if self.heat_evaluation not in ("implicit", "explicit"):
            raise ValueError(f"unknown heat evaluation {self.heat_evaluation!r}")
        if self.places <= 0:
            raise ValueError("no animal places: set pigs.count or animal_places")

    @property
    def places(self) -> int:
        return self.pigs.count if self.animal_places is None else self.animal_places

    def with_(self, **changes) -> "PlantParams":
        return replace(self, **changes)


def mixed_enthalpy(inlet_enthalpy, q_total, total_ventilation, density=1.2):
    """Indoor enthalpy (kJ/kg) after the inlet air absorbs ``q_total`` W."""
    if np.any(np.asarray(total_ventilation) <= 0):
        raise InfeasibleVentilation("ventilation rate must be positive")
    return inlet_enthalpy + JOULE_PER_WH * q_total / (density * total_ventilation)


def required_ventilation(q_total, target_indoor_enthalpy, inlet_enthalpy, density=1.2):
    """Ventilation rate (m3/h) that holds indoor enthalpy at the target."""
    dh = target_indoor_enthalpy - inlet_enthalpy
    if abs(dh) < 1e-9:
        raise InfeasibleVentilation("target enthalpy equals inlet enthalpy")
    if q_total * dh < 0:
        raise InfeasibleVentilation(
            f"heat load {q_total:g} W cannot move indoor enthalpy by {dh:g} kJ/kg"
        )
    return JOULE_PER_WH * q_total / (density * dh)


def moisture_update(inlet_specific_humidity, moisture_production_total, total_ventilation, density=1.2):
    """Indoor specific humidity (kg/kg) after absorbing ``moisture_production_total`` kg/h."""
    if np.any(np.asarray(total_ventilation) <= 0):
        raise InfeasibleVentilation("ventilation rate must be positive")
    return inlet_specific_humidity + moisture_production_total / (density * total_ventilation)


@dataclass
class _Advance:
    temperature: np.ndarray
    humidity: np.ndarray
    relative_humidity: np.ndarray
    q_pig: np.ndarray
    q_envelope: np.ndarray
    q_devices: np.ndarray
    q_total: np.ndarray
    h_in: np.ndarray
    h_out: np.ndarray
    condensed: np.ndarray
    ok: np.ndarray


class _ScalarOps:
    exp = staticmethod(math.exp)
    expm1 = staticmethod(math.expm1)
    isfinite = staticmethod(math.isfinite)
    minimum = staticmethod(min)

    @staticmethod
    def where(cond, a, b):
        return a if cond else b

    @staticmethod
    def converged(delta, tol):
        return abs(delta) < tol


class _ArrayOps:
    exp = staticmethod(np.exp)
    expm1 = staticmethod(np.expm1)
    isfinite = staticmethod(np.isfinite)
    minimum = staticmethod(np.minimum)
    where = staticmethod(np.where)

    @staticmethod
    def converged(delta, tol):
        return bool(np.abs(delta).max(initial=0.0) < tol)


def _balance_temperature(params, start, h_out, humidity, gain, outdoor, q_other, xp=_ArrayOps):
    """Indoor temperature at which heat pick-up and enthalpy rise agree.

    Solves T = T(H_out + gain * Q(T), D) by Newton's method. The residual is
    concave and decreasing, so iterates land right of the root after one step
    and then decrease monotonically onto it.
    """
    pigs, env = params.pigs, params.envelope
    a_rad = pigs.radiative_conductance
    g_conv = pigs.convective_conductance
    g_lin = g_conv + env.conductance
    ts = pigs.skin_temperature
    q_const = a_rad * (ts + KELVIN_OFFSET) ** 4 + g_conv * ts + env.conductance * outdoor + q_other
    s = 1.0 / (CP_DRY_AIR + CP_VAPOUR * humidity)
    base = s * (h_out - LATENT_HEAT * humidity)
    k = s * gain
    t = start
    for _ in range(_NEWTON_MAXITER):
        tk = t + KELVIN_OFFSET
        tk3 = tk * tk * tk
        resid = base + k * (q_const - a_rad * tk3 * tk - g_lin * t) - t
        slope = -k * (4.0 * a_rad * tk3 + g_lin) - 1.0
        delta = resid / slope
        t = t - delta
        if xp.converged(delta, _NEWTON_TOL):
            break
    return t


def _advance(params: PlantParams, temperature, humidity, u, inlet_t, inlet_rh, outdoor_t, extra, dt) -> _Advance:
    """Plant update over scalars or equally shaped arrays.

    Never raises: entries with non-positive flow or a non-physical result are
    marked False in ``ok``.
    """
    xp = _ArrayOps if isinstance(u, np.ndarray) or isinstance(temperature, np.ndarray) else _ScalarOps
    rho = params.air_density
    pressure = params.pressure
    flow = params.places * u
    ok = flow > 0
    flow = xp.where(ok, flow, 1.0)

    pv_in = psychro._psat(inlet_t, xp.exp) * inlet_rh / 100.0
    hum_in = MOLAR_MASS_RATIO * pv_in / (pressure - pv_in)
    h_out = CP_DRY_AIR * inlet_t + (LATENT_HEAT + CP_VAPOUR * inlet_t) * hum_in
    hum_target = hum_in + params.pigs.count * params.moisture_production / (rho * flow)
    gain = JOULE_PER_WH / (rho * flow)
    q_dev = params.q_devices + extra

    pigs = params.pigs
    if params.heat_evaluation == "implicit":
        start = xp.where(xp.isfinite(temperature), temperature, inlet_t)
        t_eval = _balance_temperature(params, start, h_out, hum_target, gain, outdoor_t, q_dev, xp)
    else:
        t_eval = temperature
    ts = pigs.skin_temperature
    q_pig = (pigs.radiative_conductance * ((ts + KELVIN_OFFSET) ** 4 - (t_eval + KELVIN_OFFSET) ** 4)
             + pigs.convective_conductance * (ts - t_eval))
    q_env = params.envelope.conductance * (outdoor_t - t_eval)
    q_total = q_pig + q_env + q_dev
    h_target = h_out + gain * q_total

    if params.mixing:
        h_prev = CP_DRY_AIR * temperature + (LATENT_HEAT + CP_VAPOUR * temperature) * humidity
        alpha = -xp.expm1(-dt * flow / (SECONDS_PER_HOUR * params.room_volume))
        h_new = h_prev + alpha * (h_target - h_prev)
        hum_new = humidity + alpha * (hum_target - humidity)
    else:
        h_new, hum_new = h_target, hum_target

    t_new = (h_new - LATENT_HEAT * hum_new) / (CP_DRY_AIR + CP_VAPOUR * hum_new)
    ok = ok & xp.isfinite(t_new) & (t_new > -200.0)
    t_safe = xp.where(ok, t_new, 0.0)
    psat = psychro._psat(t_safe, xp.exp)
    pv = hum_new * pressure / (MOLAR_MASS_RATIO + hum_new)
    rh = 100.0 * pv / psat
    condensed = rh > 100.0 + _SUPERSATURATION_TOL
    hum_sat = MOLAR_MASS_RATIO * psat / (pressure - psat)
    hum_new = xp.where(condensed, hum_sat, hum_new)
    rh = xp.minimum(rh, 100.0)
    return _Advance(t_new, hum_new, rh, q_pig, q_env, q_dev + 0.0 * q_total, q_total, h_new, h_out, condensed, ok)


def _state_humidity(state: HouseState, pressure: float) -> float:
    return psychro.specific_humidity(state.indoor_temperature, state.indoor_relative_humidity, pressure)


def step(state: HouseState, u_per_animal: float, exo: Exogenous, params: PlantParams, dt: float = 600.0) -> HouseState:
    """Advance the indoor state by one time step of ``dt`` seconds."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not u_per_animal > 0:
        raise InfeasibleVentilation(f"ventilation rate must be positive, got {u_per_animal}")
    res = _advance(
        params, float(state.indoor_temperature), _state_humidity(state, params.pressure), float(u_per_animal),
        float(exo.inlet_temperature), float(exo.inlet_relative_humidity), float(exo.outdoor_real_temperature),
        float(exo.extra_gain), dt,
    )
    if not res.ok:
        raise SimulationError("indoor temperature left the physical range")
    return HouseState(float(res.temperature), float(res.relative_humidity))


def heat_breakdown(state: HouseState, exo: Exogenous, params: PlantParams) -> HeatBreakdown:
    """Heat loads evaluated at the given indoor state."""
    t = state.indoor_temperature
    q_pig = pig_heat(params.pigs, t)
    q_env = envelope_heat(params.envelope, t, exo.outdoor_real_temperature)
    q_dev = params.q_devices + exo.extra_gain
    return HeatBreakdown(q_pig, q_env, q_dev, q_pig + q_env + q_dev)


FLAG_CONDENSATION = "condensation"
FLAG_SOLVER_CAPPED = "solver_capped"
FLAG_TEMP_OUTSIDE = "temp_outside_band"
FLAG_RH_OUTSIDE = "rh_outside_band"

LOG_COLUMNS = (
    "indoor_temperature",
    "indoor_rh",
    "specific_humidity",
    "ventilation",
    "q_pig",
    "q_envelope",
    "q_devices",
    "q_total",
    "h_in",
    "h_out",
    "solver_cost",
)


@dataclass
class TrajectoryLog:
    """Per-step record of a run.

    Row ``k`` holds the control applied over ``[t_k, t_k + dt)``, the heat
    loads and enthalpies of that interval and the indoor state it produced.
    """

    timestamps: list
    indoor_temperature: np.ndarray
    indoor_rh: np.ndarray
    specific_humidity: np.ndarray
    ventilation: np.ndarray
    q_pig: np.ndarray
    q_envelope: np.ndarray
    q_devices: np.ndarray
    q_total: np.ndarray
    h_in: np.ndarray
    h_out: np.ndarray
    solver_cost: np.ndarray
    flags: list
    dt: float = 600.0

    def __len__(self):
        return len(self.timestamps)

    @classmethod
    def empty(cls, dt=600.0):
        cols = {name: np.zeros(0) for name in LOG_COLUMNS}
        return cls(timestamps=[], flags=[], dt=dt, **cols)

    @classmethod
    def allocate(cls, n, dt=600.0):
        cols = {name: np.full(n, np.nan) for name in LOG_COLUMNS}
        return cls(timestamps=[None] * n, flags=[()] * n, dt=dt, **cols)

    def record(self, k, timestamp, res: _Advance, u, cost=np.nan, flags=()):
        self.timestamps[k] = timestamp
        self.indoor_temperature[k] = res.temperature
        self.indoor_rh[k] = res.relative_humidity
        self.specific_humidity[k] = res.humidity
        self.ventilation[k] = u
        self.q_pig[k] = res.q_pig
        self.q_envelope[k] = res.q_envelope
        self.q_devices[k] = res.q_devices
        self.q_total[k] = res.q_total
        self.h_in[k] = res.h_in
        self.h_out[k] = res.h_out
        self.solver_cost[k] = cost
        flags = tuple(flags)
        if bool(res.condensed):
            flags = (FLAG_CONDENSATION,) + flags
        self.flags[k] = flags

    def state(self, k) -> HouseState:
        return HouseState(float(self.indoor_temperature[k]), float(self.indoor_rh[k]))

    def has_flag(self, flag) -> np.ndarray:
        return np.array([flag in f for f in self.flags], dtype=bool)

    def columns(self) -> dict:
        return {name: getattr(self, name) for name in LOG_COLUMNS}

    def concat(self, other: "TrajectoryLog") -> "TrajectoryLog":
        cols = {name: np.concatenate([getattr(self, name), getattr(other, name)]) for name in LOG_COLUMNS}
        return TrajectoryLog(list(self.timestamps) + list(other.timestamps),
                             flags=list(self.flags) + list(other.flags), dt=self.dt, **cols)


def simulate(initial: HouseState, control_series, exo_series: ExogenousSeries, params: PlantParams,
             dt: float = 600.0) -> TrajectoryLog:
    """Drive the plant with a recorded or scheduled ventilation series."""
    controls = np.asarray(control_series, dtype=float)
    if controls.ndim != 1 or len(controls) != len(exo_series):
        raise ValueError(
            f"control series ({controls.shape}) and exogenous series ({len(exo_series)}) lengths differ"
        )
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = len(controls)
    log = TrajectoryLog.allocate(n, dt)
    t = float(initial.indoor_temperature)
    d = _state_humidity(initial, params.pressure)
    exo_columns = exo_series.rows()
    for k in range(n):
        u = float(controls[k])
        if not u > 0:
            raise SimulationError(f"ventilation rate must be positive, got {u}", k)
        res = _advance(params, t, d, u, *exo_columns[k], dt)
        if not res.ok:
            raise SimulationError("indoor temperature left the physical range", k)
        log.record(k, exo_series.timestamp(k, dt), res, u)
        t, d = res.temperature, res.humidity
    return log
