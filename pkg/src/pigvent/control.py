"""Ventilation controllers and the closed-loop driver.

Two controllers share one interface: called with the step index, the latest
indoor state and the exogenous forecast, they return a :class:`Decision`.

* :class:`RuleController` ramps ventilation linearly over a temperature band
  above a setpoint, the scheme used by commercial barn climate computers.
* :class:`MpcController` solves a finite-horizon problem at every control
  interval (see :mod:`pigvent.mpc`) and applies the first move.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import SimulationError
from .plant import (
    FLAG_RH_OUTSIDE,
    FLAG_SOLVER_CAPPED,
    FLAG_TEMP_OUTSIDE,
    ExogenousSeries,
    HouseState,
    PlantParams,
    TrajectoryLog,
    _advance,
    _state_humidity,
)


@dataclass(frozen=True)
class ComfortBands:
    """Temperature (degC) and relative humidity (%) comfort zone, bounds inclusive."""

    temp_low: float = 21.0
    temp_high: float = 25.0
    rh_low: float = 30.0
    rh_high: float = 80.0

    def __post_init__(self):
        if not self.temp_low < self.temp_high:
            raise ValueError(f"temperature band [{self.temp_low}, {self.temp_high}] is empty")
        if not self.rh_low < self.rh_high:
            raise ValueError(f"humidity band [{self.rh_low}, {self.rh_high}] is empty")

    def tightened(self, temp_margin: float = 0.0, rh_margin: float = 0.0) -> "ComfortBands":
        """The band shrunk by the given margins on both sides."""
        return ComfortBands(self.temp_low + temp_margin, self.temp_high - temp_margin,
                            self.rh_low + rh_margin, self.rh_high - rh_margin)

    def temperature_ok(self, t):
        return (t >= self.temp_low) & (t <= self.temp_high)

    def humidity_ok(self, rh):
        return (rh >= self.rh_low) & (rh <= self.rh_high)


# Comfort zones by growth stage. Stage 1 covers pigs of roughly 35-45 kg,
# stage 2 piglets of roughly 15-25 kg.
STAGE_BANDS = {
    1: ComfortBands(21.0, 25.0, 30.0, 80.0),
    2: ComfortBands(22.0, 28.0, 30.0, 80.0),
}


@dataclass(frozen=True)
class MpcConfig:
    """Weights, horizon and solver settings of the predictive controller.

    Horizon and interval are in seconds; ventilation limits in m3/h per
    animal. ``fd_step`` is the central-difference step of the gradient
    estimate in the same unit.

    ``temp_margin`` (degC) and ``rh_margin`` (%) shrink the comfort band the
    controller plans against. With a squared distance-to-band penalty the
    optimum sits just outside the band whenever the band is active, because
    the penalty is flat at the edge while the energy term is not; a small
    back-off keeps the realised state inside. Both default to zero.
    """

    weight_temp: float = 100.0
    weight_humidity: float = 100.0
    weight_energy: float = 50.0
    prediction_horizon: float = 3600.0
    control_interval: float = 600.0
    u_min: float = 4.0
    u_max: float = 120.0
    max_iter: int = 200
    tol: float = 1e-6
    fd_step: float = 0.5
    grid_levels: int = 9
    exhaustive_limit: int = 729
    temp_margin: float = 0.0
    rh_margin: float = 0.0

    def __post_init__(self):
        for name in ("weight_temp", "weight_humidity", "weight_energy"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not self.control_interval > 0:
            raise ValueError("control interval must be positive")
        ratio = self.prediction_horizon / self.control_interval
        if ratio < 1 or abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("prediction horizon must be a positive multiple of the control interval")
        if not 0 < self.u_min < self.u_max:
            raise ValueError("ventilation limits need 0 < u_min < u_max")
        if self.max_iter < 0 or self.tol < 0 or not self.fd_step > 0:
            raise ValueError("invalid solver settings")
        if self.grid_levels < 2:
            raise ValueError("grid needs at least two levels")
        if self.temp_margin < 0 or self.rh_margin < 0:
            raise ValueError("comfort margins must be non-negative")

    @property
    def steps(self) -> int:
        """Number of control moves in the horizon."""
        return int(round(self.prediction_horizon / self.control_interval))


@dataclass(frozen=True)
class RuleConfig:
    setpoint: float = 21.0
    bandwidth: float = 4.0
    u_min: float = 4.0
    u_max: float = 120.0

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if not 0 < self.u_min <= self.u_max:
            raise ValueError("ventilation limits need 0 < u_min <= u_max")


def band_distance(value, low, high):
    """Distance from ``value`` to the interval ``[low, high]``; zero inside."""
    return np.maximum(0.0, np.maximum(low - value, value - high))


def stage_cost(temperature, humidity, u, cfg: MpcConfig, bands: ComfortBands):
    """Comfort penalty plus normalised ventilation effort for one step.

    Deviations are measured to the nearest edge of the comfort band, and the
    ventilation rate is scaled by ``u_max`` so that all three terms are of
    comparable size at the default weights.
    """
    dt_ = band_distance(temperature, bands.temp_low, bands.temp_high)
    drh = band_distance(humidity, bands.rh_low, bands.rh_high)
    ur = np.asarray(u, dtype=float) / cfg.u_max
    out = cfg.weight_temp * dt_ ** 2 + cfg.weight_humidity * drh ** 2 + cfg.weight_energy * ur ** 2
    return out if np.ndim(out) else float(out)


def rule_based(indoor_temperature, cfg: RuleConfig):
    """Proportional-band ventilation rate (m3/h per animal)."""
    frac = (indoor_temperature - cfg.setpoint) / cfg.bandwidth
    frac = min(max(frac, 0.0), 1.0)
    return cfg.u_min + (cfg.u_max - cfg.u_min) * frac


class Decision(NamedTuple):
    u: float
    cost: float = math.nan
    capped: bool = False


class RuleController:
    """Reacts to the latest indoor temperature only."""

    lookahead = 0

    def __init__(self, cfg: RuleConfig, control_interval: float = 600.0):
        self.cfg = cfg
        self.control_interval = control_interval

    def reset(self):
        pass

    def __call__(self, k, state: HouseState, forecast: ExogenousSeries) -> Decision:
        return Decision(rule_based(state.indoor_temperature, self.cfg))


class MpcController:
    """Receding-horizon controller, warm-started from its previous plan.

    ``forecast`` selects what the predictor sees: "perfect" uses the recorded
    future inputs, "persistence" holds the current inputs over the horizon.
    """

    def __init__(self, cfg: MpcConfig, bands: ComfortBands, params: PlantParams, forecast: str = "perfect"):
        if forecast not in ("perfect", "persistence"):
            raise ValueError(f"unknown forecast mode {forecast!r}")
        self.cfg = cfg
        self.bands = bands
        self.planning_bands = bands.tightened(cfg.temp_margin, cfg.rh_margin)
        self.params = params
        self.forecast = forecast
        self.control_interval = cfg.control_interval
        self.lookahead = cfg.steps if forecast == "perfect" else 1
        self._plan = None

    def reset(self):
        self._plan = None

    def __call__(self, k, state: HouseState, forecast: ExogenousSeries) -> Decision:
        from .mpc import mpc_solve

        n = self.cfg.steps
        if self.forecast == "persistence":
            forecast = ExogenousSeries.constant(forecast[0], n)
        sol = mpc_solve(state, forecast[:n], self.params, self.cfg, self.planning_bands, warm_start=self._plan)
        self._plan = np.append(sol.sequence[1:], sol.sequence[-1])
        return Decision(sol.move, sol.cost, sol.capped)


def receding_horizon_run(initial: HouseState, exo: ExogenousSeries, params: PlantParams, controller,
                         bands: ComfortBands, dt: float = 600.0, n_steps=None) -> TrajectoryLog:
    """Closed-loop simulation: decide, apply, advance, repeat.

    The controller is consulted every ``controller.control_interval`` seconds
    and its move is held in between. By default the run stops early enough
    that the controller's forecast never runs past the end of ``exo``.
    """
    stride = controller.control_interval / dt
    if stride < 1 or abs(stride - round(stride)) > 1e-9:
        raise ValueError(f"time step {dt} s must divide the control interval {controller.control_interval} s")
    stride = int(round(stride))
    need = controller.lookahead * stride
    if n_steps is None:
        n_steps = max(len(exo) - max(need - 1, 0), 0)
    if n_steps + max(need - 1, 0) > len(exo):
        raise ValueError(f"exogenous series too short: {n_steps} steps need {n_steps + need - 1} records")

    controller.reset()
    log = TrajectoryLog.allocate(n_steps, dt)
    t = float(initial.indoor_temperature)
    d = _state_humidity(initial, params.pressure)
    state = initial
    rows = exo.rows()
    decision = None
    for k in range(n_steps):
        fresh = k % stride == 0
        if fresh:
            forecast = exo[k:k + need:stride] if need else exo[k:k + 1]
            try:
                decision = controller(k, state, forecast)
            except Exception as err:
                raise SimulationError(f"controller failed: {err}", k) from err
        u = decision.u
        res = _advance(params, t, d, u, *rows[k], dt)
        if not res.ok:
            raise SimulationError("indoor temperature left the physical range", k)
        flags = []
        if fresh and decision.capped:
            flags.append(FLAG_SOLVER_CAPPED)
        if not bands.temperature_ok(res.temperature):
            flags.append(FLAG_TEMP_OUTSIDE)
        if not bands.humidity_ok(res.relative_humidity):
            flags.append(FLAG_RH_OUTSIDE)
        log.record(k, exo.timestamp(k, dt), res, u, decision.cost if fresh else math.nan, flags)
        t, d = res.temperature, res.humidity
        state = HouseState(t, res.relative_humidity)
    return log
