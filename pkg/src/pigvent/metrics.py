"""Model-validation and controller-comparison statistics.

:func:`sd` and :func:`r2` follow the definitions conventionally quoted for
climate-model validation in livestock housing, which differ from the
textbook forms: ``sd`` measures the spread of the *predictions* about the
observed mean, and ``r2`` divides the explained sum of squares by the total
plus residual sums. The textbook variants are :func:`sd_standard` and
:func:`r2_standard`.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from .exceptions import ZeroObservedError


def _pair(observed, predicted):
    obs = np.asarray(observed, dtype=float).ravel()
    pred = np.asarray(predicted, dtype=float).ravel()
    if obs.shape != pred.shape:
        raise ValueError(f"observed has {obs.size} values, predicted has {pred.size}")
    if obs.size == 0:
        raise ValueError("empty series")
    if not (np.all(np.isfinite(obs)) and np.all(np.isfinite(pred))):
        raise ValueError("series contain non-finite values")
    return obs, pred


def rmse(observed, predicted) -> float:
    """Root mean square error."""
    obs, pred = _pair(observed, predicted)
    return float(np.sqrt(np.mean((obs - pred) ** 2)))


def mape(observed, predicted) -> float:
    """Mean absolute percentage error relative to the observations (%).

    Raises
    ------
    ZeroObservedError
        If an observation is exactly zero.
    """
    obs, pred = _pair(observed, predicted)
    zero = np.flatnonzero(obs == 0)
    if zero.size:
        raise ZeroObservedError(int(zero[0]))
    return float(np.mean(np.abs(pred - obs) / obs) * 100.0)


def sd(observed, predicted) -> float:
    """Root mean square deviation of the predictions from the observed mean."""
    obs, pred = _pair(observed, predicted)
    return float(np.sqrt(np.mean((pred - obs.mean()) ** 2)))


def r2(observed, predicted) -> float:
    """Explained over total-plus-residual sum of squares.

    Equals 1 for a perfect prediction and 0 for a constant prediction at the
    observed mean. Unlike the textbook coefficient it never goes negative.
    """
    obs, pred = _pair(observed, predicted)
    mean = obs.mean()
    total = np.sum((obs - mean) ** 2)
    if total == 0:
        raise ValueError("observed series is constant")
    return float(np.sum((pred - mean) ** 2) / (total + np.sum((obs - pred) ** 2)))


def sd_standard(observed, predicted) -> float:
    """Population standard deviation of the prediction errors."""
    obs, pred = _pair(observed, predicted)
    return float(np.std(pred - obs))


def r2_standard(observed, predicted) -> float:
    """Textbook coefficient of determination, ``1 - SS_res / SS_tot``."""
    obs, pred = _pair(observed, predicted)
    total = np.sum((obs - obs.mean()) ** 2)
    if total == 0:
        raise ValueError("observed series is constant")
    return float(1.0 - np.sum((obs - pred) ** 2) / total)


def comfort_time_percentage(series, low: float, high: float) -> float:
    """Share of samples within ``[low, high]`` (bounds inclusive), in %."""
    x = np.asarray(series, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty series")
    return float(100.0 * np.count_nonzero((x >= low) & (x <= high)) / x.size)


@dataclass(frozen=True)
class FanModel:
    """Electrical fan power as a function of total air flow.

    ``specific_fan_power`` is in W per m3/h. With ``law="cubic"`` the specific
    power holds at ``reference_flow`` (m3/h) and the absolute power scales with
    the cube of flow, as the fan affinity laws predict for a fixed duct.
    """

    specific_fan_power: float = 0.4
    law: str = "linear"
    reference_flow: Optional[float] = None

    def __post_init__(self):
        if not self.specific_fan_power >= 0:
            raise ValueError("specific fan power must be non-negative")
        if self.law not in ("linear", "cubic"):
            raise ValueError(f"unknown fan law {self.law!r}")
        if self.law == "cubic" and not (self.reference_flow and self.reference_flow > 0):
            raise ValueError("cubic fan law needs a positive reference_flow")

    def power(self, flow):
        """Electrical power (W) at total flow ``flow`` (m3/h)."""
        flow = np.asarray(flow, dtype=float)
        p = self.specific_fan_power * flow
        if self.law == "cubic":
            p = p * (flow / self.reference_flow) ** 2
        return p


def energy_consumption(control_series, n_animals: float, fan: FanModel = FanModel(), dt: float = 600.0) -> float:
    """Fan energy (kWh) of a ventilation schedule in m3/h per animal held for ``dt`` s each."""
    u = np.asarray(control_series, dtype=float).ravel()
    if np.any(u < 0) or not np.all(np.isfinite(u)):
        raise ValueError("ventilation rates must be finite and non-negative")
    if n_animals < 0 or not dt > 0:
        raise ValueError("need n_animals >= 0 and dt > 0")
    return float(np.sum(fan.power(u * n_animals)) * dt / 3.6e6)


@dataclass(frozen=True)
class MetricsReport:
    """Validation and comfort/energy figures; entries not computed are ``None``."""

    rmse: Optional[float] = None
    mape: Optional[float] = None
    sd: Optional[float] = None
    r2: Optional[float] = None
    comfort_temp_pct: Optional[float] = None
    comfort_rh_pct: Optional[float] = None
    energy_kwh: Optional[float] = None

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        names = {f.name for f in fields(cls)}
        return cls(**{k: (None if v is None else float(v)) for k, v in data.items() if k in names})

    def minus(self, other: "MetricsReport") -> "MetricsReport":
        """Field-wise ``self - other``; ``None`` where either side is missing."""
        out = {}
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            out[f.name] = None if a is None or b is None else a - b
        return MetricsReport(**out)


def validation_report(observed, predicted) -> MetricsReport:
    """Error statistics of a predicted series against observations.

    ``mape`` is left empty when an observation is zero and ``r2`` when the
    observations are constant.
    """
    try:
        m = mape(observed, predicted)
    except ZeroObservedError:
        m = None
    try:
        r = r2(observed, predicted)
    except ValueError:
        r = None
    return MetricsReport(rmse=rmse(observed, predicted), mape=m, sd=sd(observed, predicted), r2=r)


def control_report(log, bands, n_animals: float, fan: FanModel = FanModel()) -> MetricsReport:
    """Comfort-time shares and fan energy of a closed-loop trajectory."""
    if len(log) == 0:
        return MetricsReport(energy_kwh=0.0)
    return MetricsReport(
        comfort_temp_pct=comfort_time_percentage(log.indoor_temperature, bands.temp_low, bands.temp_high),
        comfort_rh_pct=comfort_time_percentage(log.indoor_rh, bands.rh_low, bands.rh_high),
        energy_kwh=energy_consumption(log.ventilation, n_animals, fan, log.dt),
    )


@dataclass(frozen=True)
class Comparison:
    a: MetricsReport
    b: MetricsReport
    delta: MetricsReport  # a - b


def compare_report(log_a, log_b, bands, fan: FanModel = FanModel(), n_animals: float = 1.0) -> Comparison:
    """Side-by-side comfort and energy figures of two runs over the same inputs."""
    if len(log_a) != len(log_b) or log_a.dt != log_b.dt or list(log_a.timestamps) != list(log_b.timestamps):
        raise ValueError("logs cover different scenarios (length, time step or timestamps differ)")
    a = control_report(log_a, bands, n_animals, fan)
    b = control_report(log_b, bands, n_animals, fan)
    return Comparison(a, b, a.minus(b))

