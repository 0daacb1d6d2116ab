"""scikit-learn style wrappers for the climate model and the rule-based controller.

The model has no learned coefficients; ``fit`` validates the input layout and
fixes the initial indoor state. This makes the model usable inside sklearn
tooling (``clone``, ``get_params``, grid search over physical parameters).
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .control import RuleConfig, rule_based
from .heatload import Envelope, PigGroup
from .plant import ExogenousSeries, HouseState, PlantParams, simulate

FEATURES = ("inlet_temperature", "inlet_relative_humidity", "outdoor_real_temperature", "ventilation",
            "extra_gain")


class ThermalVentilationModel(RegressorMixin, BaseEstimator):
    """Indoor temperature and RH from inlet conditions and a ventilation series.

    Rows of ``X`` are consecutive time steps with columns
    ``inlet_temperature, inlet_relative_humidity, outdoor_real_temperature,
    ventilation[, extra_gain]``. :meth:`predict` returns an ``(n, 2)`` array of
    indoor temperature (degC) and RH (%).

    Parameters
    ----------
    pigs, pig_weight, conductivity, area, thickness, room_volume, q_devices, moisture_production
        Plant description, see :class:`pigvent.plant.PlantParams`.
    dt : float
        Step length in seconds.
    initial_temperature, initial_rh : float, optional
        Indoor state before the first row. If unset, ``fit`` takes the first
        row of ``y`` or, without ``y``, the first inlet state.
    """

    def __init__(self, pigs=100, pig_weight=40.0, conductivity=0.025, area=200.0, thickness=0.05,
                 room_volume=1000.0, q_devices=0.0, moisture_production=0.0, dt=600.0,
                 initial_temperature=None, initial_rh=None):
        self.pigs = pigs
        self.pig_weight = pig_weight
        self.conductivity = conductivity
        self.area = area
        self.thickness = thickness
        self.room_volume = room_volume
        self.q_devices = q_devices
        self.moisture_production = moisture_production
        self.dt = dt
        self.initial_temperature = initial_temperature
        self.initial_rh = initial_rh

    def _plant(self) -> PlantParams:
        return PlantParams(pigs=PigGroup(int(self.pigs), float(self.pig_weight)),
                           envelope=Envelope(self.conductivity, self.area, self.thickness),
                           room_volume=self.room_volume, q_devices=self.q_devices,
                           moisture_production=self.moisture_production)

    def _check_X(self, X, reset):
        X = check_array(X, dtype=np.float64, ensure_min_samples=1)
        if X.shape[1] not in (4, 5):
            raise ValueError(f"X needs 4 or 5 columns ({', '.join(FEATURES)}), got {X.shape[1]}")
        if reset:
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, the model was fitted with {self.n_features_in_}")
        return X

    def fit(self, X, y=None):
        X = self._check_X(X, reset=True)
        self.plant_ = self._plant()
        if y is not None:
            y = check_array(y, dtype=np.float64, ensure_2d=True)
            if y.shape != (len(X), 2):
                raise ValueError(f"y must have shape ({len(X)}, 2)")
        t0, rh0 = self.initial_temperature, self.initial_rh
        if t0 is None:
            t0 = y[0, 0] if y is not None else X[0, 0]
        if rh0 is None:
            rh0 = y[0, 1] if y is not None else X[0, 1]
        self.initial_state_ = HouseState(float(t0), float(rh0))
        return self

    def predict(self, X):
        check_is_fitted(self, "initial_state_")
        X = self._check_X(X, reset=False)
        gain = X[:, 4] if X.shape[1] == 5 else None
        exo = ExogenousSeries(X[:, 0], X[:, 1], X[:, 2], gain)
        log = simulate(self.initial_state_, X[:, 3], exo, self.plant_, self.dt)
        return np.column_stack([log.indoor_temperature, log.indoor_rh])


class RuleBasedVentilation(BaseEstimator):
    """Proportional-band controller as a stateless transformer of indoor temperature."""

    def __init__(self, setpoint=21.0, bandwidth=4.0, u_min=4.0, u_max=120.0):
        self.setpoint = setpoint
        self.bandwidth = bandwidth
        self.u_min = u_min
        self.u_max = u_max

    def fit(self, X=None, y=None):
        self.config_ = RuleConfig(self.setpoint, self.bandwidth, self.u_min, self.u_max)
        if X is not None:
            self.n_features_in_ = check_array(X, dtype=np.float64).shape[1]
        return self

    def predict(self, X):
        """Ventilation rate (m3/h per animal) for each indoor temperature in the first column of ``X``."""
        check_is_fitted(self, "config_")
        X = check_array(X, dtype=np.float64)
        return np.array([rule_based(t, self.config_) for t in X[:, 0]])

    def transform(self, X):
        return self.predict(X)[:, None]
