"""Bundled synthetic scenarios and the code that generates them.

``python -m pigvent.datasets [DIR]`` rewrites the files; the output is a
pure function of the constants below.
"""
from __future__ import annotations

import sys
from datetime import datetime
from pathlib import Path

from .heatload import Envelope, PigGroup
from .plant import ExogenousSeries, HouseState, PlantParams
from .scenario import write_timeseries
from .synthetic import Climate, pseudo_observations, ventilation_schedule, weather

DATA_DIR = Path(__file__).parent / "data"
DT = 600.0
LOOKAHEAD_STEPS = 6  # one MPC horizon of records past the window end

SUMMER_CLIMATE = Climate(mean_temperature=28.0, daily_amplitude=4.0, mean_relative_humidity=75.0, noise_std=1.5)
SPRING_CLIMATE = Climate(mean_temperature=18.0, daily_amplitude=5.0, mean_relative_humidity=65.0, noise_std=1.0)
VALIDATION_CLIMATE = Climate(mean_temperature=16.0, daily_amplitude=6.0, drift_per_day=0.25,
                             mean_relative_humidity=70.0, noise_std=2.0, noise_correlation_hours=12.0)

SUMMER_TOML = """\
# Hot and humid summer fortnight, weaner pigs, no evaporative pad.
name = "summer-hot-humid"

[plant]
pigs = 300
pig_weight = 20.0
room_volume = 1200.0
q_devices = 500.0
moisture_production = 0.0

[plant.envelope]
conductivity = 0.025
area = 400.0
thickness = 0.05

[comfort]
stage = 2

[rule]
setpoint = 25.0
bandwidth = 4.0

[mpc]
temp_margin = 0.5
rh_margin = 2.0

[simulation]
start = 2024-07-01T00:00:00
end = 2024-07-15T00:00:00
dt = 600.0
initial_temperature = 24.0
initial_rh = 70.0

[weather]
file = "summer_hot_humid.csv"

[fan]
specific_fan_power = 0.4
"""

SPRING_TOML = """\
# Mild spring fortnight, finishing pigs.
name = "spring-mild"

[plant]
pigs = 200
pig_weight = 40.0
room_volume = 1200.0
q_devices = 500.0

[plant.envelope]
conductivity = 0.025
area = 400.0
thickness = 0.05

[comfort]
stage = 1

[rule]
setpoint = 23.0
bandwidth = 4.0

[mpc]
temp_margin = 0.5
rh_margin = 2.0

[simulation]
start = 2024-04-01T00:00:00
end = 2024-04-15T00:00:00
dt = 600.0
initial_temperature = 24.0
initial_rh = 70.0

[weather]
file = "spring_mild.csv"
"""

VALIDATION_TOML = """\
# Forty days of recorded ventilation with noisy indoor sensors (sigma 0.5).
name = "validation"

[plant]
pigs = 200
pig_weight = 40.0
room_volume = 1200.0
q_devices = 500.0
moisture_production = 0.05

[plant.envelope]
conductivity = 0.025
area = 400.0
thickness = 0.05

[simulation]
dt = 600.0
initial_temperature = 20.0
initial_rh = 60.0

[weather]
file = "validation.csv"
"""

VALIDATION_PLANT = PlantParams(pigs=PigGroup(200, 40.0), envelope=Envelope(0.025, 400.0, 0.05), room_volume=1200.0,
                               q_devices=500.0, moisture_production=0.05)
VALIDATION_INITIAL = HouseState(20.0, 60.0)


def _weather_columns(exo: ExogenousSeries) -> dict:
    return {"outdoor_real_temperature": exo.outdoor_real_temperature,
            "inlet_temperature": exo.inlet_temperature,
            "inlet_relative_humidity": exo.inlet_relative_humidity}


def validation_data(noise_std: float = 0.5, days: float = 40.0, seed: int = 11):
    """Inputs, recorded ventilation and pseudo-observed indoor series."""
    exo = weather(VALIDATION_CLIMATE, days, DT, seed=seed, start=datetime(2024, 3, 1))
    u = ventilation_schedule(exo, setpoint=12.0, bandwidth=14.0)
    t_obs, rh_obs = pseudo_observations(VALIDATION_INITIAL, exo, VALIDATION_PLANT, u, noise_std=noise_std,
                                        seed=seed + 1, dt=DT)
    columns = _weather_columns(exo)
    columns.update(observed_indoor_temperature=t_obs, observed_indoor_rh=rh_obs, observed_ventilation=u)
    return exo, columns


def write_validation(directory, noise_std: float = 0.5, name: str = "validation") -> Path:
    """Write a validation scenario pair; returns the TOML path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    exo, columns = validation_data(noise_std)
    write_timeseries(directory / f"{name}.csv", exo.timestamps, columns)
    toml = VALIDATION_TOML.replace('"validation.csv"', f'"{name}.csv"')
    (directory / f"{name}.toml").write_text(toml, encoding="utf-8")
    return directory / f"{name}.toml"


def generate(directory=DATA_DIR) -> list:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for stem, climate, start, toml, seed in (
        ("summer_hot_humid", SUMMER_CLIMATE, datetime(2024, 7, 1), SUMMER_TOML, 4),
        ("spring_mild", SPRING_CLIMATE, datetime(2024, 4, 1), SPRING_TOML, 1),
    ):
        n = 14 * 144 + LOOKAHEAD_STEPS
        exo = weather(climate, n * DT / 86400.0, DT, seed=seed, start=start)
        write_timeseries(directory / f"{stem}.csv", exo.timestamps, _weather_columns(exo))
        (directory / f"{stem}.toml").write_text(toml, encoding="utf-8")
        written += [directory / f"{stem}.csv", directory / f"{stem}.toml"]
    written.append(write_validation(directory))
    return written


def bundled(name: str) -> Path:
    """Path of a bundled scenario: ``summer_hot_humid``, ``spring_mild`` or ``validation``."""
    path = DATA_DIR / f"{name}.toml"
    if not path.exists():
        raise FileNotFoundError(f"no bundled scenario {name!r}")
    return path


if __name__ == "__main__":
    for p in generate(sys.argv[1] if len(sys.argv) > 1 else DATA_DIR):
        print(p)
