"""Scenario files and weather/sensor time series.

A scenario is a TOML document; the grammar is documented in
``docs/formats.md``. Every section except ``[weather]`` is optional and falls
back to the defaults of the corresponding model class. Dotted ``key=value``
overrides (as given on the command line) are applied to the parsed document
before validation, so they are checked exactly like file content.

Weather files are comma-separated with a header row. Columns are matched by
name, case-insensitively, and may appear in any order.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import math
import sys
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .control import STAGE_BANDS, ComfortBands, MpcConfig, MpcController, RuleConfig, RuleController, \
    receding_horizon_run
from .exceptions import ResolutionError, ScenarioError, ScenarioParseError, TimeseriesError
from .heatload import Envelope, PigGroup
from .metrics import FanModel
from .plant import ExogenousSeries, HouseState, PlantParams, TrajectoryLog, simulate

REQUIRED_COLUMNS = ("timestamp", "outdoor_real_temperature", "inlet_temperature", "inlet_relative_humidity")
OPTIONAL_COLUMNS = ("observed_indoor_temperature", "observed_indoor_rh", "observed_ventilation", "extra_gain")

# allowed range per column; None leaves a side open
_RANGES = {
    "outdoor_real_temperature": (-60.0, 70.0),
    "inlet_temperature": (-60.0, 70.0),
    "inlet_relative_humidity": (0.0, 100.0),
    "observed_indoor_temperature": (-60.0, 70.0),
    "observed_indoor_rh": (0.0, 100.0),
    "observed_ventilation": (0.0, None),
    "extra_gain": (None, None),
}


@dataclass(frozen=True)
class WeatherRecord:
    timestamp: datetime
    outdoor_real_temperature: float
    inlet_temperature: float
    inlet_relative_humidity: float
    observed_indoor_temperature: Optional[float] = None
    observed_indoor_rh: Optional[float] = None
    observed_ventilation: Optional[float] = None
    extra_gain: float = 0.0


class WeatherSeries(Sequence):
    """Validated records of one weather file, with column access."""

    def __init__(self, records, columns, dt):
        self.records = list(records)
        self.columns = tuple(columns)
        self.dt = dt

    def __len__(self):
        return len(self.records)

    def __getitem__(self, key):
        if isinstance(key, slice):
            return WeatherSeries(self.records[key], self.columns, self.dt)
        return self.records[key]

    def has(self, column: str) -> bool:
        return column in self.columns

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def timestamps(self) -> list:
        return [r.timestamp for r in self.records]

    def exogenous(self) -> ExogenousSeries:
        return ExogenousSeries(self.column("inlet_temperature"), self.column("inlet_relative_humidity"),
                               self.column("outdoor_real_temperature"), self.column("extra_gain"),
                               self.timestamps)


def parse_timestamp(text: str) -> datetime:
    """Naive ISO-8601 date-time; a zone offset is rejected."""
    value = datetime.fromisoformat(text.strip())
    if value.tzinfo is not None:
        raise ValueError("timestamps must not carry a time zone")
    return value


def load_timeseries(path, expected_dt: float = 600.0) -> WeatherSeries:
    """Read and validate a weather/sensor CSV.

    Raises
    ------
    TimeseriesError
        With the 1-based data row and column of the first problem found.
    ResolutionError
        If the file does not exist.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8-sig")
    except FileNotFoundError:
        raise ResolutionError(path) from None
    except (OSError, UnicodeDecodeError) as err:
        raise TimeseriesError(f"{path}: cannot read file ({err})") from None
    try:
        rows = list(csv.reader(text.splitlines()))
    except csv.Error as err:
        raise TimeseriesError(f"{path}: {err}") from None
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise TimeseriesError(f"{path}: file is empty; expected a header row")
    header = [h.strip().lower() for h in rows[0]]
    index = {}
    for pos, name in enumerate(header):
        if name in index:
            raise TimeseriesError(f"{path}: duplicate column {name!r}")
        index[name] = pos
    missing = [c for c in REQUIRED_COLUMNS if c not in index]
    if missing:
        raise TimeseriesError(f"{path}: missing column(s) {', '.join(missing)}")
    present = [c for c in OPTIONAL_COLUMNS if c in index]
    step = timedelta(seconds=expected_dt)
    records = []
    for row_no, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise TimeseriesError(f"expected {len(header)} cells, found {len(row)}", row_no)
        cell = row[index["timestamp"]]
        try:
            ts = parse_timestamp(cell)
        except ValueError:
            raise TimeseriesError(f"cannot parse timestamp {cell!r}", row_no, "timestamp") from None
        values = {}
        for name in REQUIRED_COLUMNS[1:] + tuple(present):
            raw = row[index[name]].strip()
            try:
                x = float(raw)
            except ValueError:
                raise TimeseriesError(f"cannot parse number {raw!r}", row_no, name) from None
            lo, hi = _RANGES[name]
            if not math.isfinite(x) or (lo is not None and x < lo) or (hi is not None and x > hi):
                raise TimeseriesError(f"value {x:g} outside [{lo}, {hi}]", row_no, name)
            values[name] = x
        if records:
            prev = records[-1].timestamp
            if ts <= prev:
                raise TimeseriesError(f"timestamp {ts.isoformat()} does not increase "
                                      f"(previous {prev.isoformat()})", row_no, "timestamp")
            if ts - prev != step:
                raise TimeseriesError(f"gap between {prev.isoformat()} and {ts.isoformat()} "
                                      f"is not {expected_dt:g} s", row_no, "timestamp")
        records.append(WeatherRecord(ts, **values))
    return WeatherSeries(records, REQUIRED_COLUMNS[1:] + tuple(present), expected_dt)


def write_timeseries(path, timestamps, columns: dict) -> None:
    """Write a weather CSV. Floats use the shortest exact representation."""
    names = list(columns)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["timestamp"] + names)
        for k, ts in enumerate(timestamps):
            out.writerow([ts.isoformat()] + [repr(float(columns[c][k])) for c in names])


# ---------------------------------------------------------------------------
# scenario schema

class _Kind:
    FLOAT, INT, BOOL, STR, TIME = "number", "integer", "boolean", "string", "date-time"


def _fields_schema(cls, skip=()):
    out = {}
    for f in dataclasses.fields(cls):
        if f.name in skip:
            continue
        default = f.default
        kind = {bool: _Kind.BOOL, int: _Kind.INT, float: _Kind.FLOAT, str: _Kind.STR}.get(type(default), _Kind.FLOAT)
        out[f.name] = kind
    return out


SCHEMA = {
    "": {"name": _Kind.STR},
    "plant": {
        "pigs": _Kind.INT, "pig_weight": _Kind.FLOAT, "air_speed": _Kind.FLOAT,
        "skin_temperature": _Kind.FLOAT, "emissivity": _Kind.FLOAT, "animal_places": _Kind.INT,
        "room_volume": _Kind.FLOAT, "air_density": _Kind.FLOAT, "moisture_production": _Kind.FLOAT,
        "q_devices": _Kind.FLOAT, "pressure": _Kind.FLOAT, "heat_evaluation": _Kind.STR, "mixing": _Kind.BOOL,
    },
    "plant.envelope": _fields_schema(Envelope),
    "comfort": {"stage": _Kind.INT, "temp_low": _Kind.FLOAT, "temp_high": _Kind.FLOAT,
                "rh_low": _Kind.FLOAT, "rh_high": _Kind.FLOAT},
    "rule": {**_fields_schema(RuleConfig), "control_interval": _Kind.FLOAT},
    "mpc": {**_fields_schema(MpcConfig), "forecast": _Kind.STR},
    "simulation": {"start": _Kind.TIME, "end": _Kind.TIME, "dt": _Kind.FLOAT,
                   "initial_temperature": _Kind.FLOAT, "initial_rh": _Kind.FLOAT},
    "weather": {"file": _Kind.STR},
    "fan": _fields_schema(FanModel),
}
SCHEMA["fan"]["reference_flow"] = _Kind.FLOAT

_PLANT_DEFAULTS = {"pigs": 100, "pig_weight": 40.0}


def _coerce(kind, value):
    """Convert a TOML value to the schema kind or raise ValueError."""
    if kind == _Kind.BOOL:
        if isinstance(value, bool):
            return value
    elif kind == _Kind.INT:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
    elif kind == _Kind.FLOAT:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            x = float(value)
            if math.isfinite(x):
                return x
    elif kind == _Kind.STR:
        if isinstance(value, str):
            return value
    elif kind == _Kind.TIME:
        if isinstance(value, datetime):
            if value.tzinfo is not None:
                raise ValueError("expected a date-time without time zone")
            return value
        if isinstance(value, str):
            return parse_timestamp(value)
    raise ValueError(f"expected {kind}, got {value!r}")


def parse_override(text: str):
    """Split ``section.key=value``; the value is read as a TOML scalar, else kept as text."""
    if "=" not in text:
        raise ScenarioError([f"override {text!r}: expected key=value"])
    key, raw = text.split("=", 1)
    key, raw = key.strip(), raw.strip()
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key, value


def _split_key(key):
    section, _, name = key.rpartition(".")
    return section, name


def apply_overrides(doc: dict, overrides) -> dict:
    """Return a copy of ``doc`` with dotted-key overrides applied.

    Unknown keys are rejected; ``overrides`` holds ``(key, value)`` pairs or
    ``key=value`` strings.
    """
    doc = _deep_copy(doc)
    issues = []
    for item in overrides:
        key, value = parse_override(item) if isinstance(item, str) else item
        section, name = _split_key(key)
        if section not in SCHEMA or name not in SCHEMA[section]:
            issues.append(f"override {key!r}: no such scenario field")
            continue
        node = doc
        for part in section.split(".") if section else ():
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                issues.append(f"override {key!r}: {part} is not a table")
                break
        else:
            node[name] = value
    if issues:
        raise ScenarioError(issues)
    return doc


def _deep_copy(doc):
    return {k: _deep_copy(v) if isinstance(v, dict) else v for k, v in doc.items()}


def numeric_field(key: str) -> bool:
    section, name = _split_key(key)
    return SCHEMA.get(section, {}).get(name) in (_Kind.FLOAT, _Kind.INT)


@dataclass(frozen=True)
class Scenario:
    """A fully resolved scenario: plant, comfort zone, both controllers, run window and inputs."""

    name: str
    plant: PlantParams
    stage: Optional[int]
    bands: ComfortBands
    rule: RuleConfig
    rule_interval: float
    mpc: MpcConfig
    forecast: str
    start: datetime
    end: datetime
    dt: float
    initial: HouseState
    weather_path: Path
    weather: WeatherSeries
    fan: FanModel
    path: Optional[Path] = None

    @property
    def steps(self) -> int:
        return int(round((self.end - self.start).total_seconds() / self.dt))

    @property
    def window(self) -> WeatherSeries:
        first = int(round((self.start - self.weather[0].timestamp).total_seconds() / self.dt))
        return self.weather[first:first + self.steps]

    def exogenous(self, pad: int = 0) -> ExogenousSeries:
        """Inputs over the run window, extended by ``pad`` steps.

        Records past the window are taken from the file where available and
        otherwise repeat the last one, so a predictive controller can plan
        through the final steps.
        """
        first = int(round((self.start - self.weather[0].timestamp).total_seconds() / self.dt))
        exo = self.weather.exogenous()[first:first + self.steps + pad]
        short = self.steps + pad - len(exo)
        if short <= 0:
            return exo
        last = len(exo) - 1
        idx = np.concatenate([np.arange(len(exo)), np.full(short, last)])
        ts = list(exo.timestamps) + [exo.timestamps[-1] + timedelta(seconds=self.dt * (j + 1)) for j in range(short)]
        return ExogenousSeries(exo.inlet_temperature[idx], exo.inlet_relative_humidity[idx],
                               exo.outdoor_real_temperature[idx], exo.extra_gain[idx], ts)

    def controller(self, kind: str):
        if kind == "rule":
            return RuleController(self.rule, self.rule_interval)
        if kind == "mpc":
            return MpcController(self.mpc, self.bands, self.plant, forecast=self.forecast)
        raise ValueError(f"unknown controller {kind!r}; expected 'rule' or 'mpc'")

    def run(self, kind: str = "rule") -> TrajectoryLog:
        """Closed-loop run of one controller over the window."""
        ctl = self.controller(kind)
        stride = int(round(ctl.control_interval / self.dt))
        pad = max(ctl.lookahead * stride - 1, 0)
        return receding_horizon_run(self.initial, self.exogenous(pad), self.plant, ctl, self.bands, self.dt,
                                    n_steps=self.steps)

    def replay(self) -> TrajectoryLog:
        """Open-loop run driven by the recorded ventilation column."""
        if not self.weather.has("observed_ventilation"):
            raise ScenarioError([f"{self.weather_path}: missing column observed_ventilation"])
        return simulate(self.initial, self.window.column("observed_ventilation"), self.exogenous(), self.plant,
                        self.dt)

    def digests(self) -> dict:
        out = {}
        for p in (self.path, self.weather_path):
            if p is not None:
                out[str(p.name)] = file_digest(p)
        return out

    def config(self) -> dict:
        """Resolved configuration as plain JSON-compatible values."""
        pigs = self.plant.pigs
        plant = {"pigs": pigs.count, "pig_weight": pigs.weight, "air_speed": pigs.air_speed,
                 "skin_temperature": pigs.skin_temperature, "emissivity": pigs.emissivity,
                 "animal_places": self.plant.places, "room_volume": self.plant.room_volume,
                 "air_density": self.plant.air_density, "moisture_production": self.plant.moisture_production,
                 "q_devices": self.plant.q_devices, "pressure": self.plant.pressure,
                 "heat_evaluation": self.plant.heat_evaluation, "mixing": self.plant.mixing,
                 "envelope": dataclasses.asdict(self.plant.envelope)}
        return {
            "name": self.name,
            "plant": plant,
            "comfort": {"stage": self.stage, **dataclasses.asdict(self.bands)},
            "rule": {**dataclasses.asdict(self.rule), "control_interval": self.rule_interval},
            "mpc": {**dataclasses.asdict(self.mpc), "forecast": self.forecast},
            "simulation": {"start": self.start.isoformat(), "end": self.end.isoformat(), "dt": self.dt,
                           "initial_temperature": self.initial.indoor_temperature,
                           "initial_rh": self.initial.indoor_relative_humidity},
            "weather": {"file": str(self.weather_path)},
            "fan": dataclasses.asdict(self.fan),
        }


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read_document(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ResolutionError(path, "scenario file") from None
    except (OSError, UnicodeDecodeError) as err:
        raise ScenarioParseError(path, f"cannot read file ({err})") from None
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        line = getattr(err, "lineno", None)
        col = getattr(err, "colno", None)
        msg = getattr(err, "msg", str(err))
        if line is None:  # older tomli keeps the position only in the message
            import re
            m = re.search(r"line (\d+), column (\d+)", str(err))
            if m:
                line, col = int(m.group(1)), int(m.group(2))
            msg = re.sub(r"\s*\(at line \d+, column \d+\)", "", str(err))
        raise ScenarioParseError(path, msg, line, col) from None


def load_scenario(path, overrides=()) -> Scenario:
    """Parse, override and validate a scenario file.

    Raises
    ------
    ScenarioParseError
        Malformed TOML, with line and column.
    ScenarioError
        All semantic problems at once, each prefixed with its field path.
    ResolutionError
        The scenario or weather file does not exist.
    """
    path = Path(path)
    doc = apply_overrides(_read_document(path), overrides)
    return scenario_from_dict(doc, base=path.parent, path=path)


def scenario_from_dict(doc: dict, base=Path("."), path=None) -> Scenario:
    issues = []
    values = {}

    def walk(node, prefix):
        for key, value in node.items():
            full = f"{prefix}.{key}" if prefix else key
            if isinstance(value, dict):
                if full not in SCHEMA:
                    issues.append(f"{full}: unknown section")
                else:
                    walk(value, full)
                continue
            if prefix not in SCHEMA or key not in SCHEMA[prefix]:
                issues.append(f"{full}: unknown field")
                continue
            try:
                values[full] = _coerce(SCHEMA[prefix][key], value)
            except ValueError as err:
                issues.append(f"{full}: {err}")

    walk(doc, "")

    def get(key, default=None):
        return values.get(key, default)

    def build(label, fn):
        try:
            return fn()
        except (ValueError, TypeError) as err:
            msg = str(err)
            head = msg.split(" ", 1)[0]
            if head in SCHEMA.get(label, {}):
                issues.append(f"{label}.{head}: {msg}")
            else:
                issues.append(f"{label}: {msg}")
            return None

    # plant
    pigs = build("plant", lambda: PigGroup(
        get("plant.pigs", _PLANT_DEFAULTS["pigs"]), get("plant.pig_weight", _PLANT_DEFAULTS["pig_weight"]),
        **{k: values[f"plant.{k}"] for k in ("air_speed", "skin_temperature", "emissivity") if f"plant.{k}" in values}))
    envelope = build("plant.envelope", lambda: Envelope(
        **{k: v for k, v in ((n, get(f"plant.envelope.{n}")) for n in SCHEMA["plant.envelope"]) if v is not None}))
    plant = None
    if pigs is not None and envelope is not None:
        plant_keys = ("room_volume", "air_density", "moisture_production", "q_devices", "pressure",
                      "animal_places", "heat_evaluation", "mixing")
        plant = build("plant", lambda: PlantParams(
            pigs=pigs, envelope=envelope,
            **{k: values[f"plant.{k}"] for k in plant_keys if f"plant.{k}" in values}))

    # comfort
    stage = get("comfort.stage", 1)
    bands = None
    if stage not in STAGE_BANDS:
        issues.append(f"comfort.stage: unknown stage {stage}; expected one of {sorted(STAGE_BANDS)}")
    else:
        preset = STAGE_BANDS[stage]
        explicit = any(f"comfort.{k}" in values for k in ("temp_low", "temp_high", "rh_low", "rh_high"))
        lo, hi = get("comfort.temp_low", preset.temp_low), get("comfort.temp_high", preset.temp_high)
        rlo, rhi = get("comfort.rh_low", preset.rh_low), get("comfort.rh_high", preset.rh_high)
        if not lo < hi:
            issues.append(f"comfort.temp_low/comfort.temp_high: temperature band [{lo:g}, {hi:g}] is empty")
        if not rlo < rhi:
            issues.append(f"comfort.rh_low/comfort.rh_high: humidity band [{rlo:g}, {rhi:g}] is empty")
        if not (0 <= rlo and rhi <= 100):
            issues.append("comfort.rh_low/comfort.rh_high: humidity band must lie within [0, 100] %")
        if lo < hi and rlo < rhi:
            bands = ComfortBands(lo, hi, rlo, rhi)
        if explicit and "comfort.stage" not in values:
            stage = None

    # controllers
    rule = build("rule", lambda: RuleConfig(**{k: values[f"rule.{k}"] for k in SCHEMA["rule"]
                                               if k != "control_interval" and f"rule.{k}" in values}))
    rule_interval = get("rule.control_interval", 600.0)
    mpc = build("mpc", lambda: MpcConfig(**{k: values[f"mpc.{k}"] for k in SCHEMA["mpc"]
                                            if k != "forecast" and f"mpc.{k}" in values}))
    forecast = get("mpc.forecast", "perfect")
    if forecast not in ("perfect", "persistence"):
        issues.append(f"mpc.forecast: expected 'perfect' or 'persistence', got {forecast!r}")
    fan = build("fan", lambda: FanModel(**{k: values[f"fan.{k}"] for k in SCHEMA["fan"] if f"fan.{k}" in values}))

    # simulation window
    dt = get("simulation.dt", 600.0)
    if not dt > 0:
        issues.append("simulation.dt: must be positive")
    else:
        for label, interval in (("rule.control_interval", rule_interval),
                                ("mpc.control_interval", mpc.control_interval if mpc else None)):
            if interval is None:
                continue
            ratio = interval / dt
            if ratio < 1 or abs(ratio - round(ratio)) > 1e-9:
                issues.append(f"{label}: simulation.dt = {dt:g} s does not divide {interval:g} s")
    start, end = get("simulation.start"), get("simulation.end")
    if start is not None and end is not None and not end > start:
        issues.append(f"simulation.end: window [{start.isoformat()}, {end.isoformat()}) is empty")
    t0 = get("simulation.initial_temperature")
    rh0 = get("simulation.initial_rh")
    if rh0 is not None and not 0 <= rh0 <= 100:
        issues.append("simulation.initial_rh: must lie in [0, 100] %")

    name = get("name", path.stem if path is not None else "scenario")
    weather_file = get("weather.file")
    if weather_file is None and "weather.file" not in {i.split(":")[0] for i in issues}:
        issues.append("weather.file: required")

    weather_path = None
    if weather_file is not None:
        weather_path = Path(weather_file)
        if not weather_path.is_absolute():
            weather_path = Path(base) / weather_path
        if not weather_path.exists():
            if not issues:
                raise ResolutionError(weather_path)
            issues.append(f"weather file not found: {weather_path}")
    if issues:
        raise ScenarioError(issues)

    weather = load_timeseries(weather_path, dt)
    if not len(weather):
        raise ScenarioError([f"weather.file: {weather_path} holds no records"])
    first, last = weather[0].timestamp, weather[-1].timestamp
    start = first if start is None else start
    end = last + timedelta(seconds=dt) if end is None else end
    offset = (start - first).total_seconds() / dt
    span = (end - start).total_seconds() / dt
    if not end > start:
        issues.append(f"simulation.end: window [{start.isoformat()}, {end.isoformat()}) is empty")
    if offset < 0 or abs(offset - round(offset)) > 1e-9:
        issues.append(f"simulation.start: {start.isoformat()} is not a record of {weather_path.name}")
    if abs(span - round(span)) > 1e-9:
        issues.append(f"simulation.end: window length is not a multiple of dt = {dt:g} s")
    if end > last + timedelta(seconds=dt):
        issues.append(f"simulation.end: {end.isoformat()} is past the last record {last.isoformat()} "
                      f"of {weather_path.name}")
    if issues:
        raise ScenarioError(issues)

    k0 = int(round(offset))
    initial = HouseState(weather[k0].inlet_temperature if t0 is None else t0,
                         weather[k0].inlet_relative_humidity if rh0 is None else rh0)
    return Scenario(name, plant, stage, bands, rule, rule_interval, mpc, forecast, start, end, dt, initial,
                    weather_path, weather, fan, path)
