"""Command-line entry point: ``pigvent simulate|validate|compare|sweep``.

Exit status is 0 on success, 1 when a run fails (model or output error) and 2
for bad usage or bad input files. Every failure prints one line per problem
on stderr.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import charts
from .exceptions import PigventError, ScenarioError, ScenarioParseError, TimeseriesError
from .metrics import compare_report, control_report, r2_standard, sd_standard, validation_report
from .results import (
    OutputError,
    base_report,
    comparison_table,
    format_number,
    render_table,
    validation_table,
    write_report,
    write_results,
)
from .scenario import load_scenario, numeric_field, parse_override

OUT_ENV = "PIGVENT_OUT"
DEFAULT_OUT = "pigvent-out"
DISPLAY = {"mpc": "MPC", "rule": "Rule-based"}
OBSERVED_COLUMNS = ("observed_indoor_temperature", "observed_indoor_rh", "observed_ventilation")


class UsageError(PigventError, ValueError):
    """Bad command-line arguments or a scenario unfit for the command."""


def _names(controllers):
    names = [DISPLAY.get(c, c) for c in controllers]
    if len(set(names)) < len(names):
        names = [f"{n} ({tag})" for n, tag in zip(names, "ab")]
    return names


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise OutputError(f"{out}: {err.strerror or err}") from None
    return out


def _write_text(path: Path, text: str):
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as err:
        raise OutputError(f"{path}: {err.strerror or err}") from None


def run_simulate(scenario, controller="rule", out=None, chart=False):
    """Closed-loop run of one controller; returns the log and the report."""
    log = scenario.run(controller)
    metrics = control_report(log, scenario.bands, scenario.plant.places, scenario.fan)
    report = base_report("simulate", scenario)
    report["controller"] = controller
    report["metrics"] = metrics.as_dict()
    report["table"] = comparison_table({DISPLAY[controller]: metrics.as_dict()})
    if out is not None:
        out = _out_dir(out)
        write_results(log, out / f"trajectory_{controller}.csv")
        write_report(report, out / "report.json")
        _write_text(out / "report.txt", render_table(report["table"], scenario.name))
        if chart:
            charts.trajectory_chart(out / f"trajectory_{controller}.svg", {DISPLAY[controller]: log},
                                    scenario.bands, scenario.name)
    return log, report


def run_compare(scenario, controllers=("mpc", "rule"), out=None, chart=False):
    """Both controllers over the same inputs, with a side-by-side table."""
    a, b = controllers
    logs = [scenario.run(a), scenario.run(b)]
    cmp = compare_report(logs[0], logs[1], scenario.bands, scenario.fan, scenario.plant.places)
    names = _names(controllers)
    report = base_report("compare", scenario)
    report["controllers"] = list(controllers)
    report["metrics"] = {names[0]: cmp.a.as_dict(), names[1]: cmp.b.as_dict(), "delta": cmp.delta.as_dict()}
    report["table"] = comparison_table({names[0]: cmp.a.as_dict(), names[1]: cmp.b.as_dict()})
    if out is not None:
        out = _out_dir(out)
        files = [f"trajectory_{c}.csv" for c in controllers]
        if files[0] == files[1]:
            files = [f"trajectory_{c}_{tag}.csv" for c, tag in zip(controllers, "ab")]
        for log, name in zip(logs, files):
            write_results(log, out / name)
        write_report(report, out / "comparison.json")
        _write_text(out / "comparison.txt", render_table(report["table"], scenario.name))
        if chart:
            charts.trajectory_chart(out / "comparison.svg", dict(zip(names, logs)), scenario.bands, scenario.name)
    return logs, report


def run_validate(scenario, out=None, chart=False):
    """Replay the recorded ventilation and score predicted against observed indoor series."""
    missing = [c for c in OBSERVED_COLUMNS if not scenario.weather.has(c)]
    if missing:
        raise UsageError(f"{scenario.weather_path}: missing column {', '.join(missing)} needed by validate")
    log = scenario.replay()
    window = scenario.window
    observed = {"temperature": window.column("observed_indoor_temperature"),
                "humidity": window.column("observed_indoor_rh")}
    predicted = {"temperature": log.indoor_temperature, "humidity": log.indoor_rh}
    metrics = {k: validation_report(observed[k], predicted[k]).as_dict() for k in observed}
    report = base_report("validate", scenario)
    report["metrics"] = {k: {s: v[s] for s in ("rmse", "mape", "sd", "r2")} for k, v in metrics.items()}
    for k in observed:
        # textbook variants next to the formulas used in the table
        report["metrics"][k]["sd_standard"] = sd_standard(observed[k], predicted[k])
        try:
            report["metrics"][k]["r2_standard"] = r2_standard(observed[k], predicted[k])
        except ValueError:
            report["metrics"][k]["r2_standard"] = None
    report["samples"] = len(log)
    report["table"] = validation_table(report["metrics"])
    if out is not None:
        out = _out_dir(out)
        path = out / "validation.csv"
        try:
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["timestamp", "observed_indoor_temperature", "predicted_indoor_temperature",
                            "observed_indoor_rh", "predicted_indoor_rh"])
                for k in range(len(log)):
                    w.writerow([log.timestamps[k].isoformat()] + [format_number(x) for x in (
                        observed["temperature"][k], predicted["temperature"][k],
                        observed["humidity"][k], predicted["humidity"][k])])
        except OSError as err:
            raise OutputError(f"{path}: {err.strerror or err}") from None
        write_report(report, out / "validation.json")
        _write_text(out / "validation.txt", render_table(report["table"], scenario.name))
        if chart:
            charts.validation_chart(out / "validation.svg", log.timestamps, observed, predicted, scenario.name)
    return log, report


SWEEP_METRICS = ("comfort_temp_pct", "comfort_rh_pct", "energy_kwh")


def _sweep_point(args):
    scenario_path, overrides, param, value, out = args
    scenario = load_scenario(scenario_path, list(overrides) + [(param, value)])
    _, report = run_compare(scenario, out=out)
    return report["metrics"]


def run_sweep(scenario_path, param, values, overrides=(), out=None, workers=1):
    """One comparison per parameter value; rows keep the order of ``values``."""
    if not numeric_field(param):
        raise UsageError(f"--param {param}: not a numeric scenario field")
    if not values:
        raise UsageError("--values: empty value list")
    # fail early on a bad base scenario, before any worker starts
    load_scenario(scenario_path, overrides)
    out = None if out is None else _out_dir(out)
    jobs = [(scenario_path, tuple(overrides), param, v,
             None if out is None else out / "points" / f"{i:03d}") for i, v in enumerate(values)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    names = [n for n in results[0] if n != "delta"]
    header = [param] + [f"{n}:{m}" for n in names for m in SWEEP_METRICS]
    rows = [[format_number(v)] + [format_number(r[n][m]) for n in names for m in SWEEP_METRICS]
            for v, r in zip(values, results)]
    if out is not None:
        path = out / "sweep.csv"
        try:
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                w.writerows(rows)
        except OSError as err:
            raise OutputError(f"{path}: {err.strerror or err}") from None
    return header, rows


def _parse_values(text):
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            values.append(float(part))
        except ValueError:
            raise UsageError(f"--values: {part!r} is not a number") from None
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pigvent", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario TOML file")
    common.add_argument("--out", default=None,
                        help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted scenario field override, repeatable")
    common.add_argument("--charts", action="store_true", help="also write SVG charts")

    p = sub.add_parser("simulate", parents=[common], help="closed-loop run of one controller")
    p.add_argument("--controller", choices=("rule", "mpc"), default="rule")
    sub.add_parser("validate", parents=[common], help="replay recorded ventilation, score against observations")
    p = sub.add_parser("compare", parents=[common], help="MPC against rule-based control")
    p.add_argument("--controllers", default="mpc,rule", help="two controllers, comma-separated")
    p = sub.add_parser("sweep", parents=[common], help="compare across values of one parameter")
    p.add_argument("--param", required=True, help="dotted numeric scenario field, e.g. mpc.weight_energy")
    p.add_argument("--values", required=True, help="comma-separated numbers")
    p.add_argument("--workers", type=int, default=1, help="parallel sweep points")
    return parser


def _dispatch(args) -> None:
    out = args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
    overrides = [parse_override(o) for o in args.override]
    if args.command == "sweep":
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")
        run_sweep(args.scenario, args.param, _parse_values(args.values), overrides, out, args.workers)
        return
    scenario = load_scenario(args.scenario, overrides)
    if args.command == "simulate":
        run_simulate(scenario, args.controller, out, args.charts)
    elif args.command == "validate":
        run_validate(scenario, out, args.charts)
    elif args.command == "compare":
        pair = tuple(c.strip() for c in args.controllers.split(","))
        if len(pair) != 2 or any(c not in DISPLAY for c in pair):
            raise UsageError(f"--controllers: expected two of rule, mpc; got {args.controllers!r}")
        run_compare(scenario, pair, out, args.charts)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _dispatch(args)
    except ScenarioError as err:
        for issue in err.issues:
            print(f"pigvent: error: {issue}", file=sys.stderr)
        return 2
    except (ScenarioParseError, TimeseriesError, UsageError) as err:
        print(f"pigvent: error: {err}", file=sys.stderr)
        return 2
    except (PigventError, OSError, ValueError, ArithmeticError) as err:
        print(f"pigvent: error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
