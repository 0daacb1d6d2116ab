import csv
import json
import xml.etree.ElementTree as ET
from datetime import datetime, timedelta

import numpy as np
import pytest

from pigvent import psychro
from pigvent.cli import main, run_sweep
from pigvent.heatload import Envelope, PigGroup, envelope_heat, pig_heat
from pigvent.scenario import write_timeseries

BENIGN = dict(pigs=20, weight=40.0, inlet=14.0, rh=70.0, area=200.0, q_devices=0.0)


def _write(tmp_path, name="s", n=18, inlet=18.0, outdoor=None, rh=50.0, body="", observed=None):
    stamps = [datetime(2024, 5, 1) + timedelta(minutes=10 * k) for k in range(n)]
    cols = {"outdoor_real_temperature": np.full(n, inlet if outdoor is None else outdoor),
            "inlet_temperature": np.full(n, inlet), "inlet_relative_humidity": np.full(n, rh)}
    cols.update(observed or {})
    write_timeseries(tmp_path / f"{name}.csv", stamps, cols)
    path = tmp_path / f"{name}.toml"
    path.write_text(f'name = "{name}"\n[weather]\nfile = "{name}.csv"\n' + body)
    return path


def _fixed_point(u, pigs, weight, inlet, rh, area, q_devices):
    """Steady indoor temperature by bisection on the enthalpy balance."""
    group, env = PigGroup(pigs, weight), Envelope(0.025, area, 0.05)
    d = psychro.specific_humidity(inlet, rh)
    h_in = psychro.enthalpy(inlet, d)
    lo, hi = -20.0, 60.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        q = pig_heat(group, mid) + envelope_heat(env, mid, inlet) + q_devices
        if psychro.enthalpy(mid, d) - h_in - 3.6 * q / (1.2 * pigs * u) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@pytest.fixture
def benign(tmp_path):
    t_eq = _fixed_point(4.0, **BENIGN)
    assert 21.0 < t_eq < 24.0  # minimum ventilation alone keeps the room in the band
    body = (f"[plant]\npigs = {BENIGN['pigs']}\npig_weight = {BENIGN['weight']}\n"
            f"[plant.envelope]\narea = {BENIGN['area']}\n"
            f"[rule]\nsetpoint = 24.0\n[simulation]\ninitial_temperature = {t_eq!r}\ninitial_rh = 40.0\n")
    return _write(tmp_path, "benign", inlet=BENIGN["inlet"], rh=BENIGN["rh"], body=body)


@pytest.fixture
def hot(tmp_path):
    # just too warm: even full ventilation leaves the room about 0.2 degC above the band
    body = ("[plant]\npigs = 100\npig_weight = 40.0\nq_devices = 100.0\n"
            "[simulation]\ninitial_temperature = 26.0\ninitial_rh = 50.0\n")
    return _write(tmp_path, "hot", n=12, inlet=24.0, outdoor=27.0, body=body)


def _report(out, name="report.json"):
    return json.loads((out / name).read_text())


def test_simulate_benign_rule(benign, tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", "--scenario", str(benign), "--out", str(out), "--controller", "rule"]) == 0
    rep = _report(out)
    assert rep["metrics"]["comfort_temp_pct"] == 100.0
    with open(out / "trajectory_rule.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["ventilation"] for r in rows} == {"4"}
    assert rep["inputs"]["sha256"]["benign.csv"]


def test_missing_weather_exits_2(tmp_path, capsys):
    path = tmp_path / "s.toml"
    path.write_text('[weather]\nfile = "absent.csv"\n')
    assert main(["simulate", "--scenario", str(path), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and str(tmp_path / "absent.csv") in err[0]


def test_every_issue_on_its_own_line(tmp_path, capsys):
    path = _write(tmp_path, body="[mpc]\nweight_temp = -1\n[comfort]\ntemp_low = 30\n")
    assert main(["compare", "--scenario", str(path), "--out", str(tmp_path / "o")]) == 2
    assert len(capsys.readouterr().err.strip().splitlines()) == 2


def test_unknown_override_exits_2(benign, tmp_path, capsys):
    code = main(["simulate", "--scenario", str(benign), "--out", str(tmp_path), "--override", "mpc.nope=1"])
    assert code == 2 and "mpc.nope" in capsys.readouterr().err


def test_weight_energy_override_raises_energy(hot, tmp_path):
    base, free = tmp_path / "base", tmp_path / "free"
    assert main(["simulate", "--scenario", str(hot), "--controller", "mpc", "--out", str(base)]) == 0
    assert main(["simulate", "--scenario", str(hot), "--controller", "mpc", "--out", str(free),
                 "--override", "mpc.weight_energy=0"]) == 0
    assert _report(free)["metrics"]["energy_kwh"] > _report(base)["metrics"]["energy_kwh"]
    with open(free / "trajectory_mpc.csv") as fh:
        assert {r["ventilation"] for r in csv.DictReader(fh)} == {"120"}
    assert _report(free)["config"]["mpc"]["weight_energy"] == 0.0


def test_output_failure_exits_1(benign, tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["simulate", "--scenario", str(benign), "--out", str(blocker / "o")]) == 1
    assert str(blocker / "o") in capsys.readouterr().err


def test_compare_identical_controllers_zero_delta(benign, tmp_path):
    out = tmp_path / "o"
    assert main(["compare", "--scenario", str(benign), "--out", str(out), "--controllers", "rule,rule"]) == 0
    rep = _report(out, "comparison.json")
    assert all(v == 0.0 for v in rep["metrics"]["delta"].values() if v is not None)
    assert (out / "trajectory_rule_a.csv").read_bytes() == (out / "trajectory_rule_b.csv").read_bytes()


def test_compare_is_byte_deterministic(hot, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["compare", "--scenario", str(hot), "--out", str(a)]) == 0
    assert main(["compare", "--scenario", str(hot), "--out", str(b)]) == 0
    for name in ("trajectory_mpc.csv", "trajectory_rule.csv", "comparison.json", "comparison.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    table = _report(a, "comparison.json")["table"]
    assert set(table["Energy Consumption (kWh)"]) == {"MPC", "Rule-based"}


def test_output_dir_from_environment(benign, tmp_path, monkeypatch):
    monkeypatch.setenv("PIGVENT_OUT", str(tmp_path / "env"))
    assert main(["simulate", "--scenario", str(benign)]) == 0
    assert (tmp_path / "env" / "trajectory_rule.csv").exists()


def test_charts_are_svg(hot, tmp_path):
    out = tmp_path / "o"
    assert main(["compare", "--scenario", str(hot), "--out", str(out), "--charts"]) == 0
    root = ET.parse(out / "comparison.svg").getroot()
    assert root.tag.endswith("svg")


class TestValidate:
    def test_missing_observed_rh_named(self, tmp_path, capsys):
        obs = {"observed_indoor_temperature": np.full(18, 20.0), "observed_ventilation": np.full(18, 10.0)}
        path = _write(tmp_path, observed=obs)
        assert main(["validate", "--scenario", str(path), "--out", str(tmp_path / "o")]) == 2
        assert "observed_indoor_rh" in capsys.readouterr().err

    def test_self_consistent_observations(self, tmp_path):
        from pigvent.datasets import write_validation
        path = write_validation(tmp_path, noise_std=0.0, name="clean")
        out = tmp_path / "o"
        assert main(["validate", "--scenario", str(path), "--out", str(out), "--charts"]) == 0
        rep = _report(out, "validation.json")
        assert rep["metrics"]["temperature"]["rmse"] == 0.0
        assert rep["metrics"]["temperature"]["r2"] == 1.0
        assert rep["metrics"]["humidity"]["rmse"] == 0.0
        assert rep["metrics"]["temperature"]["r2_standard"] == 1.0
        assert rep["metrics"]["temperature"]["sd_standard"] == 0.0
        assert set(rep["table"]) == {"RMSE", "MAPE (%)", "SD", "R2"}
        assert (out / "validation.svg").exists()


class TestSweep:
    def test_energy_nonincreasing_in_weight(self, hot, tmp_path):
        header, rows = run_sweep(hot, "mpc.weight_energy", [0.0, 50.0, 500.0], out=tmp_path / "o")
        col = header.index("MPC:energy_kwh")
        energy = [float(r[col]) for r in rows]
        assert energy[0] >= energy[1] >= energy[2]
        assert energy[0] > energy[2]
        with open(tmp_path / "o" / "sweep.csv") as fh:
            assert list(csv.reader(fh))[1:] == rows

    def test_single_value_equals_compare(self, hot, tmp_path):
        out = tmp_path / "c"
        assert main(["compare", "--scenario", str(hot), "--out", str(out)]) == 0
        metrics = _report(out, "comparison.json")["metrics"]
        header, rows = run_sweep(hot, "mpc.weight_energy", [50.0])
        for name, value in zip(header[1:], rows[0][1:]):
            ctl, key = name.split(":")
            assert float(value) == pytest.approx(metrics[ctl][key], rel=5e-9)

    def test_parallel_matches_serial(self, hot, tmp_path):
        assert main(["sweep", "--scenario", str(hot), "--out", str(tmp_path / "s"), "--param", "rule.setpoint",
                     "--values", "20,24"]) == 0
        assert main(["sweep", "--scenario", str(hot), "--out", str(tmp_path / "p"), "--param", "rule.setpoint",
                     "--values", "20,24", "--workers", "2"]) == 0
        assert (tmp_path / "s" / "sweep.csv").read_bytes() == (tmp_path / "p" / "sweep.csv").read_bytes()

    @pytest.mark.parametrize("args", [["--param", "mpc.weight_energy", "--values", ""],
                                      ["--param", "plant.heat_evaluation", "--values", "1"],
                                      ["--param", "mpc.weight_energy", "--values", "1,x"]])
    def test_bad_sweeps_exit_2(self, hot, tmp_path, args):
        assert main(["sweep", "--scenario", str(hot), "--out", str(tmp_path / "o")] + args) == 2


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as info:
        main(["simulate"])
    assert info.value.code == 2
