import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pigvent import psychro
from pigvent.control import ComfortBands, MpcConfig, stage_cost
from pigvent.heatload import Envelope, PigGroup, envelope_heat, pig_heat
from pigvent.mpc import mpc_solve, predict_cost
from pigvent.plant import Exogenous, ExogenousSeries, HouseState, PlantParams, step

BANDS = ComfortBands()


def _brute_cost(u_seq, start, rows, params, cfg, bands):
    """Re-simulate with the public step() and sum the stage costs by hand."""
    state = start
    total = 0.0
    for u, row in zip(u_seq, rows):
        state = step(state, u, row, params, dt=cfg.control_interval)
        t, rh = state.indoor_temperature, state.indoor_relative_humidity
        dt_ = max(0.0, bands.temp_low - t, t - bands.temp_high)
        drh = max(0.0, bands.rh_low - rh, rh - bands.rh_high)
        total += cfg.weight_temp * dt_ ** 2 + cfg.weight_humidity * drh ** 2 + cfg.weight_energy * (u / cfg.u_max) ** 2
    return total


def _exhaustive(start, exo, params, cfg, bands):
    levels = np.linspace(cfg.u_min, cfg.u_max, 9)
    rows = [exo[k] for k in range(cfg.steps)]
    return min(_brute_cost(p, start, rows, params, cfg, bands) for p in itertools.product(levels, repeat=cfg.steps))


def _params(count=100, moisture=0.05):
    return PlantParams(pigs=PigGroup(count, 40.0), envelope=Envelope(0.025, 300.0, 0.05), room_volume=600.0,
                       moisture_production=moisture, q_devices=100.0)


class TestPredictCost:
    def test_energy_only_when_nothing_happens(self):
        params = PlantParams(pigs=PigGroup(0, 40.0), animal_places=50)
        cfg = MpcConfig()
        exo = ExogenousSeries.constant(Exogenous(23.0, 50.0, 23.0), cfg.steps)
        cost = predict_cost(np.full(cfg.steps, 4.0), HouseState(23.0, 50.0), exo, params, cfg, BANDS)
        assert cost == pytest.approx(cfg.steps * 50 * (4 / 120) ** 2, rel=1e-12)

    def test_single_step_is_stage_cost(self):
        params = _params()
        cfg = MpcConfig(prediction_horizon=600.0)
        exo = Exogenous(26.0, 70.0, 30.0)
        nxt = step(HouseState(25.0, 60.0), 30.0, exo, params)
        expected = stage_cost(nxt.indoor_temperature, nxt.indoor_relative_humidity, 30.0, cfg, BANDS)
        got = predict_cost([30.0], HouseState(25.0, 60.0), ExogenousSeries.constant(exo, 1), params, cfg, BANDS)
        assert got == expected

    @settings(max_examples=40, deadline=None)
    @given(
        u=st.lists(st.floats(4.0, 120.0), min_size=6, max_size=6),
        t_in=st.floats(0.0, 35.0),
        rh=st.floats(20.0, 95.0),
    )
    def test_matches_brute_force(self, u, t_in, rh):
        params, cfg = _params(), MpcConfig()
        exo = ExogenousSeries.constant(Exogenous(t_in, rh, t_in + 2.0), 6)
        rows = [exo[k] for k in range(6)]
        start = HouseState(22.0, 60.0)
        got = predict_cost(u, start, exo, params, cfg, BANDS)
        assert got == pytest.approx(_brute_cost(u, start, rows, params, cfg, BANDS), rel=1e-12, abs=1e-12)

    def test_infeasible_candidate_is_infinite(self):
        params, cfg = _params(), MpcConfig(prediction_horizon=1200.0)
        exo = ExogenousSeries.constant(Exogenous(20.0, 50.0, 20.0), 2)
        assert predict_cost([10.0, 0.0], HouseState(20.0, 50.0), exo, params, cfg, BANDS) == math.inf

    def test_short_forecast_rejected(self):
        params, cfg = _params(), MpcConfig()
        exo = ExogenousSeries.constant(Exogenous(20.0, 50.0, 20.0), 3)
        with pytest.raises(ValueError):
            predict_cost(np.full(6, 10.0), HouseState(20.0, 50.0), exo, params, cfg, BANDS)


class TestSolve:
    def test_benign_returns_minimum_ventilation(self):
        params = PlantParams(pigs=PigGroup(0, 40.0), animal_places=50)
        cfg = MpcConfig()
        exo = ExogenousSeries.constant(Exogenous(23.0, 50.0, 23.0), cfg.steps)
        sol = mpc_solve(HouseState(23.0, 50.0), exo, params, cfg, BANDS)
        np.testing.assert_array_equal(sol.sequence, 4.0)
        assert sol.move == 4.0
        short = MpcConfig(prediction_horizon=1200.0)
        assert _exhaustive(HouseState(23.0, 50.0), exo, params, short, BANDS) == pytest.approx(
            predict_cost([4.0, 4.0], HouseState(23.0, 50.0), exo, params, short, BANDS))

    def test_hot_without_energy_penalty_saturates(self):
        # dry air and a net sensible gain: every extra m3/h pulls the room
        # toward the (too hot) inlet from above
        params = _params(moisture=0.0)
        cfg = MpcConfig(weight_energy=0.0)
        exo = ExogenousSeries.constant(Exogenous(27.0, 50.0, 33.0), cfg.steps)
        sol = mpc_solve(HouseState(28.0, 50.0), exo, params, cfg, BANDS)
        np.testing.assert_allclose(sol.sequence, 120.0)

    def test_two_step_grid_oracle(self):
        params = _params()
        cfg = MpcConfig(prediction_horizon=1200.0)
        exo = ExogenousSeries.constant(Exogenous(24.0, 75.0, 29.0), 2)
        start = HouseState(26.0, 70.0)
        sol = mpc_solve(start, exo, params, cfg, BANDS)
        assert sol.cost <= _exhaustive(start, exo, params, cfg, BANDS) + 1e-6

    def test_cost_matches_sequence(self):
        params, cfg = _params(), MpcConfig()
        exo = ExogenousSeries.constant(Exogenous(18.0, 80.0, 14.0), cfg.steps)
        start = HouseState(21.0, 75.0)
        sol = mpc_solve(start, exo, params, cfg, BANDS)
        assert sol.cost == predict_cost(sol.sequence, start, exo, params, cfg, BANDS)

    def test_deterministic(self):
        params, cfg = _params(), MpcConfig()
        exo = ExogenousSeries.constant(Exogenous(27.0, 60.0, 30.0), cfg.steps)
        a = mpc_solve(HouseState(26.0, 60.0), exo, params, cfg, BANDS, warm_start=np.full(6, 50.0))
        b = mpc_solve(HouseState(26.0, 60.0), exo, params, cfg, BANDS, warm_start=np.full(6, 50.0))
        np.testing.assert_array_equal(a.sequence, b.sequence)
        assert a.cost == b.cost

    def test_iteration_cap_sets_flag(self):
        params = _params()
        cfg = MpcConfig(max_iter=1, grid_levels=2, exhaustive_limit=0)
        exo = ExogenousSeries.constant(Exogenous(26.0, 70.0, 29.0), cfg.steps)
        sol = mpc_solve(HouseState(25.0, 70.0), exo, params, cfg, BANDS, warm_start=np.full(6, 40.0))
        assert sol.iterations == 1
        assert sol.capped
        assert np.all((sol.sequence >= 4.0) & (sol.sequence <= 120.0))

    def test_short_warm_start_is_padded(self):
        params, cfg = _params(), MpcConfig()
        exo = ExogenousSeries.constant(Exogenous(22.0, 60.0, 24.0), cfg.steps)
        sol = mpc_solve(HouseState(22.0, 60.0), exo, params, cfg, BANDS, warm_start=[200.0, 30.0])
        assert len(sol.sequence) == cfg.steps


def _random_instance(seed, n):
    rng = np.random.default_rng(seed)
    params = PlantParams(
        pigs=PigGroup(int(rng.integers(20, 300)), float(rng.uniform(15, 110))),
        envelope=Envelope(0.025, float(rng.uniform(100, 600)), 0.05),
        room_volume=float(rng.uniform(300, 2000)),
        moisture_production=float(rng.uniform(0, 0.3)),
        q_devices=float(rng.uniform(0, 2000)),
    )
    cfg = MpcConfig(prediction_horizon=600.0 * n, weight_temp=float(rng.uniform(1, 200)),
                    weight_humidity=float(rng.uniform(1, 200)), weight_energy=float(rng.uniform(0, 100)))
    t = rng.uniform(5, 34, n)
    exo = ExogenousSeries(t, rng.uniform(30, 95, n), t + rng.uniform(-4, 6, n), rng.uniform(0, 300, n))
    start = HouseState(float(rng.uniform(16, 32)), float(rng.uniform(40, 95)))
    warm = rng.uniform(4, 120, n) if rng.random() < 0.5 else None
    return params, cfg, exo, start, warm


@pytest.mark.parametrize("seed", range(20))
def test_solver_against_grid_and_guards(seed):
    n = 1 + seed % 3
    params, cfg, exo, start, warm = _random_instance(seed, n)
    sol = mpc_solve(start, exo, params, cfg, BANDS, warm_start=warm)
    assert np.all(sol.sequence >= cfg.u_min) and np.all(sol.sequence <= cfg.u_max)
    assert sol.cost <= _exhaustive(start, exo, params, cfg, BANDS) + 1e-6
    guards = [np.full(n, cfg.u_min), np.full(n, cfg.u_max)]
    if warm is not None:
        guards.append(warm)
    for g in guards:
        assert sol.cost <= predict_cost(g, start, exo, params, cfg, BANDS)


@pytest.mark.parametrize("seed", range(20, 40))
def test_grid_optimum_without_enumeration(seed):
    # moves do not interact in the default plant mode, so the coordinate
    # search alone must reach the grid optimum
    params, cfg, exo, start, warm = _random_instance(seed, 1 + seed % 3)
    cfg = MpcConfig(prediction_horizon=cfg.prediction_horizon, weight_temp=cfg.weight_temp,
                    weight_humidity=cfg.weight_humidity, weight_energy=cfg.weight_energy, exhaustive_limit=0)
    sol = mpc_solve(start, exo, params, cfg, BANDS, warm_start=warm)
    assert sol.cost <= _exhaustive(start, exo, params, cfg, BANDS) + 1e-6


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("factor", [2.0, 0.25, 16.0])
def test_argmin_invariant_under_weight_scaling(seed, factor):
    params, cfg, exo, start, warm = _random_instance(100 + seed, 3 + seed % 4)
    scaled = MpcConfig(prediction_horizon=cfg.prediction_horizon, weight_temp=cfg.weight_temp * factor,
                       weight_humidity=cfg.weight_humidity * factor, weight_energy=cfg.weight_energy * factor)
    a = mpc_solve(start, exo, params, cfg, BANDS, warm_start=warm)
    b = mpc_solve(start, exo, params, scaled, BANDS, warm_start=warm)
    np.testing.assert_array_equal(a.sequence, b.sequence)
    assert b.cost == pytest.approx(factor * a.cost, rel=1e-12)


def test_independent_balance_oracle():
    # one plant step checked against a hand-rolled fixed-point solve
    params = _params(moisture=0.0)
    exo = Exogenous(20.0, 60.0, 25.0)
    u = 40.0
    flow = params.places * u
    d = psychro.specific_humidity(20.0, 60.0)
    h_out = psychro.enthalpy(20.0, d)
    lo, hi = -50.0, 80.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        q = pig_heat(params.pigs, mid) + envelope_heat(params.envelope, mid, 25.0) + params.q_devices
        if psychro.enthalpy(mid, d) - h_out - 3.6 * q / (1.2 * flow) > 0:
            hi = mid
        else:
            lo = mid
    got = step(HouseState(20.0, 60.0), u, exo, params)
    assert got.indoor_temperature == pytest.approx(0.5 * (lo + hi), abs=1e-9)
