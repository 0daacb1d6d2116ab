import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pigvent import psychro
from pigvent.exceptions import InfeasibleVentilation, SimulationError
from pigvent.heatload import Envelope, PigGroup, envelope_heat, pig_heat
from pigvent.plant import (
    FLAG_CONDENSATION,
    Exogenous,
    ExogenousSeries,
    HouseState,
    PlantParams,
    TrajectoryLog,
    mixed_enthalpy,
    moisture_update,
    required_ventilation,
    simulate,
    step,
)


@pytest.fixture(scope="module")
def barn():
    return PlantParams(
        pigs=PigGroup(count=100, weight=40.0),
        envelope=Envelope(0.025, 300.0, 0.05),
        room_volume=600.0,
        moisture_production=0.1,
        q_devices=200.0,
    )


@pytest.fixture(scope="module")
def empty_room():
    return PlantParams(pigs=PigGroup(count=0, weight=40.0), animal_places=100)


class TestMixedEnthalpy:
    def test_no_sources(self):
        assert mixed_enthalpy(40.0, 0.0, 3000.0, 1.2) == 40.0

    def test_example(self):
        assert mixed_enthalpy(40.0, 1000.0, 3000.0, 1.2) == pytest.approx(41.0, abs=1e-12)

    def test_inverse_proportional_to_flow(self):
        assert mixed_enthalpy(40.0, 1000.0, 6000.0, 1.2) == pytest.approx(40.5, abs=1e-12)

    @pytest.mark.parametrize("flow", [0.0, -10.0])
    def test_rejects_nonpositive_flow(self, flow):
        with pytest.raises(InfeasibleVentilation):
            mixed_enthalpy(40.0, 1000.0, flow)


class TestRequiredVentilation:
    def test_example(self):
        assert required_ventilation(1000.0, 41.0, 40.0, 1.2) == pytest.approx(3000.0, rel=1e-12)

    def test_zero_difference_is_infeasible(self):
        with pytest.raises(InfeasibleVentilation):
            required_ventilation(1000.0, 40.0, 40.0)

    def test_no_heat(self):
        assert required_ventilation(0.0, 41.0, 40.0) == 0.0

    def test_sign_mismatch_is_infeasible(self):
        with pytest.raises(InfeasibleVentilation):
            required_ventilation(-500.0, 41.0, 40.0)

    @given(
        q=st.floats(1.0, 1e5) | st.floats(-1e5, -1.0),
        h_out=st.floats(-10, 90),
        flow=st.floats(50.0, 1e5),
    )
    def test_inverse_of_mixed_enthalpy(self, q, h_out, flow):
        h_in = mixed_enthalpy(h_out, q, flow, 1.2)
        assert required_ventilation(q, h_in, h_out, 1.2) == pytest.approx(flow, rel=1e-9)


class TestMoistureUpdate:
    def test_no_production(self):
        assert moisture_update(0.007, 0.0, 3000.0) == 0.007

    def test_example(self):
        assert moisture_update(0.007, 3.6, 3000.0, 1.2) == pytest.approx(0.008, abs=1e-15)

    def test_doubling_flow_halves_increment(self):
        a = moisture_update(0.007, 3.6, 3000.0) - 0.007
        b = moisture_update(0.007, 3.6, 6000.0) - 0.007
        assert b == pytest.approx(a / 2, rel=1e-12)

    def test_rejects_zero_flow(self):
        with pytest.raises(InfeasibleVentilation):
            moisture_update(0.007, 1.0, 0.0)


class TestStep:
    def test_identity_without_sources(self, empty_room):
        exo = Exogenous(18.0, 65.0, 18.0)
        out = step(HouseState(25.0, 40.0), 30.0, exo, empty_room)
        assert out.indoor_temperature == pytest.approx(18.0, abs=1e-9)
        assert out.indoor_relative_humidity == pytest.approx(65.0, abs=1e-9)

    def test_winter_indoor_warmer_than_inlet(self, barn):
        exo = Exogenous(10.0, 70.0, 10.0)
        out = step(HouseState(18.0, 60.0), 20.0, exo, barn)
        assert out.indoor_temperature > 10.0

    def test_result_is_explicit_fixed_point(self, barn):
        # Iterating the explicit update at a stable flow converges to the
        # state the implicit balance returns in one step.
        exo = Exogenous(22.0, 75.0, 26.0)
        u = 80.0
        implicit = step(HouseState(22.0, 60.0), u, exo, barn)
        explicit = barn.with_(heat_evaluation="explicit")
        state = HouseState(22.0, 60.0)
        for _ in range(200):
            state = step(state, u, exo, explicit)
        assert state.indoor_temperature == pytest.approx(implicit.indoor_temperature, abs=1e-9)
        assert state.indoor_relative_humidity == pytest.approx(implicit.indoor_relative_humidity, abs=1e-8)

    def test_balance_residual_at_fixed_point(self, barn):
        exo = Exogenous(22.0, 75.0, 26.0)
        u = 50.0
        state = step(HouseState(22.0, 60.0), u, exo, barn)
        t = state.indoor_temperature
        d = psychro.specific_humidity(t, state.indoor_relative_humidity)
        flow = barn.places * u
        q = pig_heat(barn.pigs, t) + envelope_heat(barn.envelope, t, 26.0) + barn.q_devices
        h_out = psychro.enthalpy(22.0, psychro.specific_humidity(22.0, 75.0))
        residual = psychro.enthalpy(t, d) - h_out - 3.6 * q / (1.2 * flow)
        assert abs(residual) < 1e-6

    def test_explicit_mode_is_unstable_at_minimum_ventilation(self, barn):
        explicit = barn.with_(heat_evaluation="explicit")
        exo = Exogenous(15.0, 60.0, 10.0)
        state = HouseState(20.0, 60.0)
        with pytest.raises(SimulationError):
            for _ in range(10):
                state = step(state, 4.0, exo, explicit)
        # the implicit update stays put
        a = step(HouseState(20.0, 60.0), 4.0, exo, barn)
        b = step(a, 4.0, exo, barn)
        assert a.indoor_temperature == pytest.approx(b.indoor_temperature, abs=1e-9)

    @settings(max_examples=60)
    @given(
        u=st.floats(4.0, 110.0),
        du=st.floats(1.0, 10.0),
        t_in=st.floats(5.0, 35.0),
        rh=st.floats(20.0, 90.0),
    )
    def test_more_ventilation_moves_toward_inlet(self, barn, u, du, t_in, rh):
        exo = Exogenous(t_in, rh, t_in + 3.0)
        dry = barn.with_(moisture_production=0.0)
        h_out = psychro.enthalpy(t_in, psychro.specific_humidity(t_in, rh))

        def gap(rate):
            s = step(HouseState(20.0, 50.0), rate, exo, dry)
            d = psychro.specific_humidity(s.indoor_temperature, s.indoor_relative_humidity)
            return abs(psychro.enthalpy(s.indoor_temperature, d) - h_out)

        assert gap(u + du) < gap(u)

    def test_supersaturation_is_clamped_and_flagged(self, barn):
        wet = barn.with_(moisture_production=0.5)
        exo = ExogenousSeries.constant(Exogenous(15.0, 95.0, 12.0), 3)
        log = simulate(HouseState(15.0, 90.0), [4.0, 4.0, 4.0], exo, wet)
        assert np.all(log.indoor_rh <= 100.0)
        assert log.has_flag(FLAG_CONDENSATION).all()
        sat = psychro.saturation_specific_humidity(log.indoor_temperature)
        np.testing.assert_allclose(log.specific_humidity, sat, rtol=1e-12)

    def test_rejects_zero_ventilation(self, barn):
        with pytest.raises(InfeasibleVentilation):
            step(HouseState(20.0, 50.0), 0.0, Exogenous(15.0, 60.0, 15.0), barn)

    def test_rejects_nonpositive_dt(self, barn):
        with pytest.raises(ValueError):
            step(HouseState(20.0, 50.0), 10.0, Exogenous(15.0, 60.0, 15.0), barn, dt=0)

    def test_mixing_relaxes_toward_balance(self, barn):
        mixing = barn.with_(mixing=True)
        exo = Exogenous(15.0, 60.0, 12.0)
        target = step(HouseState(20.0, 50.0), 10.0, exo, barn)
        first = step(HouseState(20.0, 50.0), 10.0, exo, mixing)
        # 600 s at 1000 m3/h through 600 m3 replaces about 24 % of the air
        assert 15.0 < first.indoor_temperature < 20.0
        assert abs(first.indoor_temperature - target.indoor_temperature) < abs(20.0 - target.indoor_temperature)
        state = first
        for _ in range(400):
            state = step(state, 10.0, exo, mixing)
        assert state.indoor_temperature == pytest.approx(target.indoor_temperature, abs=1e-6)


def test_params_need_animal_places():
    with pytest.raises(ValueError):
        PlantParams(pigs=PigGroup(0, 40))


def test_params_reject_unknown_heat_evaluation():
    with pytest.raises(ValueError):
        PlantParams(pigs=PigGroup(10, 40), heat_evaluation="trapezoid")


class TestSimulate:
    def test_empty_series(self, barn):
        exo = ExogenousSeries(np.zeros(0), np.zeros(0), np.zeros(0))
        log = simulate(HouseState(20.0, 50.0), [], exo, barn)
        assert len(log) == 0

    def test_identity_over_long_run(self, empty_room):
        rng = np.random.default_rng(3)
        n = 1000
        t = rng.uniform(-5, 35, n)
        rh = rng.uniform(5, 100, n)
        exo = ExogenousSeries(t, rh, t)
        log = simulate(HouseState(20.0, 50.0), rng.uniform(4, 120, n), exo, empty_room)
        assert np.max(np.abs(log.indoor_temperature - t)) < 1e-9
        assert np.max(np.abs(log.indoor_rh - rh)) < 1e-9

    def test_energy_budget_residual(self, barn):
        rng = np.random.default_rng(4)
        n = 500
        t = rng.uniform(5, 32, n)
        exo = ExogenousSeries(t, rng.uniform(30, 90, n), t + rng.uniform(-3, 6, n), rng.uniform(0, 500, n))
        u = rng.uniform(4, 120, n)
        log = simulate(HouseState(20.0, 50.0), u, exo, barn)
        flow = barn.places * u
        residual = 1.2 * flow * (log.h_in - log.h_out) / 3.6 - log.q_total
        assert np.max(np.abs(residual)) < 1e-6
        np.testing.assert_array_equal(log.q_total, log.q_pig + log.q_envelope + log.q_devices)

    def test_constant_inputs_reach_fixed_point(self, barn):
        exo = ExogenousSeries.constant(Exogenous(24.0, 70.0, 28.0), 50)
        explicit = barn.with_(heat_evaluation="explicit")
        log = simulate(HouseState(30.0, 40.0), np.full(50, 90.0), exo, explicit)
        direct = step(HouseState(30.0, 40.0), 90.0, exo[0], barn)
        assert log.indoor_temperature[-1] == pytest.approx(direct.indoor_temperature, abs=1e-8)

    def test_length_mismatch(self, barn):
        exo = ExogenousSeries.constant(Exogenous(24.0, 70.0, 28.0), 5)
        with pytest.raises(ValueError):
            simulate(HouseState(20.0, 50.0), np.full(4, 30.0), exo, barn)

    def test_error_reports_step_index(self, barn):
        exo = ExogenousSeries.constant(Exogenous(24.0, 70.0, 28.0), 5)
        with pytest.raises(SimulationError) as info:
            simulate(HouseState(20.0, 50.0), [30.0, 30.0, 0.0, 30.0, 30.0], exo, barn)
        assert info.value.step_index == 2

    def test_log_concat_and_empty(self, barn):
        exo = ExogenousSeries.constant(Exogenous(24.0, 70.0, 28.0), 4)
        log = simulate(HouseState(20.0, 50.0), np.full(4, 30.0), exo, barn)
        both = log.concat(TrajectoryLog.empty()).concat(log)
        assert len(both) == 8
        assert math.isnan(both.solver_cost[0])


def test_exogenous_validation():
    with pytest.raises(ValueError):
        Exogenous(20.0, 120.0, 20.0)
    with pytest.raises(ValueError):
        ExogenousSeries(np.zeros(3), np.full(3, 50.0), np.zeros(2))
