import itertools

import numpy as np
import pytest

from app.domain.channel import WaterProperties
from app.domain.errors import ConfigError
from app.domain.harvester import CellMode
from app.domain.policy import (
    DualWavelength,
    DualWavelengthPlan,
    LinkSample,
    PowerSplit,
    PowerSplitting,
    ProtocolSwitching,
    Role,
    TimeSwitchSchedule,
    TimeSwitching,
    assign_spatial,
    assign_spatial_exhaustive,
    mode_at,
    next_decode_window,
    next_mode_change,
    optimality_gap,
    photovoltaic_time,
    split,
)


# --- 1. TIME SWITCHING ---
def test_mode_follows_the_schedule():
    schedule = TimeSwitchSchedule(t1=3.0, t2=1.0)
    assert mode_at(schedule, 0.0) is CellMode.PHOTOVOLTAIC
    assert mode_at(schedule, 2.999) is CellMode.PHOTOVOLTAIC
    assert mode_at(schedule, 3.0) is CellMode.PHOTOCONDUCTIVE
    assert mode_at(schedule, 4.0) is CellMode.PHOTOVOLTAIC
    assert schedule.duty_cycle == 0.75


def test_phase_offset_shifts_the_schedule():
    schedule = TimeSwitchSchedule(t1=1.0, t2=1.0, phase_offset=0.5)
    assert mode_at(schedule, 0.0) is CellMode.PHOTOCONDUCTIVE
    assert mode_at(schedule, 0.5) is CellMode.PHOTOVOLTAIC


def test_single_mode_schedules():
    always_decode = TimeSwitchSchedule(t1=0.0, t2=1.0)
    assert all(mode_at(always_decode, t) is CellMode.PHOTOCONDUCTIVE for t in (0.0, 0.3, 7.9))
    assert next_mode_change(always_decode, 2.0) is None
    always_harvest = TimeSwitchSchedule(t1=1.0, t2=0.0)
    assert mode_at(always_harvest, 5.5) is CellMode.PHOTOVOLTAIC


def test_empty_schedule_rejected():
    with pytest.raises(ConfigError):
        TimeSwitchSchedule(0.0, 0.0)


def test_mode_at_rejects_negative_time():
    with pytest.raises(ValueError):
        mode_at(TimeSwitchSchedule(1.0, 1.0), -1.0)


def test_next_mode_change_and_decode_window():
    schedule = TimeSwitchSchedule(t1=2.0, t2=1.0)
    assert next_mode_change(schedule, 0.5) == 2.0
    assert next_mode_change(schedule, 2.5) == 3.0
    assert next_decode_window(schedule, 0.0, 0.5) == 2.0
    assert next_decode_window(schedule, 2.2, 0.5) == 2.2
    assert next_decode_window(schedule, 2.8, 0.5) == 5.0
    assert next_decode_window(schedule, 0.0, 1.5) is None


def test_photovoltaic_time_over_whole_periods():
    schedule = TimeSwitchSchedule(t1=1.0, t2=1.0)
    assert photovoltaic_time(schedule, 0.0, 60.0) == pytest.approx(30.0)
    assert photovoltaic_time(TimeSwitchSchedule(3.0, 1.0), 0.0, 10.0) == pytest.approx(8.0)


# --- 2. POWER SPLITTING ---
def test_split_examples():
    assert split(PowerSplit(0.5), 1.0) == (0.5, 0.5)
    assert split(PowerSplit(1.0), 1.0) == (1.0, 0.0)
    assert split(PowerSplit(0.0), 0.7) == (0.0, 0.7)


def test_split_conserves_power_exactly():
    rng = np.random.default_rng(99)
    for alpha, power in zip(rng.uniform(0, 1, 1000), rng.uniform(0, 10, 1000)):
        harvest, decode = split(PowerSplit(float(alpha)), float(power))
        assert harvest + decode == float(power)
        assert harvest >= 0 and decode >= 0


@pytest.mark.parametrize("alpha", [-0.1, 1.3])
def test_split_ratio_out_of_range(alpha):
    with pytest.raises(ConfigError) as e:
        PowerSplit(alpha)
    assert e.value.path == "policy.alpha"


# --- 3. SPATIAL SPLITTING ---
def test_single_receiver_takes_strongest_link_for_data():
    link_power = {("t1", "r1"): 1e-3, ("t2", "r1"): 2e-3}
    assignment = assign_spatial(["t1", "t2"], ["r1"], link_power, {"r1": 1e-6})
    assert assignment.roles == {"t1": Role.ENERGY, "t2": Role.DATA}
    assert assignment.data_sources("r1") == {"t2"}
    assert assignment.energy_sources("r1") == {"t1"}


def test_ties_go_to_the_lowest_id():
    link_power = {("a", "r"): 1.0, ("b", "r"): 1.0}
    assignment = assign_spatial(["b", "a"], ["r"], link_power, {"r": 0.1})
    assert assignment.roles["a"] is Role.DATA


def test_receiver_without_feasible_data_link_is_reported():
    link_power = {("t1", "r1"): 1e-9}
    assignment = assign_spatial(["t1"], ["r1"], link_power, {"r1": 1e-6})
    assert assignment.infeasible == ("r1",)
    assert assignment.roles["t1"] is Role.ENERGY


def test_energy_only_transmitters_never_carry_data():
    link_power = {("laser", "r"): 5.0, ("led", "r"): 1.0}
    assignment = assign_spatial(["laser", "led"], ["r"], link_power, {"r": 0.5}, data_capable={"led"})
    assert assignment.roles == {"laser": Role.ENERGY, "led": Role.DATA}


def test_no_transmitters_is_a_config_error():
    with pytest.raises(ConfigError):
        assign_spatial([], ["r"], {}, {})


def test_greedy_against_brute_force():
    rng = np.random.default_rng(31)
    gaps = []
    for _ in range(100):
        n_tx, n_rx = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        txs = [f"t{i}" for i in range(n_tx)]
        rxs = [f"r{j}" for j in range(n_rx)]
        link_power = {
            (t, r): float(rng.uniform(0, 1e-3)) * float(rng.random() > 0.3) for t, r in itertools.product(txs, rxs)
        }
        demands = {r: float(rng.uniform(0, 6e-4)) for r in rxs if rng.random() > 0.2}

        greedy = assign_spatial(txs, rxs, link_power, demands)
        optimum = assign_spatial_exhaustive(txs, rxs, link_power, demands)
        if not optimum.infeasible:
            assert not greedy.infeasible
        gap = optimality_gap(greedy, optimum, link_power)
        assert 0.0 <= gap <= 1.0 + 1e-12
        gaps.append(gap)
    print(f"greedy harvested-power gap: mean {np.mean(gaps):.4f}, max {np.max(gaps):.4f}")


# --- 4. DUAL WAVELENGTH AND POLICY ROUTING ---
def _water_table():
    return {450.0: WaterProperties(0.114, 0.037), 520.0: WaterProperties(0.05, 0.03)}


def test_dual_wavelength_needs_two_distinct_channels():
    plan = DualWavelengthPlan(450.0, 520.0, _water_table())
    assert plan.energy_wavelength == 450.0
    with pytest.raises(ConfigError):
        DualWavelengthPlan(450.0, 450.0, _water_table())
    same = {450.0: WaterProperties(0.1, 0.1), 520.0: WaterProperties(0.1, 0.1)}
    with pytest.raises(ConfigError):
        DualWavelengthPlan(450.0, 520.0, same)


def test_policy_routing():
    links = [
        LinkSample("a", 0.4, carries_data=True, wavelength=450.0),
        LinkSample("b", 0.1, carries_data=False, wavelength=520.0),
    ]
    protocol = ProtocolSwitching()
    assert protocol.route("r", links, CellMode.PHOTOVOLTAIC).harvest == pytest.approx(0.5)
    assert protocol.route("r", links, CellMode.PHOTOCONDUCTIVE).decode == pytest.approx(0.4)

    routing = PowerSplitting(PowerSplit(0.25)).route("r", links, CellMode.PHOTOVOLTAIC)
    assert routing.harvest == pytest.approx(0.1 + 0.1)
    assert routing.decode == pytest.approx(0.3)

    dual = DualWavelength(DualWavelengthPlan(520.0, 450.0, _water_table())).route("r", links, CellMode.PHOTOVOLTAIC)
    assert dual.harvest == pytest.approx(0.1)
    assert dual.decode == pytest.approx(0.4)

    ts = TimeSwitching(TimeSwitchSchedule(1.0, 1.0))
    assert ts.cell_mode(1.5) is CellMode.PHOTOCONDUCTIVE
    assert protocol.cell_mode(1.5) is None
