import math
import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iotcoex import analytics as an
from iotcoex.simulator import mac_gate

ENERGY = an.EnergyProfile()


def profile(**kw):
    base = dict(arrival_rate=1 / 900, mean_airtime=0.25, devices_per_network=1)
    base.update(kw)
    return an.TrafficProfile(**base)


# success probabilities -------------------------------------------------

def test_isolated_single_device_is_certain():
    assert an.success_prob_isolated(profile(devices_per_network=1, mean_airtime=9.0)) == 1.0


def test_isolated_example():
    p = profile(mean_airtime=0.5, devices_per_network=2)
    assert an.success_prob_isolated(p) == pytest.approx(0.998889506, abs=1e-9)
    assert round(an.success_prob_isolated(p), 5) == 0.99889


def test_isolated_doubling_airtime_squares():
    p = profile(devices_per_network=7, arrival_rate=1 / 60)
    doubled = replace(p, mean_airtime=2 * p.mean_airtime)
    assert an.success_prob_isolated(doubled) == pytest.approx(an.success_prob_isolated(p) ** 2, rel=1e-12)


def test_retrial_rate_dominates_when_larger():
    p = profile(devices_per_network=5, retrial_rate=1 / 10)
    assert an.success_prob_isolated(p) == pytest.approx(math.exp(-2 * 0.25 * 4 * 0.1))


def test_coordinated_reduces_to_isolated():
    p = profile(devices_per_network=20, reuse_factor=3, neighbor_groups=((0, 1.0),))
    assert an.success_prob_coordinated(p) == pytest.approx(an.success_prob_isolated(p))
    assert an.success_prob_coordinated(replace(p, neighbor_groups=())) == an.success_prob_isolated(p)


def test_coordinated_example():
    p = profile(neighbor_groups=((8, 1.0),))
    # exponent -2 * 0.25 * 8 / 900 = -0.00444...
    assert an.success_prob_coordinated(p) == pytest.approx(0.99556541, abs=1e-8)


def test_uncoordinated_forces_reuse_one():
    p = profile(devices_per_network=30, reuse_factor=4, neighbor_groups=((4, 1.0), (4, 2.0)))
    assert an.success_prob_uncoordinated(p) == an.success_prob_coordinated(replace(p, reuse_factor=1))


def test_multiplicity_weakens_neighbors():
    strong = profile(devices_per_network=10, neighbor_groups=((4, 1.0),))
    weak = replace(strong, neighbor_groups=((4, 2.0),))
    assert an.success_prob_coordinated(weak) > an.success_prob_coordinated(strong)


@pytest.mark.parametrize(
    "kw",
    [
        {"arrival_rate": 0},
        {"retrial_rate": -1},
        {"mean_airtime": 0},
        {"devices_per_network": 0},
        {"reuse_factor": 0},
        {"max_transmissions": 0},
        {"neighbor_groups": ((1, 0.5),)},
        {"neighbor_groups": ((-1, 1.0),)},
    ],
)
def test_profile_validated(kw):
    with pytest.raises(ValueError):
        profile(**kw)


def test_from_bits():
    p = an.TrafficProfile.from_bits(1 / 300, 100, 20, 100)
    assert p.mean_airtime == pytest.approx(1.2)


# delay -------------------------------------------------------------------

def test_delay_certain_success():
    assert an.expected_delay(1.0, profile(mean_airtime=1.0, max_transmissions=5)) == 1.0


def test_delay_two_term_example():
    p = profile(mean_airtime=1.0, backoff_time=1.0, max_transmissions=1)
    assert an.expected_delay(0.5, p) == pytest.approx(0.5 * 1 + 0.25 * 3)
    assert an.expected_delay(0.5, p) == 1.25


def test_delay_rejects_zero():
    with pytest.raises(ValueError):
        an.expected_delay(0.0, profile())


def test_delay_monte_carlo_oracle():
    # E[delay * 1{success within K_max + 1 attempts}] by direct sampling
    p = profile(mean_airtime=0.7, backoff_time=2.0, max_transmissions=3)
    rng = random.Random(11)
    p_suc, n, acc = 0.4, 200_000, 0.0
    for _ in range(n):
        for k in range(p.max_transmissions + 1):
            if rng.random() < p_suc:
                acc += k * (0.7 + 2.0) + 0.7
                break
    assert an.expected_delay(p_suc, p) == pytest.approx(acc / n, rel=0.01)


def test_delay_decreasing_on_grid():
    p = profile(mean_airtime=1.0, backoff_time=1.0, max_transmissions=200)
    grid = [i / 100 for i in range(5, 101)]
    delays = [an.expected_delay(x, p) for x in grid]
    assert all(a > b for a, b in zip(delays, delays[1:]))


def test_truncated_delay_not_monotone_near_zero():
    # with few terms the truncation mass dominates as p -> 0
    p = profile(mean_airtime=1.0, backoff_time=1.0, max_transmissions=1)
    assert an.expected_delay(0.05, p) < an.expected_delay(0.5, p)


# outage ------------------------------------------------------------------

def test_outage_examples():
    assert an.outage_prob(1.0, 7) == 0.0
    assert an.outage_prob(0.5, 2) == 0.25
    assert an.outage_prob(0.3, 1) == pytest.approx(0.7)
    assert an.outage_prob(0.5, 2, form="sum") == 0.25


def test_outage_rejects_bad_input():
    with pytest.raises(ValueError):
        an.outage_prob(0.5, 0)
    with pytest.raises(ValueError):
        an.outage_prob(1.5, 2)
    with pytest.raises(ValueError):
        an.outage_prob(0.5, 2, form="series")


@given(st.floats(0.0, 1.0), st.integers(1, 200))
def test_outage_forms_agree(p, k):
    assert abs(an.outage_prob(p, k, "sum") - an.outage_prob(p, k, "closed")) <= 1e-12


# capacity ----------------------------------------------------------------

def test_capacity_examples():
    assert an.system_capacity(1.0, profile()) == 1.0
    c = an.system_capacity(0.99, profile())
    assert c == pytest.approx(1 + math.log(1 / 0.99) * 900 / 0.5, rel=1e-12)
    assert round(c, 2) == 19.09
    with pytest.raises(ValueError):
        an.system_capacity(0.0, profile())


@given(
    st.floats(0.5, 0.999999),
    st.floats(1e-3, 1.0),
    st.floats(1e-2, 5.0),
    st.integers(1, 9),
)
def test_capacity_round_trip(target, rate, airtime, k):
    p = profile(arrival_rate=rate, mean_airtime=airtime, reuse_factor=k)
    c = an.system_capacity(target, p)
    # devices_per_network is an int field; evaluate the exponent directly at real-valued M
    back = math.exp(-2 * airtime * k * (c - 1) * rate)
    assert back == pytest.approx(target, abs=1e-9)


# energy and lifetime -------------------------------------------------------

def test_energy_per_transmission_example():
    assert an.energy_per_transmission(ENERGY) == pytest.approx(0.031, abs=1e-12)


def test_energy_circuit_only():
    e = replace(ENERGY, tx_power=0.0, pa_inverse_efficiency=7.0)
    assert an.energy_per_transmission(e) == pytest.approx(e.circuit_power * e.airtime)


def test_energy_linear_in_airtime():
    e2 = replace(ENERGY, payload_bits=200.0)
    assert an.energy_per_transmission(e2) == pytest.approx(2 * an.energy_per_transmission(ENERGY))


def test_energy_per_cycle_reference_case():
    # 1 mJ switch + 5 mJ processing + 36 mJ per attempt
    assert an.energy_per_cycle(ENERGY, 1) == pytest.approx(0.042)
    assert an.energy_per_cycle(ENERGY, 2) == pytest.approx(0.078)
    assert an.energy_per_cycle(ENERGY, 0) == pytest.approx(0.006)


def test_lifetime_reference_case():
    # 3600 J / 42 mJ cycles * 300 s / 86400 s per day
    assert an.battery_lifetime(ENERGY, 1.0) == pytest.approx(3600 / 0.042 * 300 / 86400, rel=1e-12)
    assert an.battery_lifetime(ENERGY, 1.0) == pytest.approx(297.62, abs=0.01)
    assert an.battery_lifetime(ENERGY, 0.5) == pytest.approx(160.26, abs=0.01)


def test_lifetime_listen_term_counts():
    listening = replace(ENERGY, listen_time=10.0)
    assert an.battery_lifetime(listening, 1.0) < an.battery_lifetime(ENERGY, 1.0)


def test_lifetime_linear_in_battery():
    e2 = replace(ENERGY, battery_energy=7200.0)
    assert an.battery_lifetime(e2, 0.8) == pytest.approx(2 * an.battery_lifetime(ENERGY, 0.8))
    with pytest.raises(ValueError):
        an.battery_lifetime(ENERGY, 0.0)


def test_energy_profile_validated():
    with pytest.raises(ValueError):
        an.EnergyProfile(data_rate=0)
    with pytest.raises(ValueError):
        an.EnergyProfile(switch_energy=-1)


# access wait and tradeoff --------------------------------------------------

@pytest.mark.parametrize("k,airtime", [(1, 0.5), (2, 0.0), (3, 0.25), (4, 1.0), (9, 0.6)])
def test_access_wait_matches_gate(k, airtime):
    # oracle: average the gate's wait over a fine uniform grid of arrival phases
    sub = 1.0
    frame = k * sub
    n = 20000
    total = 0.0
    for i in range(n):
        t = 1000 * frame + (i + 0.5) * frame / n
        total += mac_gate(t, 0, k, frame, airtime) - t
    expected = 0.0 if k == 1 else total / n
    assert an.expected_access_wait(k, sub, airtime) == pytest.approx(expected, abs=2e-3)


def test_tier1_map_shapes():
    m = an.tier1_neighbor_map(1.0, 2.0)
    assert sum(n for n, _ in m[1]) == 8
    assert m[2] == ((4, 2.0),)
    assert m[4] == ()


def test_tradeoff_reductions():
    base = profile(devices_per_network=20, arrival_rate=1 / 300, mean_airtime=0.006)
    nmap = an.tier1_neighbor_map()
    curve = an.tradeoff_curve(base, ENERGY, [1, 4], nmap)
    unco = an.success_prob_uncoordinated(replace(base, neighbor_groups=nmap[1]))
    assert curve[0].success_prob == pytest.approx(unco)
    assert curve[1].success_prob == pytest.approx(an.success_prob_isolated(replace(base, reuse_factor=4)))


def test_tradeoff_crossover_at_two():
    base = profile(devices_per_network=20, arrival_rate=1 / 300, mean_airtime=0.006)
    curve = an.tradeoff_curve(base, ENERGY, [1, 2], an.tier1_neighbor_map(1.0, 1.0))
    assert curve[1].failure_prob > curve[0].failure_prob


def test_tradeoff_missing_entry():
    with pytest.raises(ValueError):
        an.tradeoff_curve(profile(), ENERGY, [5], an.tier1_neighbor_map())


@settings(max_examples=60)
@given(
    st.integers(1, 60),
    st.floats(1 / 3600, 1 / 10),
    st.floats(1e-3, 0.5),
    st.integers(1, 8),
    st.floats(1.0, 4.0),
    st.floats(1.0, 4.0),
)
def test_kpi_points_in_range(m, rate, airtime, kmax, i1, i2):
    base = profile(devices_per_network=m, arrival_rate=rate, mean_airtime=airtime, max_transmissions=kmax)
    for pt in an.tradeoff_curve(base, ENERGY, [1, 2, 3, 4], an.tier1_neighbor_map(i1, i2)):
        assert 0 < pt.success_prob <= 1
        assert 0 <= pt.outage_prob <= 1
        assert pt.expected_delay >= 0 and pt.lifetime_days >= 0 and pt.capacity >= 1
