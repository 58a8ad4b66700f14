"""Closed-form KPI models for coexisting grant-free networks.

Success probabilities follow the pure-ALOHA exponential form with the
vulnerability window ``2 * airtime``; the reuse factor compresses each
network's traffic into ``1/K`` of the time axis.  Delay, outage, capacity
and battery lifetime are derived from the per-attempt success probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

SECONDS_PER_DAY = 86400.0

NeighborGroups = tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class TrafficProfile:
    """Traffic and MAC parameters of one network.

    ``neighbor_groups`` lists ``(count, multiplicity)`` pairs: ``count``
    neighbor networks share the subframe, and ``multiplicity`` concurrent
    transmissions from one of them are needed to destroy a reception.
    """

    arrival_rate: float
    mean_airtime: float
    devices_per_network: int = 1
    retrial_rate: float = 0.0
    reuse_factor: int = 1
    neighbor_groups: NeighborGroups = ()
    max_transmissions: int = 1
    backoff_time: float = 0.0
    tx_plus_ack_time: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "neighbor_groups", tuple((int(n), float(i)) for n, i in self.neighbor_groups)
        )
        if self.arrival_rate <= 0:
            raise ValueError("arrival_rate must be positive")
        if self.retrial_rate < 0:
            raise ValueError("retrial_rate must be >= 0")
        if self.mean_airtime <= 0:
            raise ValueError("mean_airtime must be positive")
        if self.devices_per_network < 1:
            raise ValueError("devices_per_network must be >= 1")
        if self.reuse_factor < 1:
            raise ValueError("reuse_factor must be >= 1")
        if self.max_transmissions < 1:
            raise ValueError("max_transmissions must be >= 1")
        if self.backoff_time < 0:
            raise ValueError("backoff_time must be >= 0")
        for count, mult in self.neighbor_groups:
            if count < 0 or mult < 1:
                raise ValueError("neighbor groups need count >= 0 and multiplicity >= 1")

    @classmethod
    def from_bits(
        cls, arrival_rate: float, payload_bits: float, overhead_bits: float, data_rate: float, **kw
    ) -> "TrafficProfile":
        return cls(arrival_rate=arrival_rate, mean_airtime=(payload_bits + overhead_bits) / data_rate, **kw)

    @property
    def contention_rate(self) -> float:
        return max(self.arrival_rate, self.retrial_rate)

    @property
    def attempt_duration(self) -> float:
        return self.mean_airtime if self.tx_plus_ack_time is None else self.tx_plus_ack_time


@dataclass(frozen=True)
class EnergyProfile:
    """Energy parameters of a battery-powered sensor (SI units)."""

    battery_energy: float = 3600.0
    switch_energy: float = 1e-3
    circuit_power: float = 1e-3
    process_time: float = 5.0
    listen_time: float = 0.0
    ack_time: float = 5.0
    pa_inverse_efficiency: float = 3.0
    tx_power: float = 10e-3
    payload_bits: float = 100.0
    overhead_bits: float = 0.0
    data_rate: float = 100.0
    report_period: float = 300.0

    def __post_init__(self) -> None:
        for name, value in self.__dict__.items():
            if value < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.data_rate <= 0:
            raise ValueError("data_rate must be positive")
        if self.report_period <= 0:
            raise ValueError("report_period must be positive")

    @property
    def airtime(self) -> float:
        return (self.payload_bits + self.overhead_bits) / self.data_rate


@dataclass(frozen=True)
class KpiPoint:
    reuse_factor: int
    success_prob: float
    expected_delay: float
    outage_prob: float
    lifetime_days: float
    capacity: float

    @property
    def failure_prob(self) -> float:
        return 1.0 - self.success_prob


def _check_prob(p: float, name: str = "p_suc", allow_zero: bool = False) -> None:
    lo_ok = p >= 0 if allow_zero else p > 0
    if not (lo_ok and p <= 1) or math.isnan(p):
        raise ValueError(f"{name} must lie in {'[0' if allow_zero else '(0'}, 1], got {p}")


def success_prob_isolated(profile: TrafficProfile) -> float:
    """Success probability with no interfering neighbor network."""
    p = profile
    exponent = 2.0 * p.mean_airtime * p.reuse_factor * (p.devices_per_network - 1) * p.contention_rate
    return math.exp(-exponent)


def success_prob_coordinated(profile: TrafficProfile) -> float:
    """Success probability with co-subframe neighbor groups.

    Each group of ``N_g`` neighbors contributes ``N_g * M / i_g`` effective
    contenders.  With no groups this equals :func:`success_prob_isolated`.
    """
    p = profile
    if not p.neighbor_groups:
        return success_prob_isolated(p)
    m = p.devices_per_network
    contenders = (m - 1) + sum(n * m / i for n, i in p.neighbor_groups)
    return math.exp(-2.0 * p.mean_airtime * p.reuse_factor * contenders * p.contention_rate)


def success_prob_uncoordinated(profile: TrafficProfile) -> float:
    return success_prob_coordinated(replace(profile, reuse_factor=1))


def expected_delay(p_suc: float, profile: TrafficProfile) -> float:
    """Truncated expected delay over ``max_transmissions + 1`` terms.

    Term ``k`` is the delay after ``k`` failures followed by one success:
    ``k * (attempt + backoff) + attempt``.  For small ``max_transmissions``
    the truncated sum is not monotone near ``p_suc = 0``.
    """
    _check_prob(p_suc)
    attempt = profile.attempt_duration
    cycle = attempt + profile.backoff_time
    q = 1.0 - p_suc
    return sum(
        (k * cycle + attempt) * p_suc * q**k for k in range(profile.max_transmissions + 1)
    )


def outage_prob(p_suc: float, max_tx: int, form: str = "closed") -> float:
    """Probability that ``max_tx`` transmissions all fail.

    ``form="sum"`` evaluates ``1 - sum_k p (1-p)^k`` term by term;
    ``form="closed"`` returns ``(1 - p)^max_tx``.
    """
    _check_prob(p_suc, allow_zero=True)
    if max_tx < 1:
        raise ValueError("max_tx must be >= 1")
    q = 1.0 - p_suc
    if form == "closed":
        return q**max_tx
    if form == "sum":
        return 1.0 - math.fsum(p_suc * q**k for k in range(max_tx))
    raise ValueError(f"unknown form {form!r}")


def system_capacity(target_p_suc: float, profile: TrafficProfile) -> float:
    """Largest (real-valued) device count keeping the success probability at target.

    Inverts :func:`success_prob_isolated`; the retrial rate stands in for
    the contention rate when it exceeds the arrival rate.  Use
    ``math.floor`` on the result for an integer device count.
    """
    _check_prob(target_p_suc, "target_p_suc")
    denom = 2.0 * profile.mean_airtime * profile.reuse_factor * profile.contention_rate
    return 1.0 + math.log(1.0 / target_p_suc) / denom


def energy_per_transmission(profile: EnergyProfile) -> float:
    e = profile
    return (e.circuit_power + e.pa_inverse_efficiency * e.tx_power) * e.airtime


def energy_per_cycle(profile: EnergyProfile, attempts: float) -> float:
    """Energy of one reporting cycle that needed ``attempts`` transmissions."""
    e = profile
    fixed = e.switch_energy + e.circuit_power * (e.process_time + e.listen_time)
    return fixed + attempts * (energy_per_transmission(e) + e.circuit_power * e.ack_time)


def battery_lifetime(profile: EnergyProfile, p_suc: float) -> float:
    """Expected lifetime in days when each report needs ``1/p_suc`` attempts."""
    _check_prob(p_suc)
    per_cycle = energy_per_cycle(profile, 1.0 / p_suc)
    return profile.battery_energy / per_cycle * profile.report_period / SECONDS_PER_DAY


def expected_access_wait(reuse_factor: int, subframe_length: float, airtime: float = 0.0) -> float:
    """Mean wait for the own subframe under frame gating.

    Arrivals are uniform over a frame of ``reuse_factor`` subframes.  A
    packet goes out immediately if it fits in the rest of the own
    subframe, else it waits for the next own-subframe start.
    """
    if reuse_factor <= 1:
        return 0.0
    frame = reuse_factor * subframe_length
    late = min(subframe_length, max(0.0, subframe_length - airtime))
    return (frame - late) ** 2 / (2.0 * frame)


# 4 side-sharing neighbors (group 1) and 4 diagonal neighbors (group 2).
def tier1_neighbor_map(i_adjacent: float = 1.0, i_diagonal: float = 1.0) -> dict[int, NeighborGroups]:
    """Neighbors sharing the own subframe for reuse factors 1..4.

    K=1: all 8.  K=2 (checkerboard): the 4 diagonal ones.  K=3 (column
    stripes): the 2 neighbors in the same column.  K=4 (2x2 tiling): none.
    """
    return {
        1: ((4, i_adjacent), (4, i_diagonal)),
        2: ((4, i_diagonal),),
        3: ((2, i_adjacent),),
        4: (),
    }


def tradeoff_curve(
    base: TrafficProfile,
    energy: EnergyProfile,
    reuse_values: Sequence[int],
    neighbor_map: Mapping[int, NeighborGroups],
    subframe_length: float | None = None,
    target_p_suc: float = 0.99,
) -> list[KpiPoint]:
    """KPIs as a function of the reuse factor.

    Each attempt additionally waits for the own subframe; the subframe
    length defaults to the attempt duration so the frame grows with K.
    """
    if subframe_length is None:
        subframe_length = base.attempt_duration
    points = []
    for k in reuse_values:
        if k not in neighbor_map:
            raise ValueError(f"neighbor_map has no entry for reuse factor {k}")
        wait = expected_access_wait(k, subframe_length, base.mean_airtime)
        profile = replace(
            base,
            reuse_factor=k,
            neighbor_groups=tuple(neighbor_map[k]),
            tx_plus_ack_time=base.attempt_duration + wait,
        )
        p = success_prob_coordinated(profile)
        points.append(
            KpiPoint(
                reuse_factor=k,
                success_prob=p,
                expected_delay=expected_delay(p, profile),
                outage_prob=outage_prob(p, profile.max_transmissions),
                lifetime_days=battery_lifetime(energy, p),
                capacity=system_capacity(target_p_suc, profile),
            )
        )
    return points
