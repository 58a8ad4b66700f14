"""Discrete-event simulator for coexisting grant-free networks.

Every apartment runs one gateway at its center and a population of sensors
and actuators.  Devices transmit whenever their MAC gate permits:

* uncoordinated -- immediately (pure ALOHA),
* centrally coordinated -- inside the apartment's fixed subframe,
* distributed MAB -- inside the subframe picked by a bandit learner.

A reception fails when any transmission from the same apartment overlaps
it, or when the aggregate out-of-apartment power at the gateway exceeds the
interference threshold at any instant.  ACKs and beacons are ideal.
"""

from __future__ import annotations

import heapq
import math
import random
from collections import deque
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Any

from . import bandit
from .analytics import SECONDS_PER_DAY, EnergyProfile, energy_per_cycle
from .config import CentralizedCoordinated, DistributedMab, SimConfig, TrafficClass
from .propagation import NodePlacement, received_power

# Overlaps shorter than this are rounding noise at subframe boundaries.
OVERLAP_EPS = 1e-9

SENSOR, ACTUATOR = 0, 1
CLASS_NAMES = ("sensor", "actuator")

# outcome labels
DELIVERED = "delivered"
INTRA = "intra_collision"
INTERFERENCE = "interference_loss"
EXPIRED = "expired"


class EventKind(IntEnum):
    ARRIVAL = 0
    TX_START = 1
    TX_END = 2
    RESUME = 3


FRAME_KEY = -1  # frame ticks sort before node events at equal times


@dataclass
class PacketRecord:
    packet_id: int
    node_id: int
    created: float
    attempts: int = 0
    attempt_log: list[tuple[float, float, str]] = field(default_factory=list)
    outcome: str | None = None
    finished: float | None = None

    def finish(self, outcome: str, time: float) -> None:
        if self.outcome is not None:
            raise RuntimeError(f"packet {self.packet_id} already terminated")
        self.outcome = outcome
        self.finished = time


@dataclass
class KpiReport:
    generated: int
    delivered: int
    lost: int
    pending: int
    attempts: int
    successful_attempts: int
    intra_collisions: int
    interference_losses: int
    packet_loss_ratio: float
    outage_ratio: float
    attempt_success_rate: float
    delay_mean: float
    delay_p95: float
    energy_per_cycle_mean: float
    lifetime_days: float
    sensor_attempt_success_rate: float
    subframe_utilization: tuple[float, ...]
    bandit_trajectories: dict[int, list[tuple[int, int, int]]] = field(default_factory=dict)
    bandit_states: dict[int, dict] = field(default_factory=dict)
    trace: list[dict[str, Any]] = field(default_factory=list)

    def as_row(self) -> dict[str, float]:
        return {
            "generated": self.generated,
            "delivered": self.delivered,
            "lost": self.lost,
            "pending": self.pending,
            "attempts": self.attempts,
            "plr": self.packet_loss_ratio,
            "outage": self.outage_ratio,
            "p_suc_empirical": self.attempt_success_rate,
            "delay_mean": self.delay_mean,
            "delay_p95": self.delay_p95,
            "energy_per_cycle": self.energy_per_cycle_mean,
            "lifetime_days": self.lifetime_days,
        }


def mac_gate(
    t: float,
    subframe: int,
    reuse_factor: int,
    frame_length: float,
    airtime: float,
    this_frame_only: bool = False,
) -> float | None:
    """Earliest start time >= ``t`` at which a transmission fits the subframe.

    A packet inside its own subframe goes out at once if it ends before the
    subframe does; otherwise it waits for the next own-subframe start.  With
    ``this_frame_only`` the search stops at the current frame and ``None``
    means "wait for the next frame".
    """
    sub = frame_length / reuse_factor
    f = math.floor(t / frame_length)
    start = f * frame_length + subframe * sub
    if start <= t and t + airtime <= start + sub + 1e-12:
        return t
    if t < start:
        return start
    if this_frame_only:
        return None
    return (f + 1) * frame_length + subframe * sub


def schedule_traffic(cls: TrafficClass, now: float, rng: random.Random) -> float:
    """Creation time of the next packet after one created at ``now``."""
    if cls.mode == "poisson":
        return now + rng.expovariate(cls.arrival_rate)
    return now + cls.period


def first_arrival(cls: TrafficClass, rng: random.Random) -> float:
    if cls.mode == "poisson":
        return rng.expovariate(cls.arrival_rate)
    return rng.uniform(0.0, cls.period)


def retransmit_policy(record: PacketRecord, config: SimConfig, rng: random.Random, failed_at: float):
    """Next attempt time after a failure detected at ``failed_at``, or None to expire."""
    r = config.retrial
    if record.attempts >= r.max_transmissions:
        return None
    if r.mode == "poisson":
        return failed_at + rng.expovariate(r.rate)
    return failed_at + r.backoff


class _Node:
    __slots__ = (
        "id", "apt", "cls", "traffic", "airtime", "power", "rng_traffic", "rng_retry",
        "queue", "busy", "learner", "subframe",
    )

    def __init__(self, node_id, apt, cls, traffic, power, rng_traffic, rng_retry):
        self.id = node_id
        self.apt = apt
        self.cls = cls
        self.traffic = traffic
        self.airtime = traffic.airtime
        self.power = power  # received W at every gateway
        self.rng_traffic = rng_traffic
        self.rng_retry = rng_retry
        self.queue: deque[PacketRecord] = deque()
        self.busy = False
        self.learner: _Learner | None = None
        self.subframe = 0


class _Tx:
    __slots__ = ("node", "packet", "start", "end", "intra", "interfered", "interf", "round", "subframe")

    def __init__(self, node, packet, start, end, subframe):
        self.node = node
        self.packet = packet
        self.start = start
        self.end = end
        self.intra = False
        self.interfered = False
        self.interf = 0.0
        self.round = None
        self.subframe = subframe


class _Round:
    __slots__ = ("frame", "arm", "pending", "ok", "closed")

    def __init__(self, frame, arm):
        self.frame = frame
        self.arm = arm
        self.pending = 0
        self.ok = True
        self.closed = False


class _Learner:
    __slots__ = ("id", "state", "rounds", "trajectory", "waiting")

    def __init__(self, learner_id, state):
        self.id = learner_id
        self.state = state
        self.rounds: dict[int, _Round] = {}
        self.trajectory: list[tuple[int, int, int]] = []
        self.waiting: list[_Node] = []


def place_nodes(config: SimConfig) -> list[NodePlacement]:
    """Gateways first (node id = apartment id), then devices per apartment.

    Device positions depend only on (seed, apartment, class, index), so
    adding devices leaves the existing ones in place.
    """
    layout = config.layout
    side = layout.apartment_side_m
    h = layout.floor_height_m
    out = [
        NodePlacement(apt, apt, layout.apartment_center(apt), "gateway", 10.0)
        for apt in range(layout.num_apartments)
    ]
    nid = layout.num_apartments
    for apt in range(layout.num_apartments):
        row, col, floor = layout.apartment_coords(apt)
        for cls_idx, cls in enumerate((config.sensors, config.actuators)):
            for i in range(cls.count):
                rng = random.Random(f"{config.seed}/pos/{apt}/{cls_idx}/{i}")
                pos = (
                    (col + rng.random()) * side,
                    (row + rng.random()) * side,
                    (floor + rng.uniform(0.1, 0.9)) * h,
                )
                out.append(NodePlacement(nid, apt, pos, CLASS_NAMES[cls_idx], cls.tx_power_mw))
                nid += 1
    return out


class Simulation:
    def __init__(self, config: SimConfig):
        config.validate()
        self.config = config
        self.layout = config.layout
        self.frame_length = config.effective_frame_length
        self.reuse = config.mac.reuse_factor
        self.warmup = config.effective_warmup
        self.threshold = config.interference_threshold_w
        measured = config.measure_apartments
        self.measured = set(range(self.layout.num_apartments) if measured is None else measured)
        self.placements = place_nodes(config)
        self.gateways = self.placements[: self.layout.num_apartments]
        self.nodes = self._build_nodes()
        self.learners = self._build_learners()
        self._events: list = []
        self._seq = 0
        self._active: dict[int, _Tx] = {}
        self._packet_seq = 0
        self.packets: list[PacketRecord] = []
        self.trace: list[dict[str, Any]] = []
        self._subframe_starts = [0] * self.reuse
        self._energy = {
            SENSOR: replace(
                config.energy,
                tx_power=config.sensors.tx_power_mw * 1e-3,
                payload_bits=config.sensors.payload_bits,
                overhead_bits=config.sensors.overhead_bits,
                data_rate=config.sensors.data_rate,
                report_period=config.sensors.period,
            )
        }

    # setup -----------------------------------------------------------
    def _build_nodes(self) -> list[_Node]:
        cfg = self.config
        nodes = []
        counters: dict[tuple[int, int], int] = {}
        for p in self.placements[self.layout.num_apartments :]:
            cls_idx = CLASS_NAMES.index(p.role)
            idx = counters.get((p.apartment_id, cls_idx), 0)
            counters[(p.apartment_id, cls_idx)] = idx + 1
            traffic = cfg.sensors if cls_idx == SENSOR else cfg.actuators
            power = [
                received_power(p.tx_power_mw, p.position, g.position, cfg.pathloss, self.layout) * 1e-3
                for g in self.gateways
            ]
            # streams keyed by (seed, apartment, class, index) for common random numbers
            key = f"{cfg.seed}/{p.apartment_id}/{cls_idx}/{idx}"
            node = _Node(
                p.node_id, p.apartment_id, cls_idx, traffic, power,
                random.Random(key + "/traffic"), random.Random(key + "/retry"),
            )
            if self.reuse > 1 or isinstance(cfg.mac, DistributedMab):
                node.subframe = cfg.subframe_of(p.apartment_id)
            nodes.append(node)
        return nodes

    def _build_learners(self) -> list[_Learner]:
        mac = self.config.mac
        if not isinstance(mac, DistributedMab):
            return []
        learners = []
        if mac.learner_scope == "gateway":
            for apt in range(self.layout.num_apartments):
                learners.append(_Learner(apt, bandit.init(mac.reuse_factor, mac.exploration_weight, mac.value_mode)))
            for node in self.nodes:
                node.learner = learners[node.apt]
        else:
            for node in self.nodes:
                lr = _Learner(node.id, bandit.init(mac.reuse_factor, mac.exploration_weight, mac.value_mode))
                node.learner = lr
                learners.append(lr)
        return learners

    # event plumbing --------------------------------------------------
    def _push(self, time: float, key: int, kind: EventKind, data=None) -> None:
        self._seq += 1
        heapq.heappush(self._events, (time, key, kind, self._seq, data))

    def run(self) -> KpiReport:
        for node in self.nodes:
            self._push(first_arrival(node.traffic, node.rng_traffic), node.id, EventKind.ARRIVAL, node)
        if self.learners:
            self._push(self.frame_length, FRAME_KEY, EventKind.RESUME, 1)
        end = self.config.sim_duration
        while self._events and self._events[0][0] <= end:
            time, key, kind, _, data = heapq.heappop(self._events)
            if key == FRAME_KEY:
                self._on_frame(time, data)
            elif kind == EventKind.ARRIVAL:
                self._on_arrival(time, data)
            elif kind == EventKind.TX_START:
                self._on_tx_start(time, data)
            elif kind == EventKind.TX_END:
                self._on_tx_end(time, data)
            else:
                self._on_resume(time, data)
        return self._report()

    # handlers --------------------------------------------------------
    def _on_arrival(self, now: float, node: _Node) -> None:
        self._packet_seq += 1
        pkt = PacketRecord(self._packet_seq, node.id, now)
        self.packets.append(pkt)
        node.queue.append(pkt)
        self._push(schedule_traffic(node.traffic, now, node.rng_traffic), node.id, EventKind.ARRIVAL, node)
        if not node.busy:
            node.busy = True
            self._begin(now, node)

    def _begin(self, now: float, node: _Node) -> None:
        mac = self.config.mac
        if isinstance(mac, DistributedMab):
            arm = bandit.select(node.learner.state)
            t = mac_gate(now, arm, self.reuse, self.frame_length, node.airtime, this_frame_only=True)
            if t is None:
                node.learner.waiting.append(node)
                return
            self._push(t, node.id, EventKind.TX_START, (node, arm))
        elif isinstance(mac, CentralizedCoordinated) and self.reuse > 1:
            t = mac_gate(now, node.subframe, self.reuse, self.frame_length, node.airtime)
            self._push(t, node.id, EventKind.TX_START, (node, node.subframe))
        else:
            self._push(now, node.id, EventKind.TX_START, (node, 0))

    def _on_tx_start(self, now: float, data) -> None:
        node, subframe = data
        pkt = node.queue[0]
        pkt.attempts += 1
        tx = _Tx(node, pkt, now, now + node.airtime, subframe)
        apt = node.apt
        for other in self._active.values():
            if other.end <= now + OVERLAP_EPS:
                continue
            if other.node.apt == apt:
                other.intra = True
                tx.intra = True
            else:
                tx.interf += other.node.power[apt]
                other.interf += node.power[other.node.apt]
                if other.interf > self.threshold:
                    other.interfered = True
        if tx.interf > self.threshold:
            tx.interfered = True
        if node.learner is not None:
            frame = math.floor((now + OVERLAP_EPS) / self.frame_length)
            rnd = node.learner.rounds.get(frame)
            if rnd is None:
                rnd = node.learner.rounds[frame] = _Round(frame, subframe)
            rnd.pending += 1
            tx.round = rnd
        if now >= self.warmup:
            self._subframe_starts[subframe] += 1
        self._active[id(tx)] = tx
        self._push(tx.end, node.id, EventKind.TX_END, tx)

    def _on_tx_end(self, now: float, tx: _Tx) -> None:
        del self._active[id(tx)]
        for other in self._active.values():
            oapt = other.node.apt
            other.interf = sum(
                w.node.power[oapt]
                for w in self._active.values()
                if w.node.apt != oapt and w.end > other.start + OVERLAP_EPS
            )
        node, pkt = tx.node, tx.packet
        outcome = INTRA if tx.intra else INTERFERENCE if tx.interfered else DELIVERED
        pkt.attempt_log.append((tx.start, tx.end, outcome))
        if tx.round is not None:
            rnd = tx.round
            rnd.pending -= 1
            rnd.ok = rnd.ok and outcome == DELIVERED
            if rnd.closed and rnd.pending == 0:
                self._apply_round(node.learner, rnd)
        if outcome == DELIVERED:
            pkt.finish(DELIVERED, now)
            node.queue.popleft()
            self._next_packet(now, node)
            return
        failed_at = now + self.config.ack_timeout
        retry = retransmit_policy(pkt, self.config, node.rng_retry, failed_at)
        if retry is None:
            pkt.finish(EXPIRED, failed_at)
            node.queue.popleft()
            self._push(failed_at, node.id, EventKind.RESUME, node)
        else:
            self._push(retry, node.id, EventKind.RESUME, node)

    def _on_resume(self, now: float, node: _Node) -> None:
        self._next_packet(now, node)

    def _next_packet(self, now: float, node: _Node) -> None:
        if node.queue:
            self._begin(now, node)
        else:
            node.busy = False

    def _on_frame(self, now: float, frame: int) -> None:
        for lr in self.learners:
            for f in sorted(lr.rounds):
                if f >= frame:
                    break
                rnd = lr.rounds[f]
                if not rnd.closed:
                    rnd.closed = True
                    if rnd.pending == 0:
                        self._apply_round(lr, rnd)
        for lr in self.learners:
            if lr.waiting:
                waiting, lr.waiting = lr.waiting, []
                for node in waiting:
                    self._begin(now, node)
        self._push((frame + 1) * self.frame_length, FRAME_KEY, EventKind.RESUME, frame + 1)

    def _apply_round(self, lr: _Learner, rnd: _Round) -> None:
        reward = int(rnd.ok)
        lr.state = bandit.update(lr.state, rnd.arm, reward)
        lr.trajectory.append((rnd.frame, rnd.arm, reward))
        del lr.rounds[rnd.frame]

    # statistics ------------------------------------------------------
    def _report(self) -> KpiReport:
        node_by_id = {n.id: n for n in self.nodes}
        generated = delivered = lost = pending = 0
        attempts = ok_attempts = intra = interf = 0
        sensor_attempts = sensor_ok = 0
        delays: list[float] = []
        cycle_energy = 0.0
        cycles = 0
        energy = self._energy[SENSOR]
        for pkt in self.packets:
            node = node_by_id[pkt.node_id]
            if pkt.created < self.warmup or node.apt not in self.measured:
                continue
            generated += 1
            for start, end, outcome in pkt.attempt_log:
                attempts += 1
                ok = outcome == DELIVERED
                ok_attempts += ok
                intra += outcome == INTRA
                interf += outcome == INTERFERENCE
                if node.cls == SENSOR:
                    sensor_attempts += 1
                    sensor_ok += ok
            if pkt.outcome is None:
                pending += 1
                continue
            if pkt.outcome == DELIVERED:
                delivered += 1
                delays.append(pkt.finished - pkt.created)
            else:
                lost += 1
            if node.cls == SENSOR:
                cycles += 1
                cycle_energy += energy_per_cycle(energy, pkt.attempts)
            if self.config.record_trace:
                self.trace.append(
                    {
                        "packet_id": pkt.packet_id,
                        "node_id": pkt.node_id,
                        "apartment": node.apt,
                        "class": CLASS_NAMES[node.cls],
                        "created": pkt.created,
                        "attempts": pkt.attempts,
                        "outcome": pkt.outcome,
                        "finished": pkt.finished,
                    }
                )
        finished = delivered + lost
        nan = float("nan")
        mean_cycle = cycle_energy / cycles if cycles else nan
        lifetime = (
            energy.battery_energy / mean_cycle * energy.report_period / SECONDS_PER_DAY
            if cycles
            else nan
        )
        total_starts = sum(self._subframe_starts)
        delays.sort()
        return KpiReport(
            generated=generated,
            delivered=delivered,
            lost=lost,
            pending=pending,
            attempts=attempts,
            successful_attempts=ok_attempts,
            intra_collisions=intra,
            interference_losses=interf,
            packet_loss_ratio=(attempts - ok_attempts) / attempts if attempts else nan,
            outage_ratio=lost / finished if finished else nan,
            attempt_success_rate=ok_attempts / attempts if attempts else nan,
            delay_mean=sum(delays) / len(delays) if delays else nan,
            delay_p95=_percentile(delays, 0.95),
            energy_per_cycle_mean=mean_cycle,
            lifetime_days=lifetime,
            sensor_attempt_success_rate=sensor_ok / sensor_attempts if sensor_attempts else nan,
            subframe_utilization=tuple(
                s / total_starts if total_starts else 0.0 for s in self._subframe_starts
            ),
            bandit_trajectories={lr.id: lr.trajectory for lr in self.learners},
            bandit_states={lr.id: lr.state.to_dict() for lr in self.learners},
            trace=self.trace,
        )


def _percentile(sorted_values: list[float], q: float) -> float:
    if not sorted_values:
        return float("nan")
    idx = min(len(sorted_values) - 1, max(0, math.ceil(q * len(sorted_values)) - 1))
    return sorted_values[idx]


def run(config: SimConfig) -> KpiReport:
    """Run one simulation; deterministic for a given config (seed included)."""
    return Simulation(config).run()


def energy_accounting(energy: EnergyProfile, attempts_per_cycle: list[int]) -> list[float]:
    """Energy of each reporting cycle given its number of transmissions."""
    return [energy_per_cycle(energy, a) for a in attempts_per_cycle]
