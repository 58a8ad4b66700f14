"""Simulation configuration records and validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

from .analytics import EnergyProfile
from .propagation import BuildingLayout, PathlossParams


class ConfigError(ValueError):
    """Raised with every violated constraint listed, one per line."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class Uncoordinated:
    scheme = "uncoordinated"

    @property
    def reuse_factor(self) -> int:
        return 1


@dataclass(frozen=True)
class CentralizedCoordinated:
    reuse_factor: int = 9
    # subframe per apartment; None selects default_assignment()
    subframe_assignment: tuple[int, ...] | None = None
    scheme = "coordinated"


@dataclass(frozen=True)
class DistributedMab:
    reuse_factor: int = 9
    exploration_weight: float = 0.5
    learner_scope: str = "gateway"
    value_mode: str = "cumulative"
    scheme = "mab"


MacScheme = Union[Uncoordinated, CentralizedCoordinated, DistributedMab]
MAC_SCHEMES = {"uncoordinated": Uncoordinated, "coordinated": CentralizedCoordinated, "mab": DistributedMab}


@dataclass(frozen=True)
class TrafficClass:
    """Uplink traffic of one device class (sensors or actuators)."""

    count: int = 0
    mode: str = "periodic"
    period: float = 900.0
    payload_bits: float = 600.0
    overhead_bits: float = 0.0
    data_rate: float = 100e3
    tx_power_mw: float = 10.0

    @property
    def airtime(self) -> float:
        return (self.payload_bits + self.overhead_bits) / self.data_rate

    @property
    def arrival_rate(self) -> float:
        return 1.0 / self.period


@dataclass(frozen=True)
class RetrialPolicy:
    mode: str = "fixed"
    rate: float = 0.0
    backoff: float = 1.0
    max_transmissions: int = 1


@dataclass(frozen=True)
class SimConfig:
    layout: BuildingLayout = field(default_factory=BuildingLayout)
    pathloss: PathlossParams = field(default_factory=PathlossParams)
    sensors: TrafficClass = field(default_factory=lambda: TrafficClass(count=20))
    actuators: TrafficClass = field(default_factory=TrafficClass)
    energy: EnergyProfile = field(default_factory=EnergyProfile)
    mac: MacScheme = field(default_factory=Uncoordinated)
    interference_threshold_w: float = 5e-9
    frame_length: float | None = None
    retrial: RetrialPolicy = field(default_factory=RetrialPolicy)
    ack_timeout: float = 1.0
    sim_duration: float = 36000.0
    warmup: float | None = None
    seed: int = 0
    measure_apartments: tuple[int, ...] | None = None
    record_trace: bool = False

    @property
    def max_airtime(self) -> float:
        airtimes = [c.airtime for c in (self.sensors, self.actuators) if c.count > 0]
        return max(airtimes, default=self.sensors.airtime)

    @property
    def effective_frame_length(self) -> float:
        """Frame length, defaulting to one maximum airtime per subframe."""
        if self.frame_length is not None:
            return self.frame_length
        return self.mac.reuse_factor * self.max_airtime

    @property
    def effective_warmup(self) -> float:
        return 0.1 * self.sim_duration if self.warmup is None else self.warmup

    def subframe_of(self, apartment_id: int) -> int:
        mac = self.mac
        if isinstance(mac, CentralizedCoordinated) and mac.subframe_assignment is not None:
            return mac.subframe_assignment[apartment_id]
        return default_assignment(self.layout, mac.reuse_factor)[apartment_id]

    def validate(self) -> None:
        errors: list[str] = []
        mac = self.mac
        k = mac.reuse_factor
        if k < 1:
            errors.append(f"mac.reuse_factor must be >= 1, got {k}")
        if isinstance(mac, CentralizedCoordinated) and mac.subframe_assignment is not None:
            if len(mac.subframe_assignment) != self.layout.num_apartments:
                errors.append("mac.subframe_assignment needs one entry per apartment")
            bad = [s for s in mac.subframe_assignment if not 0 <= s < max(k, 1)]
            if bad:
                errors.append(f"mac.subframe_assignment entries must be < reuse_factor: {bad}")
        if isinstance(mac, DistributedMab):
            if mac.learner_scope not in ("gateway", "device"):
                errors.append("mac.learner_scope must be 'gateway' or 'device'")
            if mac.value_mode not in ("cumulative", "mean"):
                errors.append("mac.value_mode must be 'cumulative' or 'mean'")
            if mac.exploration_weight <= 0:
                errors.append("mac.exploration_weight must be positive")
        if self.frame_length is not None and self.frame_length <= 0:
            errors.append("frame_length must be positive")
        elif k >= 1 and (k > 1 or isinstance(mac, DistributedMab)):
            sub = self.effective_frame_length / k
            if sub + 1e-12 < self.max_airtime:
                errors.append(
                    f"subframe length {sub:g} s is shorter than the airtime {self.max_airtime:g} s"
                )
        for name in ("sensors", "actuators"):
            cls = getattr(self, name)
            if cls.count < 0:
                errors.append(f"{name}.count must be >= 0")
            if cls.mode not in ("periodic", "poisson"):
                errors.append(f"{name}.mode must be 'periodic' or 'poisson'")
            if cls.period <= 0:
                errors.append(f"{name}.period must be positive")
            if cls.data_rate <= 0:
                errors.append(f"{name}.data_rate must be positive")
            if cls.payload_bits + cls.overhead_bits <= 0:
                errors.append(f"{name} packets must have positive size")
            if cls.tx_power_mw <= 0:
                errors.append(f"{name}.tx_power_mw must be positive")
        if self.sensors.count + self.actuators.count == 0:
            errors.append("at least one sensor or actuator is required")
        r = self.retrial
        if r.mode not in ("fixed", "poisson"):
            errors.append("retrial.mode must be 'fixed' or 'poisson'")
        if r.max_transmissions < 1:
            errors.append("retrial.max_transmissions must be >= 1")
        if r.mode == "poisson" and r.max_transmissions > 1 and r.rate <= 0:
            errors.append("retrial.rate must be positive in poisson mode")
        if r.backoff < 0:
            errors.append("retrial.backoff must be >= 0")
        if self.interference_threshold_w <= 0:
            errors.append("interference_threshold_w must be positive")
        if self.ack_timeout < 0:
            errors.append("ack_timeout must be >= 0")
        if self.sim_duration <= self.effective_warmup or self.effective_warmup < 0:
            errors.append("sim_duration must exceed warmup (and warmup must be >= 0)")
        if self.measure_apartments is not None:
            bad = [a for a in self.measure_apartments if not 0 <= a < self.layout.num_apartments]
            if bad:
                errors.append(f"measure_apartments out of range: {bad}")
        if errors:
            raise ConfigError(errors)


def default_assignment(layout: BuildingLayout, reuse_factor: int) -> tuple[int, ...]:
    """Subframe per apartment for a reuse factor.

    Square factors tile ``q x q`` blocks, 2 is a checkerboard and 3 assigns
    column stripes; anything else cycles the linear index.  Stacked floors
    are shifted by one subframe.
    """
    k = reuse_factor
    q = math.isqrt(k)
    out = []
    for apt in range(layout.num_apartments):
        row, col, floor = layout.apartment_coords(apt)
        if k == 1:
            s = 0
        elif q * q == k:
            s = (row % q) * q + col % q
        elif k == 2:
            s = (row + col) % 2
        elif k == 3:
            s = col % 3
        else:
            s = row * layout.cols + col
        out.append((s + floor) % k)
    return tuple(out)
