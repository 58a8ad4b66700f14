"""Indoor propagation: building geometry, wall/floor pathloss, interference.

Positions are 3-D tuples in meters.  The building is a regular grid of
square apartments (``cols`` along x, ``rows`` along y, ``floors`` along z).
Grid lines between apartments are external walls; each apartment is further
split into ``room_cols x room_rows`` rooms by internal walls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

Position = tuple[float, float, float]

ROLES = ("sensor", "actuator", "gateway")


@dataclass(frozen=True)
class PathlossParams:
    carrier_freq_mhz: float = 868.0
    pathloss_exponent: float = 3.0
    floor_loss_db: float = 15.0
    ext_wall_loss_db: float = 20.0
    int_wall_loss_db: float = 10.0
    antenna_gain_db: float = 0.0
    hw_loss_db: float = 0.0
    min_distance_m: float = 1.0

    def __post_init__(self) -> None:
        if self.carrier_freq_mhz <= 0:
            raise ValueError("carrier_freq_mhz must be positive")
        if self.pathloss_exponent < 1:
            raise ValueError("pathloss_exponent must be >= 1")
        for name in ("floor_loss_db", "ext_wall_loss_db", "int_wall_loss_db", "hw_loss_db"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.min_distance_m <= 0:
            raise ValueError("min_distance_m must be positive")


@dataclass(frozen=True)
class BuildingLayout:
    rows: int = 3
    cols: int = 3
    floors: int = 1
    apartment_side_m: float = 20.0
    floor_height_m: float = 3.0
    room_rows: int = 2
    room_cols: int = 2

    def __post_init__(self) -> None:
        for name in ("rows", "cols", "floors", "room_rows", "room_cols"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.apartment_side_m <= 0 or self.floor_height_m <= 0:
            raise ValueError("apartment_side_m and floor_height_m must be positive")

    @property
    def num_apartments(self) -> int:
        return self.rows * self.cols * self.floors

    @property
    def extent(self) -> Position:
        return (
            self.cols * self.apartment_side_m,
            self.rows * self.apartment_side_m,
            self.floors * self.floor_height_m,
        )

    def apartment_index(self, row: int, col: int, floor: int = 0) -> int:
        if not (0 <= row < self.rows and 0 <= col < self.cols and 0 <= floor < self.floors):
            raise ValueError(f"apartment ({row}, {col}, {floor}) outside the building")
        return (floor * self.rows + row) * self.cols + col

    def apartment_coords(self, apartment_id: int) -> tuple[int, int, int]:
        """Return ``(row, col, floor)`` of an apartment index."""
        if not 0 <= apartment_id < self.num_apartments:
            raise ValueError(f"apartment id {apartment_id} out of range")
        floor, rem = divmod(apartment_id, self.rows * self.cols)
        row, col = divmod(rem, self.cols)
        return row, col, floor

    def apartment_of(self, pos: Position) -> int:
        self.check_inside(pos)
        side = self.apartment_side_m
        col = min(int(pos[0] // side), self.cols - 1)
        row = min(int(pos[1] // side), self.rows - 1)
        floor = min(int(pos[2] // self.floor_height_m), self.floors - 1)
        return self.apartment_index(row, col, floor)

    def apartment_center(self, apartment_id: int) -> Position:
        row, col, floor = self.apartment_coords(apartment_id)
        side = self.apartment_side_m
        return ((col + 0.5) * side, (row + 0.5) * side, (floor + 0.5) * self.floor_height_m)

    def check_inside(self, pos: Position) -> None:
        for value, limit, axis in zip(pos, self.extent, "xyz"):
            if not (0.0 <= value <= limit) or math.isnan(value):
                raise ValueError(f"position {pos} outside the building along {axis}")

    def tier1_neighbors(self, apartment_id: int) -> tuple[list[int], list[int]]:
        """Same-floor neighbors split into (side-sharing, diagonal) lists."""
        row, col, floor = self.apartment_coords(apartment_id)
        adjacent, diagonal = [], []
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == dc == 0:
                    continue
                r, c = row + dr, col + dc
                if 0 <= r < self.rows and 0 <= c < self.cols:
                    idx = self.apartment_index(r, c, floor)
                    (diagonal if dr and dc else adjacent).append(idx)
        return adjacent, diagonal


@dataclass(frozen=True)
class NodePlacement:
    node_id: int
    apartment_id: int
    position: Position
    role: str
    tx_power_mw: float

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")


def _lines_between(lo: float, hi: float, spacing: float) -> int:
    # multiples k*spacing with lo < k*spacing < hi
    if hi <= lo:
        return 0
    return max(0, math.ceil(hi / spacing) - 1 - math.floor(lo / spacing))


def wall_counts(a: Position, b: Position, layout: BuildingLayout) -> tuple[int, int, int]:
    """Count (external walls, internal walls, floors) crossed by segment a-b.

    A wall or floor plane counts only if the endpoints lie strictly on
    opposite sides of it; an endpoint sitting on a plane does not cross it.
    """
    layout.check_inside(a)
    layout.check_inside(b)
    side = layout.apartment_side_m
    ext = 0
    internal = 0
    for axis, rooms in ((0, layout.room_cols), (1, layout.room_rows)):
        lo, hi = sorted((a[axis], b[axis]))
        n_ext = _lines_between(lo, hi, side)
        ext += n_ext
        internal += _lines_between(lo, hi, side / rooms) - n_ext
    lo, hi = sorted((a[2], b[2]))
    floors = _lines_between(lo, hi, layout.floor_height_m)
    return ext, internal, floors


def pathloss_db(a: Position, b: Position, params: PathlossParams, layout: BuildingLayout) -> float:
    k_we, k_wi, k_f = wall_counts(a, b, layout)
    d_m = max(math.dist(a, b), params.min_distance_m)
    loss = (
        20.0 * math.log10(params.carrier_freq_mhz)
        + 10.0 * params.pathloss_exponent * math.log10(d_m / 1000.0)
        + 34.4
    )
    same_floor = layout.apartment_coords(layout.apartment_of(a))[2] == layout.apartment_coords(
        layout.apartment_of(b)
    )[2]
    if same_floor:
        loss += k_we * params.ext_wall_loss_db + k_wi * params.int_wall_loss_db
    else:
        loss += k_f * params.floor_loss_db
    return loss


def mw_to_dbm(p_mw: float) -> float:
    return 10.0 * math.log10(p_mw)


def dbm_to_mw(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0)


def received_power(
    ptx_mw: float, a: Position, b: Position, params: PathlossParams, layout: BuildingLayout
) -> float:
    """Received power in mW for a transmitter at ``a`` and receiver at ``b``."""
    if ptx_mw <= 0:
        raise ValueError("transmit power must be positive")
    p_dbm = (
        mw_to_dbm(ptx_mw)
        + params.antenna_gain_db
        - params.hw_loss_db
        - pathloss_db(a, b, params, layout)
    )
    return dbm_to_mw(p_dbm)


def interference_at(
    gateway: NodePlacement,
    active: Iterable[tuple[NodePlacement, float]],
    params: PathlossParams,
    layout: BuildingLayout,
) -> float:
    """Aggregate interference in W at ``gateway`` from the active transmitters.

    ``active`` holds ``(node, tx_power_mw)`` pairs and must not contain the
    intended transmitter.
    """
    if gateway.role != "gateway":
        raise ValueError("interference is evaluated at a gateway")
    total_mw = 0.0
    for node, ptx in active:
        total_mw += received_power(ptx, node.position, gateway.position, params, layout)
    return total_mw * 1e-3
