"""Anchor positions, the authorized region, and time-of-flight in ticks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

import numpy as np

from .errors import ConfigurationError
from .timebase import DEFAULT_CADENCE, K_F, CadenceConfig, TickDelta, fits_in_window, seconds_to_ticks, worst_case_span

SPEED_OF_LIGHT = 299_792_458  # m/s, exact


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for v in (self.x, self.y, self.z):
            if not math.isfinite(v):
                raise ValueError(f"coordinates must be finite, got {(self.x, self.y, self.z)}")

    def __iter__(self) -> Iterator[float]:
        return iter((self.x, self.y, self.z))

    def __add__(self, other: "Point3") -> "Point3":
        return Point3(self.x + other.x, self.y + other.y, self.z + other.z)

    def scaled(self, factor: float) -> "Point3":
        return Point3(self.x * factor, self.y * factor, self.z * factor)

    @classmethod
    def of(cls, value) -> "Point3":
        if isinstance(value, Point3):
            return value
        x, y, z = (float(v) for v in value)
        return cls(x, y, z)


ORIGIN = Point3(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Anchor:
    id: str
    position: Point3

    def __post_init__(self):
        if not self.id:
            raise ValueError("anchor id must be nonempty")


@dataclass(frozen=True)
class AuthorizedRegion:
    center: Point3
    radius_m: float

    def __post_init__(self):
        if not (math.isfinite(self.radius_m) and self.radius_m > 0):
            raise ValueError(f"radius_m must be positive, got {self.radius_m}")


Located = Union[Anchor, Point3]


def position_of(obj: Located) -> Point3:
    return obj.position if isinstance(obj, Anchor) else obj


def distance(a: Located, b: Located) -> float:
    # Same operation order as distances_to() so scalar and vector paths agree bit for bit.
    pa, pb = position_of(a), position_of(b)
    dx, dy, dz = pa.x - pb.x, pa.y - pb.y, pa.z - pb.z
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def tof_ticks(anchor: Located, point: Located) -> TickDelta:
    """One-way time of flight, rounded to the nearest tick."""
    return TickDelta(round(distance(anchor, point) * K_F / SPEED_OF_LIGHT))


def distances_to(anchor: Located, points: np.ndarray) -> np.ndarray:
    p = position_of(anchor)
    dx = p.x - points[:, 0]
    dy = p.y - points[:, 1]
    dz = p.z - points[:, 2]
    return np.sqrt(dx * dx + dy * dy + dz * dz)


def tof_ticks_many(anchor: Located, points: np.ndarray) -> np.ndarray:
    """Vectorized :func:`tof_ticks` over an ``(n, 3)`` array; identical results."""
    return np.rint(distances_to(anchor, points) * K_F / SPEED_OF_LIGHT).astype(np.int64)


def check_slot_width(ticks: int, cfg: CadenceConfig = DEFAULT_CADENCE) -> int:
    if ticks < 1:
        raise ConfigurationError(f"slot width must be at least 1 tick, got {ticks}")
    if not fits_in_window(worst_case_span(ticks, cfg), cfg):
        raise ConfigurationError(
            f"slot width {ticks} ticks: an all-0xFF key would overrun the {cfg.window_ticks}-tick window"
        )
    return ticks


def slot_width_from_region(region: AuthorizedRegion, cfg: CadenceConfig = DEFAULT_CADENCE) -> int:
    """Slot width = region radius / c, in ticks (at least 1).

    A decoder rounding to the nearest slot then tolerates per-gap path
    differences of up to half the radius.
    """
    seconds = Fraction(region.radius_m) / SPEED_OF_LIGHT
    return check_slot_width(max(1, seconds_to_ticks(seconds)), cfg)


def path_difference_shift(anchor_prev: Located, anchor_cur: Located, authorized: Located, actual: Located) -> TickDelta:
    """Shift in one inter-packet arrival difference seen at ``actual`` instead of ``authorized``.

    Zero whenever both packets come from the same anchor: the common-mode
    delay cancels, which is why a single-anchor deployment protects nothing.
    """
    cur = tof_ticks(anchor_cur, actual) - tof_ticks(anchor_cur, authorized)
    prev = tof_ticks(anchor_prev, actual) - tof_ticks(anchor_prev, authorized)
    return TickDelta(cur - prev)
