"""Network-time (NT) tick timebase.

One second is ``K_F = 975000 * 65536`` ticks (about 15.65 ps per tick). Tick
values are plain Python ints; the ``check_*`` helpers enforce the 64-bit
ranges so that arithmetic never silently wraps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import NewType

from .errors import TickOverflowError

K_F = 975_000 * 65_536  # 63_897_600_000 ticks per second

U64_MAX = 2**64 - 1
I64_MIN = -(2**63)
I64_MAX = 2**63 - 1

NtTicks = NewType("NtTicks", int)
TickDelta = NewType("TickDelta", int)


def check_ticks(value: int) -> NtTicks:
    """Return ``value`` if it is a valid unsigned 64-bit tick count."""
    if not 0 <= value <= U64_MAX:
        raise TickOverflowError(f"tick value {value} outside unsigned 64-bit range")
    return NtTicks(value)


def check_delta(value: int) -> TickDelta:
    if not I64_MIN <= value <= I64_MAX:
        raise TickOverflowError(f"tick delta {value} outside signed 64-bit range")
    return TickDelta(value)


@dataclass(frozen=True)
class CadenceConfig:
    """Timing constants of the transmission cadence, all in ticks."""

    window_ticks: int = K_F // 10  # 100 ms
    start_offset_ticks: int = 319_488_000  # 5 ms
    between_offset_ticks: int = 159_744_000  # 2.5 ms

    def __post_init__(self):
        for name in ("window_ticks", "start_offset_ticks", "between_offset_ticks"):
            value = getattr(self, name)
            if not isinstance(value, int) or value <= 0:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
            check_delta(value)
        if self.start_offset_ticks >= self.window_ticks:
            raise ValueError("start offset must be shorter than the time window")


DEFAULT_CADENCE = CadenceConfig()


def _exact(seconds: Real | Fraction) -> Fraction:
    if isinstance(seconds, float) and not math.isfinite(seconds):
        raise ValueError(f"seconds must be finite, got {seconds}")
    return Fraction(seconds)


def seconds_to_ticks(seconds: Real | Fraction) -> NtTicks:
    """Convert a nonnegative duration to the nearest whole tick (ties to even).

    The product is taken in exact rational arithmetic, so ``0.005`` maps to
    exactly 319,488,000 even though 0.005 is not representable as a float.
    """
    exact = _exact(seconds)
    if exact < 0:
        raise ValueError(f"seconds must be nonnegative, got {seconds}")
    return check_ticks(round(exact * K_F))


def ticks_to_seconds(ticks: int, exact: bool = False) -> float | Fraction:
    """Inverse of :func:`seconds_to_ticks`.

    With ``exact=True`` the result is a :class:`~fractions.Fraction`; a float
    cannot hold sub-tick precision once durations reach a few thousand seconds.
    """
    value = Fraction(ticks, K_F)
    return value if exact else float(value)


def initial_network_cadence(current_time: int, cfg: CadenceConfig = DEFAULT_CADENCE) -> NtTicks:
    """First packet instant: next whole ``K_F`` boundary after ``current_time`` plus the start offset.

    The boundary is strictly after ``current_time``, so a transfer is never
    scheduled in the past.
    """
    check_ticks(current_time)
    t_net = (current_time // K_F + 1) * K_F
    return check_ticks(t_net + cfg.start_offset_ticks)


def fits_in_window(schedule_span: int, cfg: CadenceConfig = DEFAULT_CADENCE) -> bool:
    if schedule_span < 0:
        raise ValueError(f"schedule span must be nonnegative, got {schedule_span}")
    return cfg.start_offset_ticks + schedule_span <= cfg.window_ticks


def worst_case_span(slot_width: int, cfg: CadenceConfig = DEFAULT_CADENCE) -> int:
    """Span of a 33-packet schedule whose key bytes are all 0xFF."""
    return 32 * (cfg.between_offset_ticks + 255 * slot_width)


def describe_constants(cfg: CadenceConfig = DEFAULT_CADENCE) -> list[tuple[str, str]]:
    """Human-readable constant table (used by ``geolock info``)."""
    tick_ps = 1e12 / K_F

    def ms(ticks: int) -> str:
        return f"{ticks:,} ticks ({float(Fraction(ticks * 1000, K_F)):g} ms)"

    return [
        ("K_f (ticks per second)", f"{K_F:,}"),
        ("tick duration", f"{tick_ps:.4f} ps"),
        ("time window", ms(cfg.window_ticks)),
        ("start offset", ms(cfg.start_offset_ticks)),
        ("between offset", ms(cfg.between_offset_ticks)),
    ]
