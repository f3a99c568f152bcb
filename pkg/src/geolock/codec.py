"""Encode a 32-byte key into 33 packet transmit times, and decode it back.

Transmit side, for packets n = 1..32 with slot ``s(n)`` = key byte n-1::

    tx(n) = tx(n-1) + tof(n-1) + between_offset + s(n) * slot_width - tof(n)

where ``tof(n)`` is the flight time from the anchor sending packet n to the
authorized point. Packet 0 is the reference: it is sent ``tof(0)`` early so it
*arrives* at the authorized point exactly at the initial network cadence.
The receiver recovers each byte from consecutive arrival times::

    s(n) = round((rx(n) - rx(n-1) - between_offset) / slot_width)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cryptocore import Key256
from .errors import ConfigurationError, IncompleteKeyError, SlotOutOfRangeError, WindowOverflowError
from .geometry import Anchor, Located, Point3, check_slot_width, position_of, tof_ticks, tof_ticks_many
from .timebase import DEFAULT_CADENCE, CadenceConfig, check_delta, check_ticks, fits_in_window

KEY_PACKETS = 33
KEY_BYTES = 32
NUM_SLOTS = 256


def round_half_even_div(num: int, den: int) -> int:
    """``round(num / den)`` with ties to even, in exact integer arithmetic."""
    if den <= 0:
        raise ValueError("denominator must be positive")
    q, r = divmod(num, den)
    twice = 2 * r
    if twice > den or (twice == den and q % 2):
        q += 1
    return q


def round_half_even_div_array(num: np.ndarray, den: int) -> np.ndarray:
    q, r = np.divmod(num, den)
    twice = 2 * r
    return q + ((twice > den) | ((twice == den) & (q % 2 == 1)))


@dataclass(frozen=True)
class ScheduleEntry:
    seq: int
    anchor: Anchor
    tx_time: int
    arrival_time: int  # intended arrival at the authorized point
    slot: int | None  # None for the reference packet


@dataclass(frozen=True)
class KeySchedule:
    entries: tuple[ScheduleEntry, ...]
    slot_width: int
    authorized_point: Point3

    def __post_init__(self):
        if len(self.entries) != KEY_PACKETS:
            raise ValueError(f"a key schedule has exactly {KEY_PACKETS} entries, got {len(self.entries)}")

    @property
    def anchors(self) -> list[Anchor]:
        return [e.anchor for e in self.entries]

    @property
    def tx_times(self) -> list[int]:
        return [e.tx_time for e in self.entries]

    @property
    def slots(self) -> list[int]:
        return [e.slot for e in self.entries[1:]]


def assign_anchors(anchors: Sequence[Anchor], sequence: Sequence[str] | None = None,
                   count: int = KEY_PACKETS) -> list[Anchor]:
    """Pick the anchor for each packet: round-robin, or an explicit id sequence."""
    if not anchors:
        raise ConfigurationError("at least one anchor is required")
    if sequence is None:
        return [anchors[i % len(anchors)] for i in range(count)]
    by_id = {a.id: a for a in anchors}
    missing = [s for s in sequence if s not in by_id]
    if missing:
        raise ConfigurationError(f"anchor sequence references unknown ids {sorted(set(missing))}")
    if len(sequence) != count:
        raise ConfigurationError(f"anchor sequence must have {count} entries, got {len(sequence)}")
    return [by_id[s] for s in sequence]


def _key_slots(key: Key256 | bytes) -> list[int]:
    raw = bytes(key)
    if len(raw) != KEY_BYTES:
        raise ValueError(f"key must be {KEY_BYTES} bytes")
    return list(raw)


def schedule_key(
    key: Key256 | bytes,
    anchors: Sequence[Anchor],
    authorized: Located,
    t0: int,
    slot_width: int,
    cfg: CadenceConfig = DEFAULT_CADENCE,
) -> KeySchedule:
    """Build the 33-packet transmit schedule for ``key``.

    ``t0`` is the intended arrival time of the reference packet at the
    authorized point, normally :func:`~geolock.timebase.initial_network_cadence`.
    """
    if len(anchors) != KEY_PACKETS:
        raise ValueError(f"need one anchor per packet ({KEY_PACKETS}), got {len(anchors)}")
    check_slot_width(slot_width, cfg)
    check_ticks(t0)
    slots = _key_slots(key)
    tofs = [tof_ticks(a, authorized) for a in anchors]

    tx = check_ticks(t0 - tofs[0])
    arrival = t0
    entries = [ScheduleEntry(0, anchors[0], tx, arrival, None)]
    for n in range(1, KEY_PACKETS):
        slot = slots[n - 1]
        tx = check_ticks(tx + tofs[n - 1] + cfg.between_offset_ticks + slot * slot_width - tofs[n])
        arrival = check_ticks(arrival + cfg.between_offset_ticks + slot * slot_width)
        if tx <= entries[-1].tx_time:
            raise ConfigurationError(f"packet {n} would be sent before packet {n - 1}; anchors too far apart")
        entries.append(ScheduleEntry(n, anchors[n], tx, arrival, slot))

    schedule = KeySchedule(tuple(entries), slot_width, position_of(authorized))
    span = schedule_span(schedule)
    if not fits_in_window(span, cfg):
        raise WindowOverflowError(f"schedule span {span} plus start offset exceeds window {cfg.window_ticks}")
    return schedule


def extend_schedule(schedule: KeySchedule, anchors: Sequence[Anchor], cfg: CadenceConfig = DEFAULT_CADENCE) -> list[ScheduleEntry]:
    """Slot-0 follow-on packets that only carry payload; the key decoder ignores them."""
    last = schedule.entries[-1]
    out = []
    tx, arrival, prev_tof = last.tx_time, last.arrival_time, tof_ticks(last.anchor, schedule.authorized_point)
    for i, anchor in enumerate(anchors):
        cur_tof = tof_ticks(anchor, schedule.authorized_point)
        tx = check_ticks(tx + prev_tof + cfg.between_offset_ticks - cur_tof)
        arrival = check_ticks(arrival + cfg.between_offset_ticks)
        out.append(ScheduleEntry(KEY_PACKETS + i, anchor, tx, arrival, 0))
        prev_tof = cur_tof
    return out


def schedule_span(schedule: KeySchedule) -> int:
    return check_delta(schedule.entries[-1].tx_time - schedule.entries[0].tx_time)


@dataclass
class ArrivalTrace:
    """Observed arrival times, one per packet, ordered by sequence number."""

    seqs: list[int]
    times: list[int]

    def __post_init__(self):
        if len(self.seqs) != len(self.times):
            raise ValueError("seqs and times must have equal length")
        for i in range(1, len(self.seqs)):
            if self.seqs[i] <= self.seqs[i - 1]:
                raise ValueError(f"sequence numbers must be strictly increasing (index {i})")
            if self.times[i] < self.times[i - 1]:
                raise ValueError(f"arrival times must be monotone (index {i})")

    @classmethod
    def from_unordered(cls, pairs) -> "ArrivalTrace":
        ordered = sorted(pairs)
        return cls([s for s, _ in ordered], [t for _, t in ordered])

    def shifted(self, offset: int) -> "ArrivalTrace":
        return ArrivalTrace(list(self.seqs), [t + offset for t in self.times])

    def __len__(self) -> int:
        return len(self.times)


def decode_slots(trace: ArrivalTrace | Sequence[int], slot_width: int,
                 cfg: CadenceConfig = DEFAULT_CADENCE) -> list[int]:
    """Raw decoded slot per key byte; values may fall outside 0..255 off-region."""
    times = trace.times if isinstance(trace, ArrivalTrace) else list(trace)
    if len(times) < KEY_PACKETS:
        raise IncompleteKeyError(len(times), KEY_PACKETS)
    between = cfg.between_offset_ticks
    return [
        round_half_even_div(times[n] - times[n - 1] - between, slot_width)
        for n in range(1, KEY_PACKETS)
    ]


def decode_arrivals(trace: ArrivalTrace | Sequence[int], slot_width: int,
                    cfg: CadenceConfig = DEFAULT_CADENCE) -> Key256:
    slots = decode_slots(trace, slot_width, cfg)
    for i, s in enumerate(slots):
        if not 0 <= s < NUM_SLOTS:
            raise SlotOutOfRangeError(i, s, slots)
    return Key256(bytes(slots))


class IncrementalDecoder:
    """Feed arrival times one at a time; the key is ready after 33.

    Single-owner object; not meant to be shared between threads.
    """

    def __init__(self, slot_width: int, cfg: CadenceConfig = DEFAULT_CADENCE):
        self.slot_width = slot_width
        self.cfg = cfg
        self._last: int | None = None
        self.slots: list[int] = []

    def feed(self, rx_time: int) -> int | None:
        """Accept one arrival; returns the slot it completes, if any."""
        if self.complete:
            return None
        slot = None
        if self._last is not None:
            slot = round_half_even_div(rx_time - self._last - self.cfg.between_offset_ticks, self.slot_width)
            self.slots.append(slot)
        self._last = rx_time
        return slot

    @property
    def complete(self) -> bool:
        return len(self.slots) == KEY_BYTES

    def key(self) -> Key256:
        if not self.complete:
            raise IncompleteKeyError(len(self.slots) + (self._last is not None), KEY_PACKETS)
        for i, s in enumerate(self.slots):
            if not 0 <= s < NUM_SLOTS:
                raise SlotOutOfRangeError(i, s, list(self.slots))
        return Key256(bytes(self.slots))


@dataclass
class EavesdropReport:
    slots: list[int]
    true_key: Key256
    deltas: list[int] = field(init=False)
    unrecoverable: list[int] = field(init=False)

    def __post_init__(self):
        self.deltas = [s - t for s, t in zip(self.slots, bytes(self.true_key))]
        self.unrecoverable = [i for i, s in enumerate(self.slots) if not 0 <= s < NUM_SLOTS]

    @property
    def wrong_bytes(self) -> list[int]:
        return [i for i, d in enumerate(self.deltas) if d]

    @property
    def byte_errors(self) -> int:
        return len(self.wrong_bytes)

    @property
    def key(self) -> Key256 | None:
        return None if self.unrecoverable else Key256(bytes(self.slots))


def eavesdropper_decode(trace: ArrivalTrace, true_key: Key256, slot_width: int,
                        cfg: CadenceConfig = DEFAULT_CADENCE) -> EavesdropReport:
    """Decode a trace captured anywhere and compare it byte by byte with the real key."""
    return EavesdropReport(decode_slots(trace, slot_width, cfg), true_key)


def analytic_slots(schedule: KeySchedule, points: np.ndarray) -> np.ndarray:
    """Zero-noise decoded slots at many points without simulating packets.

    Uses the shift identity: the slot decoded at ``q`` is
    ``round(slot + shift(q) / slot_width)``, where ``shift`` is the per-gap
    path-difference shift. Returns an ``(n_points, 32)`` int64 array.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    auth = schedule.authorized_point
    cache: dict[str, np.ndarray] = {}
    for a in schedule.anchors:
        if a.id not in cache:
            cache[a.id] = tof_ticks_many(a, points) - tof_ticks(a, auth)
    width = schedule.slot_width
    out = np.empty((points.shape[0], KEY_BYTES), dtype=np.int64)
    entries = schedule.entries
    for n in range(1, KEY_PACKETS):
        shift = cache[entries[n].anchor.id] - cache[entries[n - 1].anchor.id]
        out[:, n - 1] = round_half_even_div_array(entries[n].slot * width + shift, width)
    return out
