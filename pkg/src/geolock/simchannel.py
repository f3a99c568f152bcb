"""Deterministic channel simulation: deliver scheduled packets to receivers.

Arrival time of packet n at a receiver is ``tx(n) + tof(anchor(n), receiver)``
plus seeded Gaussian timing noise. Nothing here depends on wall-clock time.
"""

from __future__ import annotations

import csv
import io
import json
import math
import zlib
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .codec import KEY_BYTES, ArrivalTrace, KeySchedule, ScheduleEntry, analytic_slots, decode_slots
from .cryptocore import Key256, decrypt, encrypt
from .errors import DecryptionError, IncompleteKeyError, ResourceError, SlotOutOfRangeError
from .geometry import Point3, tof_ticks
from .timebase import DEFAULT_CADENCE, CadenceConfig, check_ticks

if TYPE_CHECKING:
    from .scenario import Scenario

ROLES = ("intended", "eavesdropper")
NOISE_MODES = ("per_gap", "per_arrival")
MAX_GRID_POINTS = 1_000_000


@dataclass(frozen=True)
class Receiver:
    id: str
    position: Point3
    role: str = "intended"

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")


@dataclass(frozen=True)
class NoiseModel:
    """Seeded Gaussian timing noise.

    ``per_gap`` adds one independent N(0, sigma) term to every inter-arrival
    difference (arrival offsets are a random walk). ``per_arrival`` jitters
    each arrival independently, so every gap sees a difference of two samples
    and sigma_gap = sigma * sqrt(2).
    """

    sigma_ticks: float = 0.0
    seed: int = 0
    mode: str = "per_gap"

    def __post_init__(self):
        if not (math.isfinite(self.sigma_ticks) and self.sigma_ticks >= 0):
            raise ValueError(f"sigma_ticks must be >= 0, got {self.sigma_ticks}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.mode not in NOISE_MODES:
            raise ValueError(f"noise mode must be one of {NOISE_MODES}")

    def offsets(self, receiver_id: str, count: int) -> np.ndarray:
        """Integer tick offsets for packets 0..count-1 at one receiver.

        Sample k depends only on (seed, receiver id, k): Philox is a counter
        based generator and draws are consumed in sequence order.
        """
        if self.sigma_ticks == 0 or count == 0:
            return np.zeros(count, dtype=np.int64)
        ss = np.random.SeedSequence([self.seed & 0xFFFFFFFF, self.seed >> 32, zlib.crc32(receiver_id.encode())])
        rng = np.random.Generator(np.random.Philox(ss))
        samples = np.rint(rng.standard_normal(count) * self.sigma_ticks).astype(np.int64)
        if self.mode == "per_arrival":
            return samples
        samples[0] = 0
        return np.cumsum(samples)


ZERO_NOISE = NoiseModel()


def deliver(schedule: KeySchedule | Sequence[ScheduleEntry], receiver: Receiver,
            noise: NoiseModel = ZERO_NOISE) -> ArrivalTrace:
    entries = schedule.entries if isinstance(schedule, KeySchedule) else schedule
    jitter = noise.offsets(receiver.id, len(entries))
    pairs = [
        (e.seq, check_ticks(e.tx_time + tof_ticks(e.anchor, receiver.position) + int(j)))
        for e, j in zip(entries, jitter)
    ]
    return ArrivalTrace.from_unordered(pairs)


@dataclass
class ReceiverResult:
    id: str
    role: str
    position: tuple[float, float, float]
    key_hex: str | None
    error: str | None
    byte_errors: int
    key_recovered: bool
    decrypted: bool
    slot_deltas: list[int]

    @property
    def success(self) -> bool:
        return self.key_recovered and self.decrypted


@dataclass
class ScenarioReport:
    slot_width: int
    receivers: list[ReceiverResult] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def intended_ok(self) -> bool:
        return all(r.success for r in self.receivers if r.role == "intended")

    def to_dict(self) -> dict:
        return {
            "slot_width_ticks": self.slot_width,
            "warnings": list(self.warnings),
            "receivers": [asdict(r) for r in self.receivers],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", "role", "x", "y", "z", "byte_errors", "key_recovered", "decrypted", "error"])
        for r in self.receivers:
            w.writerow([r.id, r.role, *r.position, r.byte_errors, str(r.key_recovered).lower(),
                        str(r.decrypted).lower(), r.error or ""])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"slot width: {self.slot_width} ticks"]
        lines += [f"warning: {w}" for w in self.warnings]
        if not self.receivers:
            lines.append("no receivers")
        for r in self.receivers:
            status = "DECRYPTED" if r.success else "FAILED"
            pos = f"({r.position[0]:g}, {r.position[1]:g}, {r.position[2]:g})"
            lines.append(
                f"{r.id:<16} {r.role:<12} {pos:<24} "
                f"{status:<9} byte_errors={r.byte_errors}" + (f"  [{r.error}]" if r.error else "")
            )
        return "\n".join(lines) + "\n"


def _evaluate(trace: ArrivalTrace, receiver: Receiver, key: Key256, slot_width: int,
              cipher, plain: bytes, cfg: CadenceConfig) -> ReceiverResult:
    error = None
    slots: list[int] = []
    try:
        slots = decode_slots(trace, slot_width, cfg)
    except IncompleteKeyError as exc:
        error = f"incomplete: {exc}"
    deltas = [s - t for s, t in zip(slots, bytes(key))]
    out_of_range = [i for i, s in enumerate(slots) if not 0 <= s <= 255]
    recovered_key = None
    decrypted = False
    if slots and out_of_range:
        error = f"off_region: {SlotOutOfRangeError(out_of_range[0], slots[out_of_range[0]])}"
    elif slots:
        recovered_key = Key256(bytes(slots))
        try:
            decrypted = decrypt(cipher, recovered_key) == plain
            if not decrypted:
                error = "wrong_key: decrypted bytes differ from the payload"
        except DecryptionError as exc:
            error = f"wrong_key: {exc}"
    return ReceiverResult(
        id=receiver.id,
        role=receiver.role,
        position=tuple(receiver.position),
        key_hex=recovered_key.hex() if recovered_key else None,
        error=error,
        byte_errors=sum(1 for d in deltas if d) if slots else KEY_BYTES,
        key_recovered=recovered_key == key,
        decrypted=decrypted,
        slot_deltas=deltas,
    )


def run_scenario(scenario: "Scenario", cfg: CadenceConfig = DEFAULT_CADENCE, current_time: int = 0) -> ScenarioReport:
    """Encrypt, schedule, deliver to every receiver, decode, and try to decrypt."""
    key = scenario.key()
    schedule = scenario.schedule(cfg, current_time)
    plain = scenario.payload_bytes()
    cipher = encrypt(plain, key)
    noise = scenario.noise_model(cfg)
    report = ScenarioReport(slot_width=schedule.slot_width, warnings=scenario.warnings())
    for receiver in scenario.receivers:
        trace = deliver(schedule, receiver, noise)
        report.receivers.append(_evaluate(trace, receiver, key, schedule.slot_width, cipher, plain, cfg))
    return report


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned grid; each axis is (start, stop, count) inclusive of both ends."""

    x: tuple[float, float, int] = (0.0, 0.0, 1)
    y: tuple[float, float, int] = (0.0, 0.0, 1)
    z: tuple[float, float, int] = (0.0, 0.0, 1)

    @property
    def size(self) -> int:
        return self.x[2] * self.y[2] * self.z[2]

    def points(self) -> np.ndarray:
        """Row-major: x varies slowest, z fastest."""
        axes = []
        for name, (start, stop, num) in zip("xyz", (self.x, self.y, self.z)):
            if num < 1:
                raise ValueError(f"grid axis {name} needs at least one point")
            axes.append(np.linspace(start, stop, int(num)))
        gx, gy, gz = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])


@dataclass(frozen=True)
class SweepRow:
    x: float
    y: float
    z: float
    byte_errors: int
    key_recovered: bool


def sweep_schedule(schedule: KeySchedule, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Byte-error count and recovery flag per point (zero-noise, analytic)."""
    true = np.array(schedule.slots, dtype=np.int64)
    decoded = analytic_slots(schedule, points)
    errors = (decoded != true).sum(axis=1)
    return errors, errors == 0


def spatial_sweep(scenario: "Scenario", grid: GridSpec, cfg: CadenceConfig = DEFAULT_CADENCE,
                  current_time: int = 0) -> list[SweepRow]:
    if grid.size > MAX_GRID_POINTS:
        raise ResourceError(f"grid has {grid.size} points; limit is {MAX_GRID_POINTS}")
    schedule = scenario.schedule(cfg, current_time)
    points = grid.points()
    errors, ok = sweep_schedule(schedule, points)
    return [
        SweepRow(float(p[0]), float(p[1]), float(p[2]), int(e), bool(k))
        for p, e, k in zip(points, errors, ok)
    ]


def write_sweep_csv(rows: Iterable[SweepRow], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["x", "y", "z", "byte_errors", "key_recovered"])
    for r in rows:
        w.writerow([repr(r.x), repr(r.y), repr(r.z), r.byte_errors, str(r.key_recovered).lower()])

