"""Where does decoding break? Per-gap deltas and flip distances for off-region receivers."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .codec import KeySchedule, analytic_slots
from .geometry import SPEED_OF_LIGHT, Point3, path_difference_shift
from .scenario import Scenario
from .timebase import DEFAULT_CADENCE, K_F, CadenceConfig

UNBOUNDED = math.inf
RESOLUTION_M = 1e-3
CEILING_M = 1000.0
_SCAN_CHUNK = 100_000

PROBE_DIRECTIONS = {
    "+x": (1.0, 0.0, 0.0), "-x": (-1.0, 0.0, 0.0),
    "+y": (0.0, 1.0, 0.0), "-y": (0.0, -1.0, 0.0),
    "+z": (0.0, 0.0, 1.0), "-z": (0.0, 0.0, -1.0),
}


@dataclass(frozen=True)
class GapDelta:
    gap: int  # 1..32, the key byte index + 1
    anchor_prev: str
    anchor_cur: str
    delta_ticks: int
    slot_width: int

    @property
    def slot_shift(self) -> float:
        return self.delta_ticks / self.slot_width

    @property
    def flips(self) -> bool:
        return abs(2 * self.delta_ticks) > self.slot_width


def reference_delta(scenario: Scenario, point, cfg: CadenceConfig = DEFAULT_CADENCE) -> list[GapDelta]:
    """Per-gap difference between the eavesdropper's and the intended receiver's timelines."""
    point = Point3.of(point)
    anchors = scenario.packet_anchors()
    center = scenario.region.center
    width = scenario.slot_width(cfg)
    return [
        GapDelta(n, anchors[n - 1].id, anchors[n].id,
                 path_difference_shift(anchors[n - 1], anchors[n], center, point), width)
        for n in range(1, len(anchors))
    ]


def format_reference_table(deltas: list[GapDelta]) -> str:
    lines = [f"{'gap':>3}  {'prev':<8} {'cur':<8} {'delta_ticks':>11} {'slots':>8}  flips"]
    for d in deltas:
        lines.append(f"{d.gap:>3}  {d.anchor_prev:<8} {d.anchor_cur:<8} {d.delta_ticks:>11} "
                     f"{d.slot_shift:>8.3f}  {'yes' if d.flips else 'no'}")
    return "\n".join(lines) + "\n"


def _unit(direction) -> np.ndarray:
    v = np.asarray(direction, dtype=float).reshape(3)
    norm = float(np.linalg.norm(v))
    if not math.isfinite(norm) or norm == 0:
        raise ValueError(f"direction must be a nonzero finite vector, got {direction}")
    return v / norm


def _fails(schedule: KeySchedule, true: np.ndarray, points: np.ndarray) -> np.ndarray:
    return (analytic_slots(schedule, points) != true).any(axis=1)


def min_flip_displacement(scenario: Scenario, direction, cfg: CadenceConfig = DEFAULT_CADENCE,
                          resolution: float = RESOLUTION_M, ceiling: float = CEILING_M) -> float:
    """Smallest displacement from the region center along ``direction`` that breaks the key.

    Scans outward at ``resolution`` steps (decoding is not monotone in
    general), then bisects the bracketing step. Returns ``math.inf`` when
    nothing flips within ``ceiling`` meters, e.g. with a single anchor.
    """
    unit = _unit(direction)
    schedule = scenario.schedule(cfg)
    if len({a.id for a in schedule.anchors}) < 2:
        return UNBOUNDED
    true = np.array(schedule.slots, dtype=np.int64)
    center = np.array(list(scenario.region.center))

    steps = int(math.ceil(ceiling / resolution))
    for start in range(1, steps + 1, _SCAN_CHUNK):
        idx = np.arange(start, min(start + _SCAN_CHUNK, steps + 1))
        t = idx * resolution
        bad = _fails(schedule, true, center + t[:, None] * unit)
        if bad.any():
            hi = float(t[np.argmax(bad)])
            lo = hi - resolution
            # Refine inside the bracket; stays well below tick quantization (~4.7 mm).
            while hi - lo > resolution * 1e-3:
                mid = 0.5 * (lo + hi)
                if _fails(schedule, true, (center + mid * unit)[None, :])[0]:
                    hi = mid
                else:
                    lo = mid
            return hi
    return UNBOUNDED


@dataclass
class ToleranceReport:
    scenario_digest: str
    slot_width: int
    tolerance_ticks: Fraction
    tolerance_m: float
    flips: dict[str, float] = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [
            f"scenario digest:      {self.scenario_digest}",
            f"slot width:           {self.slot_width} ticks",
            f"per-gap tolerance:    +-{float(self.tolerance_ticks):g} ticks "
            f"(+-{self.tolerance_m:.4f} m path difference)",
            "minimum flip displacement:",
        ]
        for name, t in self.flips.items():
            lines.append(f"  {name:<24} {'unbounded' if math.isinf(t) else f'{t:.4f} m'}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["direction", "min_flip_m"])
        for name, t in self.flips.items():
            w.writerow([name, "inf" if math.isinf(t) else f"{t:.6f}"])
        return buf.getvalue()


def tolerance_report(scenario: Scenario, directions: dict[str, tuple] | None = None,
                     cfg: CadenceConfig = DEFAULT_CADENCE) -> ToleranceReport:
    directions = directions or PROBE_DIRECTIONS
    width = scenario.slot_width(cfg)
    tol = Fraction(width, 2)
    return ToleranceReport(
        scenario_digest=scenario.digest(),
        slot_width=width,
        tolerance_ticks=tol,
        tolerance_m=float(tol * SPEED_OF_LIGHT / K_F),
        flips={name: min_flip_displacement(scenario, d, cfg) for name, d in directions.items()},
    )
