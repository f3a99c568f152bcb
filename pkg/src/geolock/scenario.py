"""Scenario files: JSON configuration for simulation, sweeps and the TCP demo.

Example::

    {
      "anchors": [{"id": "A", "pos": [-5, 0, 0]}, {"id": "B", "pos": [5, 0, 0]}],
      "authorized_region": {"center": [0, 0, 0], "radius_m": 2.0},
      "receivers": [{"id": "alice", "pos": [0, 0, 0], "role": "intended"}],
      "password": "correct horse battery staple",
      "noise": {"sigma_ticks": 0, "seed": 7},
      "payload_path": "payload.bin"
    }

``anchor_sequence`` (33 anchor ids) and ``slot_width_ticks`` are optional.
Omitting ``noise.sigma_ticks`` selects a tenth of the slot width.

Validation reports every problem at once as ``Violation(code, path, message)``.
Codes: ``missing``, ``type``, ``range``, ``empty``, ``duplicate_id``,
``unknown_anchor``, ``length``, ``enum``, ``unknown_field``, ``window``,
``not_found``, ``syntax``.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .codec import KEY_PACKETS, KeySchedule, assign_anchors, schedule_key
from .cryptocore import Key256, derive_key
from .errors import ConfigurationError, Violation
from .geometry import Anchor, AuthorizedRegion, Point3, check_slot_width, slot_width_from_region
from .simchannel import NOISE_MODES, ROLES, NoiseModel, Receiver
from .timebase import DEFAULT_CADENCE, CadenceConfig, initial_network_cadence

SEED_ENV = "GEOLOCK_SEED"

_TOP_LEVEL = {
    "anchors", "authorized_region", "anchor_sequence", "receivers", "password",
    "noise", "payload_path", "slot_width_ticks",
}


@dataclass
class Scenario:
    anchors: list[Anchor]
    region: AuthorizedRegion
    password: str
    receivers: list[Receiver] = field(default_factory=list)
    anchor_sequence: list[str] | None = None
    sigma_ticks: float | None = None
    seed: int = 0
    noise_mode: str = "per_gap"
    payload_path: Path | None = None
    payload: bytes | None = None
    slot_width_ticks: int | None = None

    def key(self) -> Key256:
        return derive_key(self.password)

    def slot_width(self, cfg: CadenceConfig = DEFAULT_CADENCE) -> int:
        if self.slot_width_ticks is not None:
            return check_slot_width(self.slot_width_ticks, cfg)
        return slot_width_from_region(self.region, cfg)

    def packet_anchors(self, count: int = KEY_PACKETS) -> list[Anchor]:
        if self.anchor_sequence is None:
            return assign_anchors(self.anchors, None, count)
        # Payload-only packets past the key keep cycling the pinned sequence.
        pinned = assign_anchors(self.anchors, self.anchor_sequence)
        return [pinned[i % KEY_PACKETS] for i in range(count)]

    def schedule(self, cfg: CadenceConfig = DEFAULT_CADENCE, current_time: int = 0) -> KeySchedule:
        return schedule_key(
            self.key(),
            self.packet_anchors(),
            self.region.center,
            initial_network_cadence(current_time, cfg),
            self.slot_width(cfg),
            cfg,
        )

    def noise_model(self, cfg: CadenceConfig = DEFAULT_CADENCE) -> NoiseModel:
        sigma = self.sigma_ticks if self.sigma_ticks is not None else self.slot_width(cfg) / 10
        return NoiseModel(sigma_ticks=sigma, seed=self.seed, mode=self.noise_mode)

    def payload_bytes(self) -> bytes:
        if self.payload is not None:
            return self.payload
        if self.payload_path is None:
            return b""
        return self.payload_path.read_bytes()

    def warnings(self) -> list[str]:
        out = []
        if len({a.id for a in self.packet_anchors()}) == 1:
            out.append("single anchor: every position decodes the key (common-mode delay cancels)")
        return out

    def digest(self) -> str:
        """Short hash of the geometry and timing inputs (never the password)."""
        doc = {
            "anchors": [[a.id, list(a.position)] for a in self.anchors],
            "center": list(self.region.center),
            "radius_m": self.region.radius_m,
            "sequence": [a.id for a in self.packet_anchors()],
            "slot_width_ticks": self.slot_width_ticks,
        }
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]

    @classmethod
    def load(cls, path: str | os.PathLike, cfg: CadenceConfig = DEFAULT_CADENCE) -> "Scenario":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigurationError([Violation("not_found", str(path), str(exc))]) from None
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError([Violation("syntax", f"line {exc.lineno}", exc.msg)]) from None
        return cls.from_dict(doc, base_dir=path.parent, cfg=cfg)

    @classmethod
    def from_dict(cls, doc: Any, base_dir: str | os.PathLike | None = None,
                  cfg: CadenceConfig = DEFAULT_CADENCE) -> "Scenario":
        return _Validator(Path(base_dir) if base_dir else None, cfg).build(doc)

    def with_env_seed(self, environ=os.environ) -> "Scenario":
        """Apply ``GEOLOCK_SEED`` if set."""
        raw = environ.get(SEED_ENV)
        if raw is None:
            return self
        try:
            seed = int(raw, 0)
            NoiseModel(seed=seed)
        except ValueError:
            raise ConfigurationError([Violation("range", SEED_ENV, f"not an unsigned 64-bit integer: {raw!r}")]) from None
        self.seed = seed
        return self


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


class _Validator:
    def __init__(self, base_dir: Path | None, cfg: CadenceConfig):
        self.base_dir = base_dir
        self.cfg = cfg
        self.violations: list[Violation] = []

    def fail(self, code: str, path: str, message: str) -> None:
        self.violations.append(Violation(code, path, message))

    def point(self, value, path: str) -> Point3 | None:
        if not (isinstance(value, list) and len(value) == 3 and all(_is_number(v) for v in value)):
            self.fail("type", path, "expected [x, y, z] of finite numbers")
            return None
        return Point3.of(value)

    def string(self, obj: dict, key: str, path: str) -> str | None:
        if key not in obj:
            self.fail("missing", f"{path}.{key}" if path else key, "required")
            return None
        v = obj[key]
        if not isinstance(v, str):
            self.fail("type", f"{path}.{key}" if path else key, "expected a string")
            return None
        if not v:
            self.fail("empty", f"{path}.{key}" if path else key, "must be nonempty")
            return None
        return v

    def build(self, doc: Any) -> Scenario:
        if not isinstance(doc, dict):
            raise ConfigurationError([Violation("type", "", "scenario must be a JSON object")])
        for k in sorted(set(doc) - _TOP_LEVEL):
            self.fail("unknown_field", k, "not a scenario field")

        anchors = self.anchors(doc)
        region = self.region(doc)
        password = self.string(doc, "password", "")
        receivers = self.receivers(doc)
        sequence = self.sequence(doc, anchors)
        sigma, seed, mode = self.noise(doc)
        payload_path = self.payload_path(doc)
        slot_override = self.slot_override(doc)
        self.window(region, slot_override)

        if self.violations:
            raise ConfigurationError(self.violations)
        return Scenario(
            anchors=anchors, region=region, password=password, receivers=receivers,
            anchor_sequence=sequence, sigma_ticks=sigma, seed=seed, noise_mode=mode,
            payload_path=payload_path, slot_width_ticks=slot_override,
        )

    def anchors(self, doc) -> list[Anchor]:
        raw = doc.get("anchors")
        if raw is None:
            self.fail("missing", "anchors", "required")
            return []
        if not isinstance(raw, list):
            self.fail("type", "anchors", "expected a list")
            return []
        if not raw:
            self.fail("empty", "anchors", "at least one anchor is required")
        out, seen = [], set()
        for i, item in enumerate(raw):
            path = f"anchors[{i}]"
            if not isinstance(item, dict):
                self.fail("type", path, "expected an object")
                continue
            aid = self.string(item, "id", path)
            if "pos" not in item:
                self.fail("missing", f"{path}.pos", "required")
                pos = None
            else:
                pos = self.point(item["pos"], f"{path}.pos")
            if aid is not None and aid in seen:
                self.fail("duplicate_id", f"{path}.id", f"anchor id {aid!r} repeated")
                continue
            if aid is not None:
                seen.add(aid)
            if aid is not None and pos is not None:
                out.append(Anchor(aid, pos))
        return out

    def region(self, doc) -> AuthorizedRegion | None:
        raw = doc.get("authorized_region")
        if raw is None:
            self.fail("missing", "authorized_region", "required")
            return None
        if not isinstance(raw, dict):
            self.fail("type", "authorized_region", "expected an object")
            return None
        center = None
        if "center" not in raw:
            self.fail("missing", "authorized_region.center", "required")
        else:
            center = self.point(raw["center"], "authorized_region.center")
        radius = raw.get("radius_m")
        if radius is None:
            self.fail("missing", "authorized_region.radius_m", "required")
        elif not _is_number(radius):
            self.fail("type", "authorized_region.radius_m", "expected a number")
        elif radius <= 0:
            self.fail("range", "authorized_region.radius_m", f"must be > 0, got {radius}")
        elif center is not None:
            return AuthorizedRegion(center, float(radius))
        return None

    def receivers(self, doc) -> list[Receiver]:
        raw = doc.get("receivers", [])
        if not isinstance(raw, list):
            self.fail("type", "receivers", "expected a list")
            return []
        out, seen = [], set()
        for i, item in enumerate(raw):
            path = f"receivers[{i}]"
            if not isinstance(item, dict):
                self.fail("type", path, "expected an object")
                continue
            rid = self.string(item, "id", path)
            pos = self.point(item["pos"], f"{path}.pos") if "pos" in item else None
            if "pos" not in item:
                self.fail("missing", f"{path}.pos", "required")
            role = item.get("role", "intended")
            if role not in ROLES:
                self.fail("enum", f"{path}.role", f"expected one of {list(ROLES)}")
                role = None
            if rid is not None and rid in seen:
                self.fail("duplicate_id", f"{path}.id", f"receiver id {rid!r} repeated")
                continue
            if rid is not None:
                seen.add(rid)
            if rid is not None and pos is not None and role is not None:
                out.append(Receiver(rid, pos, role))
        return out

    def sequence(self, doc, anchors: list[Anchor]) -> list[str] | None:
        raw = doc.get("anchor_sequence")
        if raw is None:
            return None
        if not (isinstance(raw, list) and all(isinstance(s, str) for s in raw)):
            self.fail("type", "anchor_sequence", "expected a list of anchor ids")
            return None
        if len(raw) != KEY_PACKETS:
            self.fail("length", "anchor_sequence", f"expected {KEY_PACKETS} entries, got {len(raw)}")
        known = {a.id for a in anchors}
        for i, s in enumerate(raw):
            if s not in known:
                self.fail("unknown_anchor", f"anchor_sequence[{i}]", f"no anchor with id {s!r}")
        return list(raw)

    def noise(self, doc) -> tuple[float | None, int, str]:
        raw = doc.get("noise", {})
        if not isinstance(raw, dict):
            self.fail("type", "noise", "expected an object")
            return None, 0, "per_gap"
        sigma = raw.get("sigma_ticks")
        if sigma is not None:
            if not _is_number(sigma):
                self.fail("type", "noise.sigma_ticks", "expected a number")
                sigma = None
            elif sigma < 0:
                self.fail("range", "noise.sigma_ticks", f"must be >= 0, got {sigma}")
                sigma = None
            else:
                sigma = float(sigma)
        seed = raw.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            self.fail("type", "noise.seed", "expected an integer")
            seed = 0
        elif not 0 <= seed < 2**64:
            self.fail("range", "noise.seed", "must fit in an unsigned 64-bit integer")
            seed = 0
        mode = raw.get("mode", "per_gap")
        if mode not in NOISE_MODES:
            self.fail("enum", "noise.mode", f"expected one of {list(NOISE_MODES)}")
            mode = "per_gap"
        return sigma, seed, mode

    def payload_path(self, doc) -> Path | None:
        raw = doc.get("payload_path")
        if raw is None:
            return None
        if not isinstance(raw, str) or not raw:
            self.fail("type", "payload_path", "expected a nonempty string")
            return None
        path = Path(raw)
        if not path.is_absolute() and self.base_dir is not None:
            path = self.base_dir / path
        if not path.is_file():
            self.fail("not_found", "payload_path", f"no such file: {path}")
        return path

    def slot_override(self, doc) -> int | None:
        raw = doc.get("slot_width_ticks")
        if raw is None:
            return None
        if not isinstance(raw, int) or isinstance(raw, bool):
            self.fail("type", "slot_width_ticks", "expected an integer")
            return None
        if raw < 1:
            self.fail("range", "slot_width_ticks", f"must be >= 1, got {raw}")
            return None
        return raw

    def window(self, region: AuthorizedRegion | None, override: int | None) -> None:
        try:
            if override is not None:
                check_slot_width(override, self.cfg)
            elif region is not None:
                slot_width_from_region(region, self.cfg)
        except ConfigurationError as exc:
            path = "slot_width_ticks" if override is not None else "authorized_region.radius_m"
            self.fail("window", path, exc.violations[0].message)


def canonical_scenario(password: str = "location-bound demo", payload: bytes | None = b"geolock demo payload\n",
                       eavesdropper_at: tuple[float, float, float] = (10.0, 0.0, 0.0),
                       sigma_ticks: float = 0.0, seed: int = 0) -> Scenario:
    """Two anchors at (+-5, 0, 0) m, region of radius 2 m at the origin."""
    return Scenario(
        anchors=[Anchor("A", Point3(-5.0, 0.0, 0.0)), Anchor("B", Point3(5.0, 0.0, 0.0))],
        region=AuthorizedRegion(Point3(0.0, 0.0, 0.0), 2.0),
        password=password,
        receivers=[
            Receiver("intended", Point3(0.0, 0.0, 0.0), "intended"),
            Receiver("eavesdropper", Point3.of(eavesdropper_at), "eavesdropper"),
        ],
        sigma_ticks=sigma_ticks,
        seed=seed,
        payload=payload,
    )
