"""scikit-learn style wrapper around the key/timing codec.

``fit`` fixes the geometry (anchors, region, packet-to-anchor assignment).
Afterwards the codec maps key batches to transmit schedules (``transform``),
arrival-time batches back to key bytes (``inverse_transform``), and receiver
positions to "would this position recover the key" (``predict``)::

    codec = LocationKeyCodec(anchors={"A": (-5, 0, 0), "B": (5, 0, 0)}, radius_m=2.0).fit()
    tx = codec.transform(keys)            # (n, 32) uint8 -> (n, 33) int64 ticks
    codec.inverse_transform(arrivals)     # (n, 33) ticks -> (n, 32) decoded slots
    codec.set_params(key=keys[0]).predict(grid)   # (m, 3) meters -> (m,) bool
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .codec import KEY_BYTES, KEY_PACKETS, analytic_slots, assign_anchors, round_half_even_div_array, schedule_key
from .cryptocore import Key256
from .errors import ConfigurationError
from .geometry import Anchor, AuthorizedRegion, Point3, check_slot_width, slot_width_from_region, tof_ticks
from .timebase import DEFAULT_CADENCE, initial_network_cadence


def check_keys(X) -> np.ndarray:
    """Validate a batch of 32-byte keys given as bytes, Key256, or an integer array."""
    if isinstance(X, (bytes, bytearray, Key256)):
        X = [X]
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], (bytes, bytearray, Key256)):
        X = [list(bytes(k)) for k in X]
    elif np.ndim(X) == 1:
        X = [X]
    arr = check_array(X, dtype=np.int64, ensure_2d=True)
    if arr.shape[1] != KEY_BYTES:
        raise ValueError(f"keys must have {KEY_BYTES} columns, got {arr.shape[1]}")
    if arr.min() < 0 or arr.max() > 255:
        raise ValueError("key bytes must lie in 0..255")
    return arr


def check_positions(X) -> np.ndarray:
    arr = check_array(X, dtype=np.float64, ensure_2d=True)
    if arr.shape[1] != 3:
        raise ValueError(f"positions must have 3 columns (x, y, z), got {arr.shape[1]}")
    return arr


class LocationKeyCodec(TransformerMixin, BaseEstimator):
    def __init__(self, anchors=None, center=(0.0, 0.0, 0.0), radius_m=2.0, anchor_sequence=None,
                 slot_width_ticks=None, current_time=0, key=None, cfg=DEFAULT_CADENCE):
        self.anchors = anchors
        self.center = center
        self.radius_m = radius_m
        self.anchor_sequence = anchor_sequence
        self.slot_width_ticks = slot_width_ticks
        self.current_time = current_time
        self.key = key
        self.cfg = cfg

    def fit(self, X=None, y=None):
        """Validate the geometry. ``X`` and ``y`` are ignored."""
        if not self.anchors:
            raise ConfigurationError("anchors must be a nonempty mapping of id -> (x, y, z)")
        items = self.anchors.items() if isinstance(self.anchors, dict) else self.anchors
        self.anchors_ = [Anchor(str(aid), Point3.of(pos)) for aid, pos in items]
        region = AuthorizedRegion(Point3.of(self.center), float(self.radius_m))
        self.center_ = region.center
        if self.slot_width_ticks is None:
            self.slot_width_ = slot_width_from_region(region, self.cfg)
        else:
            self.slot_width_ = check_slot_width(int(self.slot_width_ticks), self.cfg)
        self.packet_anchors_ = assign_anchors(self.anchors_, self.anchor_sequence)
        self.t0_ = initial_network_cadence(self.current_time, self.cfg)
        self.reference_tof_ = np.array([tof_ticks(a, self.center_) for a in self.packet_anchors_], dtype=np.int64)
        return self

    def transform(self, X):
        """Transmit times, shape ``(n_keys, 33)``."""
        check_is_fitted(self, "slot_width_")
        keys = check_keys(X)
        out = np.empty((keys.shape[0], KEY_PACKETS), dtype=np.int64)
        for i, row in enumerate(keys):
            sched = schedule_key(bytes(row.astype(np.uint8)), self.packet_anchors_, self.center_,
                                 self.t0_, self.slot_width_, self.cfg)
            out[i] = sched.tx_times
        return out

    def inverse_transform(self, X):
        """Decoded slots from arrival times, shape ``(n, 32)``; off-region values may leave 0..255."""
        check_is_fitted(self, "slot_width_")
        arr = check_array(X, dtype=np.int64, ensure_2d=True)
        if arr.shape[1] < KEY_PACKETS:
            raise ValueError(f"need at least {KEY_PACKETS} arrival times per row, got {arr.shape[1]}")
        gaps = np.diff(arr[:, :KEY_PACKETS], axis=1) - self.cfg.between_offset_ticks
        return round_half_even_div_array(gaps, self.slot_width_)

    def arrival_times(self, X):
        """Arrival times at the authorized point for a batch of keys (zero noise)."""
        return self.transform(X) + self.reference_tof_

    def predict(self, X):
        """True where a zero-noise receiver at each position recovers ``key`` exactly."""
        return self.byte_errors(X) == 0

    def byte_errors(self, X):
        check_is_fitted(self, "slot_width_")
        if self.key is None:
            raise ValueError("set the key parameter before predicting")
        points = check_positions(X)
        key = check_keys(self.key)[0]
        sched = schedule_key(bytes(key.astype(np.uint8)), self.packet_anchors_, self.center_,
                             self.t0_, self.slot_width_, self.cfg)
        return (analytic_slots(sched, points) != key).sum(axis=1)
