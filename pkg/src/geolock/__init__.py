"""Location-bound key distribution: a 32-byte key carried in UWB packet timing."""

from .codec import ArrivalTrace, KeySchedule, decode_arrivals, decode_slots, eavesdropper_decode, schedule_key
from .cryptocore import CipherPayload, Key256, chunk, decrypt, derive_key, encrypt, unchunk
from .errors import (
    ConfigurationError,
    DecryptionError,
    FramingError,
    GeolockError,
    IncompleteKeyError,
    SlotOutOfRangeError,
    TickOverflowError,
    WindowOverflowError,
)
from .estimator import LocationKeyCodec
from .geometry import Anchor, AuthorizedRegion, Point3, path_difference_shift, slot_width_from_region, tof_ticks
from .scenario import Scenario, canonical_scenario
from .simchannel import GridSpec, NoiseModel, Receiver, deliver, run_scenario, spatial_sweep
from .timebase import K_F, CadenceConfig, initial_network_cadence, seconds_to_ticks, ticks_to_seconds

__version__ = "0.1.0"

__all__ = [
    "Anchor",
    "ArrivalTrace",
    "AuthorizedRegion",
    "CadenceConfig",
    "canonical_scenario",
    "chunk",
    "CipherPayload",
    "ConfigurationError",
    "decode_arrivals",
    "decode_slots",
    "decrypt",
    "DecryptionError",
    "deliver",
    "derive_key",
    "eavesdropper_decode",
    "encrypt",
    "FramingError",
    "GeolockError",
    "GridSpec",
    "IncompleteKeyError",
    "initial_network_cadence",
    "K_F",
    "Key256",
    "KeySchedule",
    "LocationKeyCodec",
    "NoiseModel",
    "path_difference_shift",
    "Point3",
    "Receiver",
    "run_scenario",
    "Scenario",
    "schedule_key",
    "seconds_to_ticks",
    "slot_width_from_region",
    "SlotOutOfRangeError",
    "spatial_sweep",
    "TickOverflowError",
    "ticks_to_seconds",
    "tof_ticks",
    "unchunk",
    "WindowOverflowError",
]
