"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`GeolockError`
and carries a ``category`` string that the CLI maps onto an exit code.
"""

from __future__ import annotations

from dataclasses import dataclass


class GeolockError(Exception):
    category = "error"


class TickOverflowError(GeolockError, OverflowError):
    """A tick value left the unsigned/signed 64-bit range."""

    category = "range"


class WindowOverflowError(GeolockError, ValueError):
    """A key schedule does not fit in one network time window."""

    category = "config"


@dataclass(frozen=True)
class Violation:
    code: str
    path: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.path}: {self.message}"


class ConfigurationError(GeolockError, ValueError):
    """Invalid scenario or parameters. Holds every violation found, not just the first."""

    category = "config"

    def __init__(self, violations: list[Violation] | str):
        if isinstance(violations, str):
            violations = [Violation("invalid", "", violations)]
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class ResourceError(GeolockError):
    category = "resource"


class DecryptionError(GeolockError):
    """Padding or length check failed: wrong key or tampered ciphertext."""

    category = "wrong_key"


class FramingError(GeolockError, ValueError):
    category = "framing"

    def __init__(self, message: str, offset: int = 0):
        self.detail = message
        self.offset = offset
        super().__init__(f"{message} (at byte offset {offset})")


class IncompleteKeyError(GeolockError):
    """Fewer than 33 timing packets were observed."""

    category = "incomplete"

    def __init__(self, received: int, needed: int = 33):
        self.received = received
        self.needed = needed
        super().__init__(f"received {received} timing packets, need {needed}")


class TruncatedFrameError(FramingError):
    """The buffer ends before the frame does; more bytes may complete it."""


class IncompleteTransferError(GeolockError):
    """The session ended before all payload blocks arrived."""

    category = "incomplete"


class SlotOutOfRangeError(GeolockError):
    """A decoded slot fell outside 0..255.

    Raised instead of clamping: a receiver off the authorized region must not
    get a lucky clamp that happens to decrypt.
    """

    category = "off_region"

    def __init__(self, byte_index: int, slot: int, slots: list[int] | None = None):
        self.byte_index = byte_index
        self.slot = slot
        self.slots = slots
        super().__init__(f"key byte {byte_index} decoded to slot {slot}, outside 0..255")
