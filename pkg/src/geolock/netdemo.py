"""TCP stand-in for the radio link: framed server and client.

TCP cannot carry picosecond timing, so each frame carries the arrival time the
client *would* have measured: the server plays both transmitter and channel
and stamps every frame with ``tx + tof(anchor, client position) + noise``.
This makes the demo a functional model of the protocol, not a secure channel.

Frame layout (big-endian, 18-byte header)::

    b"JMTK" | version u8 | frame_type u8 | seq u16 | tx_timestamp u64 | payload_len u16 | payload

Frame types: 0 data, 1 end of transfer, 2 client hello (payload: x, y, z as
three big-endian float64).
"""

from __future__ import annotations

import logging
import socket
import struct
import time
from dataclasses import dataclass, field

from .codec import KEY_PACKETS, decode_slots, extend_schedule
from .cryptocore import BLOCK_SIZE, Key256, chunk, decrypt, encrypt, unchunk
from .errors import (
    DecryptionError,
    FramingError,
    GeolockError,
    IncompleteKeyError,
    IncompleteTransferError,
    SlotOutOfRangeError,
    TruncatedFrameError,
)
from .geometry import AuthorizedRegion, Point3, slot_width_from_region
from .scenario import Scenario
from .simchannel import Receiver, deliver
from .timebase import DEFAULT_CADENCE, CadenceConfig, U64_MAX

log = logging.getLogger(__name__)

FRAME_MAGIC = b"JMTK"
FRAME_VERSION = 1
FRAME_HEADER = struct.Struct(">4sBBHQH")
DATA, END, HELLO = 0, 1, 2
MAX_PAYLOAD = BLOCK_SIZE
QUIET_TIMEOUT = 2.0
_POSITION = struct.Struct(">3d")

DEFAULT_SLOT_WIDTH = slot_width_from_region(AuthorizedRegion(Point3(0.0, 0.0, 0.0), 2.0))


@dataclass(frozen=True)
class WireFrame:
    frame_type: int
    seq: int
    tx_timestamp: int
    payload: bytes = b""

    def __post_init__(self):
        if self.frame_type not in (DATA, END, HELLO):
            raise ValueError(f"unknown frame type {self.frame_type}")
        if not 0 <= self.seq <= 0xFFFF:
            raise ValueError(f"seq {self.seq} does not fit in 16 bits")
        if not 0 <= self.tx_timestamp <= U64_MAX:
            raise ValueError(f"timestamp {self.tx_timestamp} does not fit in 64 bits")
        if len(self.payload) > MAX_PAYLOAD:
            raise ValueError(f"payload of {len(self.payload)} bytes exceeds {MAX_PAYLOAD}")


def encode_frame(f: WireFrame) -> bytes:
    return FRAME_HEADER.pack(FRAME_MAGIC, FRAME_VERSION, f.frame_type, f.seq, f.tx_timestamp, len(f.payload)) + f.payload


def decode_frame(buf: bytes, offset: int = 0) -> tuple[WireFrame, bytes]:
    """Parse one frame at ``offset``; returns it with the unconsumed remainder."""
    view = memoryview(buf)[offset:]
    if len(view) >= 4 and bytes(view[:4]) != FRAME_MAGIC:
        raise FramingError(f"bad magic {bytes(view[:4])!r}", offset)
    if len(view) < FRAME_HEADER.size:
        raise TruncatedFrameError(f"header needs {FRAME_HEADER.size} bytes, have {len(view)}", offset + len(view))
    _, version, ftype, seq, ts, plen = FRAME_HEADER.unpack_from(view)
    if version != FRAME_VERSION:
        raise FramingError(f"unsupported version {version}", offset + 4)
    if ftype not in (DATA, END, HELLO):
        raise FramingError(f"unknown frame type {ftype}", offset + 5)
    if plen > MAX_PAYLOAD:
        raise FramingError(f"payload length {plen} exceeds {MAX_PAYLOAD}", offset + 16)
    end = FRAME_HEADER.size + plen
    if len(view) < end:
        raise TruncatedFrameError(f"payload needs {plen} bytes, have {len(view) - FRAME_HEADER.size}", offset + len(view))
    return WireFrame(ftype, seq, ts, bytes(view[FRAME_HEADER.size:end])), bytes(view[end:])


class FrameReader:
    """Reassemble frames from arbitrary TCP read boundaries."""

    def __init__(self):
        self.buffer = b""
        self.consumed = 0

    def feed(self, data: bytes) -> list[WireFrame]:
        self.buffer += data
        frames = []
        while self.buffer:
            try:
                frame, rest = decode_frame(self.buffer)
            except TruncatedFrameError:
                break
            except FramingError as exc:
                raise FramingError(exc.detail, self.consumed + exc.offset) from None
            self.consumed += len(self.buffer) - len(rest)
            self.buffer = rest
            frames.append(frame)
        return frames


def hello_frame(position: Point3) -> WireFrame:
    return WireFrame(HELLO, 0, 0, _POSITION.pack(*position))


def parse_endpoint(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"expected host:port, got {text!r}")
    return host.strip("[]") or "127.0.0.1", int(port)


class SimClock:
    """Simulated network clock in ticks; sessions advance it past their last packet."""

    def __init__(self, start: int = 0):
        self.ticks = start

    def now(self) -> int:
        return self.ticks

    def advance_to(self, ticks: int) -> None:
        self.ticks = max(self.ticks, ticks)


@dataclass
class SessionResult:
    peer: str
    position: Point3 | None = None
    frames_sent: int = 0
    error: str | None = None
    transcript: bytes = b""


def session_frames(scenario: Scenario, position: Point3, clock: SimClock,
                   cfg: CadenceConfig = DEFAULT_CADENCE, iv: bytes | None = None) -> list[WireFrame]:
    """Every frame one session sends, END included, for a client at ``position``."""
    cipher = encrypt(scenario.payload_bytes(), scenario.key(), iv)
    blocks = chunk(cipher)
    schedule = scenario.schedule(cfg, clock.now())
    count = max(KEY_PACKETS, len(blocks))
    entries = list(schedule.entries)
    entries += extend_schedule(schedule, scenario.packet_anchors(count)[KEY_PACKETS:], cfg)
    trace = deliver(entries, Receiver("client", position), scenario.noise_model(cfg))
    frames = [
        WireFrame(DATA, seq, ts, blocks[seq] if seq < len(blocks) else b"")
        for seq, ts in zip(trace.seqs, trace.times)
    ]
    frames.append(WireFrame(END, count, 0))
    clock.advance_to(entries[-1].tx_time)
    return frames


class DemoServer:
    """Sequential single-client server. Binds on construction; ``port=0`` picks a free port."""

    def __init__(self, scenario: Scenario, host: str = "127.0.0.1", port: int = 0,
                 cfg: CadenceConfig = DEFAULT_CADENCE, clock: SimClock | None = None,
                 iv: bytes | None = None, record: bool = False, hello_timeout: float = 5.0):
        self.scenario = scenario
        self.cfg = cfg
        self.clock = clock or SimClock()
        self.iv = iv
        self.record = record
        self.hello_timeout = hello_timeout
        self.sessions: list[SessionResult] = []
        self.sock = socket.create_server((host, port))

    @property
    def address(self) -> tuple[str, int]:
        return self.sock.getsockname()[:2]

    def _read_hello(self, conn: socket.socket) -> Point3:
        reader = FrameReader()
        conn.settimeout(self.hello_timeout)
        while True:
            data = conn.recv(4096)
            if not data:
                raise ConnectionError("client closed before hello")
            frames = reader.feed(data)
            if frames:
                hello = frames[0]
                if hello.frame_type != HELLO or len(hello.payload) != _POSITION.size:
                    raise FramingError("expected a hello frame with a 24-byte position", 0)
                return Point3.of(_POSITION.unpack(hello.payload))

    def handle(self, conn: socket.socket, peer: str) -> SessionResult:
        result = SessionResult(peer)
        sent = bytearray()
        try:
            result.position = self._read_hello(conn)
            for frame in session_frames(self.scenario, result.position, self.clock, self.cfg, self.iv):
                data = encode_frame(frame)
                conn.sendall(data)
                result.frames_sent += 1
                if self.record:
                    sent += data
        except (OSError, GeolockError, ValueError) as exc:
            result.error = f"{type(exc).__name__}: {exc}"
            log.warning("session with %s failed: %s", peer, result.error)
        finally:
            result.transcript = bytes(sent)
            conn.close()
        return result

    def serve(self, max_sessions: int | None = None) -> list[SessionResult]:
        served = 0
        while max_sessions is None or served < max_sessions:
            try:
                conn, addr = self.sock.accept()
            except OSError:
                break  # socket closed
            result = self.handle(conn, f"{addr[0]}:{addr[1]}")
            log.info("session %s: %d frames%s", result.peer, result.frames_sent,
                     f", error {result.error}" if result.error else "")
            self.sessions.append(result)
            served += 1
        return self.sessions

    def close(self) -> None:
        self.sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def serve(scenario: Scenario, listen: str | tuple[str, int], max_sessions: int | None = None,
          **kwargs) -> list[SessionResult]:
    host, port = parse_endpoint(listen) if isinstance(listen, str) else listen
    with DemoServer(scenario, host, port, **kwargs) as server:
        log.info("listening on %s:%d", *server.address)
        return server.serve(max_sessions)


@dataclass
class ClientResult:
    frames: list[WireFrame] = field(default_factory=list)
    got_end: bool = False
    slots: list[int] = field(default_factory=list)
    key: Key256 | None = None
    plaintext: bytes | None = None


def receive_frames(sock: socket.socket, timeout: float = QUIET_TIMEOUT) -> tuple[list[WireFrame], bool]:
    """Collect frames until END or ``timeout`` seconds without a new frame.

    A closed connection without END still waits out the quiet period, the way
    a radio receiver cannot tell a dead transmitter from a slow one.
    """
    reader = FrameReader()
    frames: dict[int, WireFrame] = {}
    last = time.monotonic()
    while True:
        remaining = last + timeout - time.monotonic()
        if remaining <= 0:
            break
        sock.settimeout(remaining)
        try:
            data = sock.recv(65536)
        except socket.timeout:
            break
        except OSError:
            data = b""
        if not data:
            remaining = last + timeout - time.monotonic()
            if remaining > 0:
                time.sleep(remaining)
            break
        new = reader.feed(data)
        if new:
            last = time.monotonic()
        for f in new:
            if f.frame_type == END:
                return [frames[s] for s in sorted(frames)], True
            if f.frame_type == DATA:
                frames.setdefault(f.seq, f)
    return [frames[s] for s in sorted(frames)], False


def reconstruct(frames: list[WireFrame], got_end: bool, slot_width: int = DEFAULT_SLOT_WIDTH,
                cfg: CadenceConfig = DEFAULT_CADENCE) -> ClientResult:
    """Turn collected frames into a key and plaintext, raising on any failure."""
    frames = sorted(frames, key=lambda f: f.seq)
    result = ClientResult(frames=frames, got_end=got_end)
    if len(frames) < KEY_PACKETS:
        raise IncompleteKeyError(len(frames), KEY_PACKETS)
    result.slots = decode_slots([f.tx_timestamp for f in frames[:KEY_PACKETS]], slot_width, cfg)
    for i, s in enumerate(result.slots):
        if not 0 <= s <= 255:
            raise SlotOutOfRangeError(i, s, result.slots)
    result.key = Key256(bytes(result.slots))
    try:
        payload = unchunk([f.payload for f in frames if f.payload])
        result.plaintext = decrypt(payload, result.key)
    except (FramingError, DecryptionError) as exc:
        if not got_end:
            raise IncompleteTransferError(f"transfer ended early: {exc}") from None
        raise DecryptionError(str(exc)) from None
    return result


def client(connect: str | tuple[str, int], position, output_path=None, timeout: float = QUIET_TIMEOUT,
           slot_width: int = DEFAULT_SLOT_WIDTH, cfg: CadenceConfig = DEFAULT_CADENCE) -> ClientResult:
    """Connect, announce ``position``, receive, decode the key, decrypt, and write the output."""
    host, port = parse_endpoint(connect) if isinstance(connect, str) else connect
    position = Point3.of(position)
    with socket.create_connection((host, port), timeout=timeout) as sock:
        sock.sendall(encode_frame(hello_frame(position)))
        frames, got_end = receive_frames(sock, timeout)
    result = reconstruct(frames, got_end, slot_width, cfg)
    if output_path is not None:
        with open(output_path, "wb") as fh:
            fh.write(result.plaintext)
    return result
