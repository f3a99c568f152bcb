"""Password hashing, AES-256-CBC payload encryption, and 800-byte blocking.

Serialized payload layout, big-endian::

    b"GLK1" | plain_len (u64) | iv (16 bytes) | ciphertext
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass

from cryptography.hazmat.primitives import padding
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .errors import DecryptionError, FramingError

PAYLOAD_MAGIC = b"GLK1"
HEADER = struct.Struct(">4sQ16s")
IV_SIZE = 16
AES_BLOCK = 16
BLOCK_SIZE = 800


@dataclass(frozen=True, eq=True)
class Key256:
    """A 32-byte AES key. ``repr`` never shows the bytes."""

    value: bytes

    def __post_init__(self):
        if len(self.value) != 32:
            raise ValueError(f"key must be exactly 32 bytes, got {len(self.value)}")

    def __repr__(self) -> str:
        return "Key256(<redacted>)"

    def __bytes__(self) -> bytes:
        return self.value

    def __len__(self) -> int:
        return 32

    def __getitem__(self, index):
        return self.value[index]

    def hex(self) -> str:
        return self.value.hex()

    @classmethod
    def fromhex(cls, text: str) -> "Key256":
        return cls(bytes.fromhex(text))


def derive_key(password: bytes | str) -> Key256:
    """SHA-256 of the password."""
    if isinstance(password, str):
        password = password.encode("utf-8")
    if not password:
        raise ValueError("password must be nonempty")
    return Key256(hashlib.sha256(password).digest())


@dataclass(frozen=True)
class CipherPayload:
    iv: bytes
    ciphertext: bytes
    plain_len: int

    def __post_init__(self):
        if len(self.iv) != IV_SIZE:
            raise ValueError("iv must be 16 bytes")
        n = len(self.ciphertext)
        if n < AES_BLOCK or n % AES_BLOCK:
            raise ValueError(f"ciphertext length {n} is not a positive multiple of 16")
        if not 0 <= self.plain_len <= n:
            raise ValueError(f"plain_len {self.plain_len} exceeds ciphertext length {n}")

    def to_bytes(self) -> bytes:
        return HEADER.pack(PAYLOAD_MAGIC, self.plain_len, self.iv) + self.ciphertext

    @classmethod
    def from_bytes(cls, data: bytes) -> "CipherPayload":
        if len(data) < HEADER.size:
            raise FramingError(f"payload truncated: {len(data)} bytes, header needs {HEADER.size}", len(data))
        magic, plain_len, iv = HEADER.unpack_from(data)
        if magic != PAYLOAD_MAGIC:
            raise FramingError(f"bad payload magic {magic!r}", 0)
        try:
            return cls(iv=iv, ciphertext=bytes(data[HEADER.size:]), plain_len=plain_len)
        except ValueError as exc:
            raise FramingError(str(exc), HEADER.size) from None


def encrypt(plain: bytes, key: Key256, iv: bytes | None = None) -> CipherPayload:
    """AES-256-CBC with PKCS#7 padding. A random IV is drawn when none is given."""
    if iv is None:
        iv = os.urandom(IV_SIZE)
    if len(iv) != IV_SIZE:
        raise ValueError("iv must be 16 bytes")
    padder = padding.PKCS7(128).padder()
    padded = padder.update(bytes(plain)) + padder.finalize()
    enc = Cipher(algorithms.AES(key.value), modes.CBC(iv)).encryptor()
    return CipherPayload(iv=iv, ciphertext=enc.update(padded) + enc.finalize(), plain_len=len(plain))


def decrypt(payload: CipherPayload, key: Key256, raw: bool = False) -> bytes:
    """Invert :func:`encrypt`.

    A wrong key shows up as a padding or length mismatch and raises
    :class:`DecryptionError`. ``raw=True`` skips those checks and returns the
    undecorated CBC output (noise, for a wrong key).
    """
    dec = Cipher(algorithms.AES(key.value), modes.CBC(payload.iv)).decryptor()
    padded = dec.update(payload.ciphertext) + dec.finalize()
    if raw:
        return padded
    unpadder = padding.PKCS7(128).unpadder()
    try:
        plain = unpadder.update(padded) + unpadder.finalize()
    except ValueError:
        raise DecryptionError("padding check failed: wrong key or corrupted ciphertext") from None
    if len(plain) != payload.plain_len:
        raise DecryptionError(f"decrypted length {len(plain)} does not match header {payload.plain_len}")
    return plain


def split_blocks(data: bytes, size: int = BLOCK_SIZE) -> list[bytes]:
    return [bytes(data[i:i + size]) for i in range(0, len(data), size)]


def join_blocks(blocks: list[bytes], size: int = BLOCK_SIZE) -> bytes:
    for i, block in enumerate(blocks):
        last = i == len(blocks) - 1
        if len(block) > size or (not last and len(block) != size) or (last and not block):
            raise FramingError(f"block {i} has length {len(block)}", i * size)
    return b"".join(blocks)


def chunk(payload: CipherPayload) -> list[bytes]:
    return split_blocks(payload.to_bytes())


def unchunk(blocks: list[bytes]) -> CipherPayload:
    return CipherPayload.from_bytes(join_blocks(blocks))
