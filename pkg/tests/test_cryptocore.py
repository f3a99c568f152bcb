import os

import pytest
from hypothesis import given, settings, strategies as st

from geolock.cryptocore import (
    BLOCK_SIZE,
    CipherPayload,
    Key256,
    chunk,
    decrypt,
    derive_key,
    encrypt,
    join_blocks,
    split_blocks,
    unchunk,
)
from geolock.errors import DecryptionError, FramingError

# FIPS 180-4 example "abc"; cross-checked with `openssl dgst -sha256`.
SHA256_ABC = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"

# NIST SP 800-38A, F.2.5 CBC-AES256.Encrypt; cross-checked with `openssl enc -aes-256-cbc -nopad`.
AES_KEY = bytes.fromhex("603deb1015ca71be2b73aef0857d77811f352c073b6108d72d9810a30914dff4")
AES_IV = bytes.fromhex("000102030405060708090a0b0c0d0e0f")
AES_PLAIN = bytes.fromhex(
    "6bc1bee22e409f96e93d7e117393172a"
    "ae2d8a571e03ac9c9eb76fac45af8e51"
    "30c81c46a35ce411e5fbc1191a0a52ef"
    "f69f2445df4f9b17ad2b417be66c3710"
)
AES_CIPHER = bytes.fromhex(
    "f58c4c04d6e5f1ba779eabfb5f7bfbd6"
    "9cfc4e967edb808d679f777bc6702c7d"
    "39f23369a9d9bacfa530e26304231461"
    "b2eb05e2c39be9fcda6c19078c6a9d1b"
)


def test_sha256_vector():
    assert derive_key(b"abc").hex() == SHA256_ABC
    assert derive_key("abc") == derive_key(b"abc")


def test_empty_password_rejected():
    with pytest.raises(ValueError):
        derive_key(b"")


def test_key_is_32_bytes_and_redacted():
    k = derive_key("hunter2")
    assert len(bytes(k)) == 32
    assert "hunter2" not in repr(k) and k.hex() not in repr(k)
    with pytest.raises(ValueError):
        Key256(b"short")


def test_aes_cbc_vector():
    payload = encrypt(AES_PLAIN, Key256(AES_KEY), AES_IV)
    # Four vector blocks, then one full PKCS#7 padding block.
    assert payload.ciphertext[:64] == AES_CIPHER
    assert len(payload.ciphertext) == 80
    assert decrypt(payload, Key256(AES_KEY)) == AES_PLAIN


@pytest.mark.parametrize("size, expected", [(0, 16), (32, 48), (15, 16), (16, 32)])
def test_padding_sizes(size, expected):
    assert len(encrypt(b"x" * size, derive_key("k")).ciphertext) == expected


def test_wrong_key_fails():
    key = derive_key("right")
    payload = encrypt(b"secret data" * 10, key)
    flipped = Key256(bytes([key[0] ^ 1]) + key[1:])
    try:
        out = decrypt(payload, flipped)
    except DecryptionError:
        return
    assert out != b"secret data" * 10


def test_raw_decrypt_returns_noise_for_wrong_key():
    payload = encrypt(b"a" * 64, derive_key("right"))
    raw = decrypt(payload, derive_key("wrong"), raw=True)
    assert len(raw) == 80 and raw[:64] != b"a" * 64


def test_tampered_ciphertext():
    key = derive_key("k")
    plain = os.urandom(100)
    p = encrypt(plain, key)
    ct = bytearray(p.ciphertext)
    ct[5] ^= 0x80
    tampered = CipherPayload(p.iv, bytes(ct), p.plain_len)
    try:
        assert decrypt(tampered, key) != plain
    except DecryptionError:
        pass


def test_serialization_layout():
    p = encrypt(b"hello", derive_key("k"), AES_IV)
    raw = p.to_bytes()
    assert raw[:4] == b"GLK1"
    assert int.from_bytes(raw[4:12], "big") == 5
    assert raw[12:28] == AES_IV
    assert CipherPayload.from_bytes(raw) == p


@pytest.mark.parametrize("raw", [b"GLK", b"XXXX" + bytes(40), b"GLK1" + bytes(24) + bytes(5)])
def test_bad_serialization(raw):
    with pytest.raises(FramingError):
        CipherPayload.from_bytes(raw)


@pytest.mark.parametrize("size, lengths", [(1600, [800, 800]), (801, [800, 1]), (0, [])])
def test_split_blocks(size, lengths):
    data = os.urandom(size)
    blocks = split_blocks(data)
    assert [len(b) for b in blocks] == lengths
    assert join_blocks(blocks) == data


def test_join_rejects_bad_sizes():
    with pytest.raises(FramingError):
        join_blocks([b"a" * 799, b"b"])
    with pytest.raises(FramingError):
        join_blocks([b"a" * 801])


def test_chunk_unchunk_one_mib():
    p = encrypt(os.urandom(1 << 20), derive_key("big"))
    blocks = chunk(p)
    assert all(len(b) == BLOCK_SIZE for b in blocks[:-1])
    assert unchunk(blocks) == p


@settings(max_examples=50)
@given(st.binary(max_size=5000), st.text(min_size=1, max_size=20))
def test_roundtrip_property(plain, password):
    key = derive_key(password)
    p = encrypt(plain, key)
    assert decrypt(unchunk(chunk(p)), key) == plain
