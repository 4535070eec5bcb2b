"""secp256k1 group arithmetic and deterministic ECDSA signing.

Affine coordinates with fast modular inversion via gmpy2 when present
(plain ``pow`` is two orders of magnitude slower on some interpreters).
Base-point multiplication uses a precomputed table of doublings of G, which
keeps per-sale public derivation under a millisecond.

Signing is RFC 6979 deterministic ECDSA with low-S normalization, DER
encoded. Verification is deliberately NOT implemented here: the simulated
chain validates signatures through an unrelated backend so that a broken
signer cannot vouch for itself.
"""

from __future__ import annotations

import hashlib
import hmac

P = 2**256 - 2**32 - 977
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
GX = 0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798
GY = 0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8

Point = tuple[int, int]  # affine; the identity is represented as None

try:
    from gmpy2 import invert as _inv, mpz as _mpz, powmod as _powmod
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _powmod = pow

    def _mpz(v: int) -> int:
        return v

    def _inv(a: int, m: int) -> int:
        return pow(a, m - 2, m)


_P = _mpz(P)  # mpz-typed modulus keeps the hot path on fast arithmetic


class InvalidPoint(ValueError):
    pass


def point_add(a: Point | None, b: Point | None) -> Point | None:
    if a is None:
        return b
    if b is None:
        return a
    ax, ay = a
    bx, by = b
    if ax == bx:
        if (ay + by) % _P == 0:
            return None
        lam = (3 * ax * ax) * _inv(2 * ay, _P) % _P
    else:
        lam = (by - ay) * _inv((bx - ax) % _P, _P) % _P
    x = (lam * lam - ax - bx) % _P
    return (x, (lam * (ax - x) - ay) % _P)


def point_mul(k: int, point: Point) -> Point | None:
    """Generic double-and-add; use mul_g for the base point."""
    k %= N
    acc: Point | None = None
    addend: Point | None = point
    while k:
        if k & 1:
            acc = point_add(acc, addend)
        addend = point_add(addend, addend)
        k >>= 1
    return acc


def _build_g_windows() -> list[list[Point | None]]:
    """64 rows of [None, v*base .. 15*base] with base = 2^(4*row) * G."""
    rows: list[list[Point | None]] = []
    base: Point = (_mpz(GX), _mpz(GY))
    for _ in range(64):
        row: list[Point | None] = [None, base]
        for _ in range(14):
            row.append(point_add(row[-1], base))
        rows.append(row)
        for _ in range(4):
            base = point_add(base, base)  # type: ignore[assignment]
    return rows


_G_WINDOWS = _build_g_windows()


def mul_g(k: int) -> Point | None:
    """k*G via 4-bit fixed windows over a precomputed table."""
    k %= N
    acc: Point | None = None
    row = 0
    while k:
        nibble = k & 15
        if nibble:
            acc = point_add(acc, _G_WINDOWS[row][nibble])
        k >>= 4
        row += 1
    return acc


def is_on_curve(point: Point) -> bool:
    x, y = point
    return 0 <= x < P and 0 <= y < P and (y * y - (x * x * x + 7)) % P == 0


def compress(point: Point) -> bytes:
    x, y = point
    return bytes([2 | (int(y) & 1)]) + int(x).to_bytes(32, "big")


def decompress(data: bytes) -> Point:
    if len(data) != 33 or data[0] not in (2, 3):
        raise InvalidPoint("expected a 33-byte compressed point")
    x = int.from_bytes(data[1:], "big")
    if x >= P:
        raise InvalidPoint("x out of field range")
    y_sq = (x * x * x + 7) % P
    y = int(_powmod(y_sq, (P + 1) // 4, P))
    if y * y % P != y_sq:
        raise InvalidPoint("not a quadratic residue; point not on curve")
    if (y & 1) != (data[0] & 1):
        y = P - y
    return (_mpz(x), _mpz(y))


def pubkey_for(priv: int) -> bytes:
    if not 1 <= priv < N:
        raise ValueError("private scalar out of range")
    return compress(mul_g(priv))  # type: ignore[arg-type]


# --- deterministic ECDSA (RFC 6979, SHA-256) ---


def _rfc6979_nonce(priv: int, digest: bytes) -> int:
    h1 = int.from_bytes(digest, "big") % N
    key_bytes = priv.to_bytes(32, "big") + h1.to_bytes(32, "big")
    v = b"\x01" * 32
    k = b"\x00" * 32
    k = hmac.new(k, v + b"\x00" + key_bytes, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    k = hmac.new(k, v + b"\x01" + key_bytes, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    while True:
        v = hmac.new(k, v, hashlib.sha256).digest()
        candidate = int.from_bytes(v, "big")
        if 1 <= candidate < N:
            return candidate
        k = hmac.new(k, v + b"\x00", hashlib.sha256).digest()
        v = hmac.new(k, v, hashlib.sha256).digest()


def sign_digest(priv: int, digest: bytes) -> tuple[int, int]:
    """Sign a 32-byte digest; returns (r, s) with s normalized to the low half."""
    if len(digest) != 32:
        raise ValueError("digest must be 32 bytes")
    if not 1 <= priv < N:
        raise ValueError("private scalar out of range")
    z = int.from_bytes(digest, "big") % N
    while True:
        k = _rfc6979_nonce(priv, digest)
        point = mul_g(k)
        assert point is not None
        r = int(point[0]) % N
        if r == 0:
            digest = hashlib.sha256(digest).digest()
            continue
        s = _inv(k, N) * (z + r * priv) % N
        if s == 0:
            digest = hashlib.sha256(digest).digest()
            continue
        if s > N // 2:
            s = N - s
        return r, s


def der_encode(r: int, s: int) -> bytes:
    def _int(v: int) -> bytes:
        raw = v.to_bytes((v.bit_length() + 7) // 8 or 1, "big")
        if raw[0] & 0x80:
            raw = b"\x00" + raw
        return bytes([0x02, len(raw)]) + raw

    body = _int(r) + _int(s)
    return bytes([0x30, len(body)]) + body


def der_decode(sig: bytes) -> tuple[int, int]:
    if len(sig) < 8 or sig[0] != 0x30 or sig[1] != len(sig) - 2:
        raise ValueError("malformed DER signature")
    if sig[2] != 0x02:
        raise ValueError("malformed DER signature")
    rlen = sig[3]
    r = int.from_bytes(sig[4 : 4 + rlen], "big")
    idx = 4 + rlen
    if idx + 2 > len(sig) or sig[idx] != 0x02:
        raise ValueError("malformed DER signature")
    slen = sig[idx + 1]
    if idx + 2 + slen != len(sig):
        raise ValueError("malformed DER signature")
    s = int.from_bytes(sig[idx + 2 :], "big")
    return r, s


def is_low_s(sig: bytes) -> bool:
    try:
        _, s = der_decode(sig)
    except ValueError:
        return False
    return 1 <= s <= N // 2
