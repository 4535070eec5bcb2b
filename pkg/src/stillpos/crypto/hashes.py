"""Hash primitives: sha256, double-sha256, ripemd160, hash160.

OpenSSL 3 ships without ripemd160 in the default provider, so hashlib may
or may not have it; we carry a small pure-python implementation and use
the native one when available.
"""

from __future__ import annotations

import hashlib
import struct


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def sha256d(data: bytes) -> bytes:
    return hashlib.sha256(hashlib.sha256(data).digest()).digest()


def hash160(data: bytes) -> bytes:
    """RIPEMD160(SHA256(data)) — the bitcoin address hash."""
    return ripemd160(sha256(data))


try:
    hashlib.new("ripemd160", b"")
    _HAVE_NATIVE_RIPEMD = True
except ValueError:
    _HAVE_NATIVE_RIPEMD = False


def ripemd160(data: bytes) -> bytes:
    if _HAVE_NATIVE_RIPEMD:
        return hashlib.new("ripemd160", data).digest()
    return _ripemd160_pure(data)


# Pure-python RIPEMD-160 (Dobbertin/Bosselaers/Preneel). Message schedule,
# rotations and round constants as published; processes 64-byte blocks.

_PERM = [
    [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15],
    [7, 4, 13, 1, 10, 6, 15, 3, 12, 0, 9, 5, 2, 14, 11, 8],
    [3, 10, 14, 4, 9, 15, 8, 1, 2, 7, 0, 6, 13, 11, 5, 12],
    [1, 9, 11, 10, 0, 8, 12, 4, 13, 3, 7, 15, 14, 5, 6, 2],
    [4, 0, 5, 9, 7, 12, 2, 10, 14, 1, 3, 8, 11, 6, 15, 13],
]
_PERM_P = [
    [5, 14, 7, 0, 9, 2, 11, 4, 13, 6, 15, 8, 1, 10, 3, 12],
    [6, 11, 3, 7, 0, 13, 5, 10, 14, 15, 8, 12, 4, 9, 1, 2],
    [15, 5, 1, 3, 7, 14, 6, 9, 11, 8, 12, 2, 10, 0, 4, 13],
    [8, 6, 4, 1, 3, 11, 15, 0, 5, 12, 2, 13, 9, 7, 10, 14],
    [12, 15, 10, 4, 1, 5, 8, 7, 6, 2, 13, 14, 0, 3, 9, 11],
]
_SHIFT = [
    [11, 14, 15, 12, 5, 8, 7, 9, 11, 13, 14, 15, 6, 7, 9, 8],
    [7, 6, 8, 13, 11, 9, 7, 15, 7, 12, 15, 9, 11, 7, 13, 12],
    [11, 13, 6, 7, 14, 9, 13, 15, 14, 8, 13, 6, 5, 12, 7, 5],
    [11, 12, 14, 15, 14, 15, 9, 8, 9, 14, 5, 6, 8, 6, 5, 12],
    [9, 15, 5, 11, 6, 8, 13, 12, 5, 12, 13, 14, 11, 8, 5, 6],
]
_SHIFT_P = [
    [8, 9, 9, 11, 13, 15, 15, 5, 7, 7, 8, 11, 14, 14, 12, 6],
    [9, 13, 15, 7, 12, 8, 9, 11, 7, 7, 12, 7, 6, 15, 13, 11],
    [9, 7, 15, 11, 8, 6, 6, 14, 12, 13, 5, 14, 13, 13, 7, 5],
    [15, 5, 8, 11, 14, 14, 6, 14, 6, 9, 12, 9, 12, 5, 15, 8],
    [8, 5, 12, 9, 12, 5, 14, 6, 8, 13, 6, 5, 15, 13, 11, 11],
]
_K = [0x00000000, 0x5A827999, 0x6ED9EBA1, 0x8F1BBCDC, 0xA953FD4E]
_K_P = [0x50A28BE6, 0x5C4DD124, 0x6D703EF3, 0x7A6D76E9, 0x00000000]

_MASK = 0xFFFFFFFF

_F0 = lambda x, y, z: x ^ y ^ z  # noqa: E731 (round functions read best inline)
_F1 = lambda x, y, z: (x & y) | (~x & z)  # noqa: E731
_F2 = lambda x, y, z: (x | ~y) ^ z  # noqa: E731
_F3 = lambda x, y, z: (x & z) | (y & ~z)  # noqa: E731
_F4 = lambda x, y, z: x ^ (y | ~z)  # noqa: E731
_FUNCS = (_F0, _F1, _F2, _F3, _F4)

# flattened 80-step schedules: (f, word index, shift, constant)
_LEFT_STEPS = tuple(
    (_FUNCS[rnd], _PERM[rnd][i], _SHIFT[rnd][i], _K[rnd])
    for rnd in range(5)
    for i in range(16)
)
_RIGHT_STEPS = tuple(
    (_FUNCS[4 - rnd], _PERM_P[rnd][i], _SHIFT_P[rnd][i], _K_P[rnd])
    for rnd in range(5)
    for i in range(16)
)
_SCHEDULE = tuple(zip(_LEFT_STEPS, _RIGHT_STEPS))


def _ripemd160_pure(message: bytes) -> bytes:
    h = [0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476, 0xC3D2E1F0]
    bit_len = len(message) * 8
    message += b"\x80"
    message += b"\x00" * ((56 - len(message) % 64) % 64)
    message += bit_len.to_bytes(8, "little")

    for off in range(0, len(message), 64):
        words = struct.unpack_from("<16I", message, off)
        a, b, c, d, e = h
        ap, bp, cp, dp, ep = h
        for (f, w, s, k), (fp, wp, sp, kp) in _SCHEDULE:
            t = (a + f(b, c, d) + words[w] + k) & _MASK
            t = (((t << s) | (t >> (32 - s))) + e) & _MASK
            c10 = ((c << 10) | (c >> 22)) & _MASK
            a, e, d, c, b = e, d, c10, b, t
            t = (ap + fp(bp, cp, dp) + words[wp] + kp) & _MASK
            t = (((t << sp) | (t >> (32 - sp))) + ep) & _MASK
            cp10 = ((cp << 10) | (cp >> 22)) & _MASK
            ap, ep, dp, cp, bp = ep, dp, cp10, bp, t
        t = (h[1] + c + dp) & _MASK
        h[1] = (h[2] + d + ep) & _MASK
        h[2] = (h[3] + e + ap) & _MASK
        h[3] = (h[4] + a + bp) & _MASK
        h[4] = (h[0] + b + cp) & _MASK
        h[0] = t

    return b"".join(v.to_bytes(4, "little") for v in h)
