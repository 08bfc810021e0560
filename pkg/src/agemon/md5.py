"""MD5 message digest (RFC 1321), pure Python.

Models the hash the self-test firmware computes on-device to verify memory
contents. Not for cryptographic use.
"""

from __future__ import annotations

import math
import struct

_S = (
    [7, 12, 17, 22] * 4
    + [5, 9, 14, 20] * 4
    + [4, 11, 16, 23] * 4
    + [6, 10, 15, 21] * 4
)
_T = [int(abs(math.sin(i + 1)) * 2**32) & 0xFFFFFFFF for i in range(64)]

_INIT = (0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476)


def _rotl(x: int, c: int) -> int:
    return ((x << c) | (x >> (32 - c))) & 0xFFFFFFFF


def md5_digest(message: bytes) -> bytes:
    """16-byte MD5 digest of ``message``."""
    length = len(message)
    padded = message + b"\x80"
    padded += b"\x00" * ((56 - len(padded) % 64) % 64)
    padded += struct.pack("<Q", (length * 8) & 0xFFFFFFFFFFFFFFFF)

    a0, b0, c0, d0 = _INIT
    for offset in range(0, len(padded), 64):
        block = struct.unpack("<16I", padded[offset : offset + 64])
        a, b, c, d = a0, b0, c0, d0
        for i in range(64):
            if i < 16:
                f = (b & c) | (~b & d)
                g = i
            elif i < 32:
                f = (d & b) | (~d & c)
                g = (5 * i + 1) % 16
            elif i < 48:
                f = b ^ c ^ d
                g = (3 * i + 5) % 16
            else:
                f = c ^ (b | ~d)
                g = (7 * i) % 16
            rotated = _rotl((a + f + _T[i] + block[g]) & 0xFFFFFFFF, _S[i])
            a, d, c, b = d, c, b, (b + rotated) & 0xFFFFFFFF
        a0 = (a0 + a) & 0xFFFFFFFF
        b0 = (b0 + b) & 0xFFFFFFFF
        c0 = (c0 + c) & 0xFFFFFFFF
        d0 = (d0 + d) & 0xFFFFFFFF

    return struct.pack("<4I", a0, b0, c0, d0)


def md5_hex(message: bytes) -> str:
    """Lowercase hex MD5 digest of ``message``."""
    return md5_digest(message).hex()
