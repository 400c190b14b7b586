"""uTP (micro transport protocol) packet header: model and 20-byte wire codec.

Layout, all multi-byte fields big-endian::

    0       4       8               16              24              32
    +-------+-------+---------------+---------------+---------------+
    | type  | ver   | extension     | connection_id                 |
    +-------+-------+---------------+---------------+---------------+
    | timestamp_microseconds                                        |
    +---------------+---------------+---------------+---------------+
    | timestamp_difference_microseconds                             |
    +---------------+---------------+---------------+---------------+
    | wnd_size                                                      |
    +---------------+---------------+---------------+---------------+
    | seq_nr                        | ack_nr                        |
    +---------------+---------------+---------------+---------------+

``timestamp_microseconds`` is treated as a free-running counter that wraps
at 2**32; use :func:`wrap_compare` (serial-number arithmetic) to order two
values of it.
"""
from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

from .errors import (
    DomainError,
    MalformedLengthError,
    UnknownTypeError,
    UnsupportedVersionError,
)

__all__ = [
    "HEADER_SIZE",
    "UTP_VERSION",
    "PacketType",
    "MutpHeader",
    "encode_header",
    "decode_header",
    "wrap_compare",
    "wrap_offset",
]

UTP_VERSION = 1
HEADER_SIZE = 20
TS_MODULUS = 1 << 32
_HALF = 1 << 31

# B: type<<4 | ver, B: extension, H: connection_id, I x3, H: seq_nr, H: ack_nr
_FMT = struct.Struct("!BBHIIIHH")
assert _FMT.size == HEADER_SIZE


class PacketType(enum.IntEnum):
    DATA = 0
    FIN = 1
    STATE = 2
    RESET = 3
    SYN = 4


_LIMITS = {
    "extension": 0xFF,
    "connection_id": 0xFFFF,
    "timestamp_microseconds": 0xFFFFFFFF,
    "timestamp_difference_microseconds": 0xFFFFFFFF,
    "wnd_size": 0xFFFFFFFF,
    "seq_nr": 0xFFFF,
    "ack_nr": 0xFFFF,
}


@dataclass(frozen=True)
class MutpHeader:
    ptype: PacketType = PacketType.DATA
    connection_id: int = 0
    timestamp_microseconds: int = 0
    timestamp_difference_microseconds: int = 0
    wnd_size: int = 0
    seq_nr: int = 0
    ack_nr: int = 0
    extension: int = 0
    version: int = UTP_VERSION

    def __post_init__(self):
        if self.version != UTP_VERSION:
            raise UnsupportedVersionError(f"uTP version {self.version} is not supported")
        try:
            object.__setattr__(self, "ptype", PacketType(self.ptype))
        except ValueError:
            raise UnknownTypeError(f"unknown packet type {self.ptype!r}") from None
        for name, limit in _LIMITS.items():
            value = getattr(self, name)
            if not isinstance(value, int) or not 0 <= value <= limit:
                raise DomainError(f"{name}={value!r} outside [0, {limit}]")

    def replace(self, **changes) -> "MutpHeader":
        fields = {name: getattr(self, name) for name in self.__dataclass_fields__}
        fields.update(changes)
        return MutpHeader(**fields)


def encode_header(h: MutpHeader) -> bytes:
    return _FMT.pack(
        (int(h.ptype) << 4) | h.version,
        h.extension,
        h.connection_id,
        h.timestamp_microseconds,
        h.timestamp_difference_microseconds,
        h.wnd_size,
        h.seq_nr,
        h.ack_nr,
    )


def decode_header(b: bytes) -> MutpHeader:
    """Parse a 20-byte header.

    Raises MalformedLengthError, UnsupportedVersionError or UnknownTypeError.
    The extension byte is preserved but extension payloads are not parsed.
    """
    if len(b) != HEADER_SIZE:
        raise MalformedLengthError(f"uTP header must be {HEADER_SIZE} bytes, got {len(b)}")
    type_ver, ext, conn, ts, ts_diff, wnd, seq, ack = _FMT.unpack(bytes(b))
    version = type_ver & 0x0F
    ptype = type_ver >> 4
    if version != UTP_VERSION:
        raise UnsupportedVersionError(f"uTP version {version} is not supported")
    if ptype > max(PacketType):
        raise UnknownTypeError(f"unknown packet type {ptype}")
    return MutpHeader(
        ptype=PacketType(ptype),
        connection_id=conn,
        timestamp_microseconds=ts,
        timestamp_difference_microseconds=ts_diff,
        wnd_size=wnd,
        seq_nr=seq,
        ack_nr=ack,
        extension=ext,
    )


def wrap_offset(ts_a: int, ts_b: int) -> int:
    """Signed distance from ``ts_a`` to ``ts_b`` on the 32-bit circle."""
    d = (ts_b - ts_a) % TS_MODULUS
    return d - TS_MODULUS if d >= _HALF else d


def wrap_compare(ts_a: int, ts_b: int) -> int:
    """Order two wrapping timestamps: -1 if a precedes b, 0 if equal, 1 if after.

    Valid while the true distance is below 2**31 microseconds.
    """
    d = (ts_b - ts_a) % TS_MODULUS
    if d == 0:
        return 0
    return -1 if d < _HALF else 1
