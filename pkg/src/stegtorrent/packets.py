"""Packet records shared by the sender, channel and receiver.

Two views of the same data exist.  :class:`PacketEvent` is one packet as an
object, convenient for hand-built streams and tests.  :class:`PacketBatch`
holds a whole stream as numpy columns and is what the sender, channel and
receiver actually operate on; sessions of half a million packets would be
far too slow as Python objects.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DomainError
from .mutp import MutpHeader, PacketType

__all__ = ["DEFAULT_WND_SIZE", "DataPackage", "PacketEvent", "PacketBatch"]

# Header fields the trace format does not carry are filled with these.
DEFAULT_WND_SIZE = 0x00038400

MIN_PACKAGE = 2
MAX_PACKAGE = 6


@dataclass(frozen=True)
class DataPackage:
    """Shared secret between the two ends: an ordered pool of receiver IPs.

    ``ips`` fixes the symbol index of each receiver.  ``size`` is the number
    of distinct IPs forming one package; it defaults to ``len(ips)``.  With a
    larger pool each package uses ``size`` of the pool's IPs and carries its
    bits in their relative order.
    """

    ips: tuple
    size: Optional[int] = None

    def __post_init__(self):
        ips = tuple(str(ip) for ip in self.ips)
        object.__setattr__(self, "ips", ips)
        if self.size is None:
            object.__setattr__(self, "size", len(ips))
        if len(set(ips)) != len(ips):
            raise DomainError("data package IPs must be distinct")
        if not MIN_PACKAGE <= self.size <= MAX_PACKAGE:
            raise DomainError(
                f"package size must be in [{MIN_PACKAGE}, {MAX_PACKAGE}], got {self.size}"
            )
        if len(ips) < self.size:
            raise DomainError(f"{len(ips)} IPs cannot form packages of size {self.size}")

    @property
    def n(self) -> int:
        return self.size

    def symbol_of(self, ip) -> int:
        """Pool index of ``ip``, or -1 for traffic outside the package."""
        try:
            return self.ips.index(str(ip))
        except ValueError:
            return -1


@dataclass(frozen=True)
class PacketEvent:
    dest_ip: str
    header: MutpHeader
    send_time_us: int
    is_retransmit: bool = False
    arrival_time_us: Optional[int] = None


def _col(values, dtype=np.int64):
    return np.ascontiguousarray(values, dtype=dtype)


@dataclass
class PacketBatch:
    """Columnar packet stream.  ``dest`` indexes into ``ips``.

    ``arrival_us`` is -1 for packets that have not crossed a channel yet.
    """

    ips: tuple
    dest: np.ndarray
    conn_id: np.ndarray
    seq_nr: np.ndarray
    timestamp_us: np.ndarray
    send_us: np.ndarray
    arrival_us: np.ndarray = None
    retransmit: np.ndarray = None
    ptype: np.ndarray = None

    def __post_init__(self):
        self.ips = tuple(self.ips)
        self.dest = _col(self.dest)
        n = len(self.dest)
        self.conn_id = _col(self.conn_id)
        self.seq_nr = _col(self.seq_nr)
        self.timestamp_us = _col(self.timestamp_us)
        self.send_us = _col(self.send_us)
        self.arrival_us = _col(np.full(n, -1) if self.arrival_us is None else self.arrival_us)
        self.retransmit = _col(
            np.zeros(n, bool) if self.retransmit is None else self.retransmit, bool
        )
        self.ptype = _col(
            np.full(n, int(PacketType.DATA)) if self.ptype is None else self.ptype, np.uint8
        )
        for name in ("conn_id", "seq_nr", "timestamp_us", "send_us", "arrival_us",
                     "retransmit", "ptype"):
            if len(getattr(self, name)) != n:
                raise DomainError(f"column {name} has length {len(getattr(self, name))}, expected {n}")

    def __len__(self):
        return len(self.dest)

    def take(self, idx) -> "PacketBatch":
        return PacketBatch(
            self.ips, self.dest[idx], self.conn_id[idx], self.seq_nr[idx],
            self.timestamp_us[idx], self.send_us[idx], self.arrival_us[idx],
            self.retransmit[idx], self.ptype[idx],
        )

    @property
    def dest_ips(self) -> list:
        return [self.ips[d] for d in self.dest]

    def equals(self, other: "PacketBatch") -> bool:
        if self.dest_ips != other.dest_ips:
            return False
        return all(
            np.array_equal(getattr(self, c), getattr(other, c))
            for c in ("conn_id", "seq_nr", "timestamp_us", "send_us", "arrival_us",
                      "retransmit", "ptype")
        )

    def events(self) -> list:
        out = []
        for i in range(len(self)):
            header = MutpHeader(
                ptype=PacketType(int(self.ptype[i])),
                connection_id=int(self.conn_id[i]),
                timestamp_microseconds=int(self.timestamp_us[i]),
                wnd_size=DEFAULT_WND_SIZE,
                seq_nr=int(self.seq_nr[i]),
            )
            arrival = int(self.arrival_us[i])
            out.append(PacketEvent(
                dest_ip=self.ips[self.dest[i]],
                header=header,
                send_time_us=int(self.send_us[i]),
                is_retransmit=bool(self.retransmit[i]),
                arrival_time_us=None if arrival < 0 else arrival,
            ))
        return out

    @classmethod
    def from_events(cls, events: Iterable[PacketEvent], ips: Sequence[str] = ()) -> "PacketBatch":
        """Build a batch; ``ips`` seeds the lookup table (extra IPs are appended)."""
        events = list(events)
        table = list(dict.fromkeys(str(ip) for ip in ips))
        index = {ip: i for i, ip in enumerate(table)}
        dest = []
        for ev in events:
            ip = str(ev.dest_ip)
            if ip not in index:
                index[ip] = len(table)
                table.append(ip)
            dest.append(index[ip])
        return cls(
            ips=tuple(table),
            dest=dest,
            conn_id=[ev.header.connection_id for ev in events],
            seq_nr=[ev.header.seq_nr for ev in events],
            timestamp_us=[ev.header.timestamp_microseconds for ev in events],
            send_us=[ev.send_time_us for ev in events],
            arrival_us=[-1 if ev.arrival_time_us is None else ev.arrival_time_us for ev in events],
            retransmit=[ev.is_retransmit for ev in events],
            ptype=[int(ev.header.ptype) for ev in events],
        )

    @classmethod
    def empty(cls, ips=()) -> "PacketBatch":
        z = np.zeros(0, np.int64)
        return cls(tuple(ips), z, z, z, z, z)
