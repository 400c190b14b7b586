"""Receiver side: rebuild the send order and read the packages back.

Pipeline: :func:`restore_order` (drop retransmitted copies, sort by
``timestamp_microseconds``) -> :func:`extract_symbols` (runs of odd length to
package IPs are symbols, even runs and X traffic are skipped) ->
:func:`decode_bits`.  :func:`extract` runs all three.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import lehmer
from .errors import AmbiguousOrderError, DomainError, OutOfCodebookError, PackageCorruptionError
from .mutp import TS_MODULUS
from .packets import DataPackage, PacketBatch, PacketEvent

__all__ = [
    "ReceivedStream",
    "SymbolExtraction",
    "ExtractionReport",
    "restore_order",
    "extract_symbols",
    "decode_bits",
    "extract",
]


@dataclass
class ReceivedStream:
    packets: PacketBatch
    pkg: DataPackage

    def __post_init__(self):
        if not isinstance(self.packets, PacketBatch):
            self.packets = PacketBatch.from_events(self.packets, self.pkg.ips)


@dataclass
class SymbolExtraction:
    packages: list
    tail: tuple
    even_runs: int = 0
    x_packets: int = 0
    # one packet per symbol; the rest of an odd run is an even filler
    packets_in_packages: int = 0
    # stream position of the first packet of each closed package
    package_starts: list = field(default_factory=list)


@dataclass
class ExtractionReport:
    bits: str
    packages_decoded: int
    symbols_discarded_even_runs: int
    packets_out_of_package: int
    incomplete_tail: tuple = ()
    packages: list = field(default_factory=list)
    packets_total: int = 0
    packets_in_packages: int = 0
    duplicates_dropped: int = 0


def _dedup_index(batch: PacketBatch) -> np.ndarray:
    """Indices of unique packets, keeping the first arrival of each copy.

    Copies are identified by (connection_id, seq_nr, timestamp_microseconds);
    seq_nr alone wraps within long sessions.
    """
    if len(batch) == 0:
        return np.zeros(0, np.int64)
    key = (
        (batch.conn_id.astype(np.uint64) << np.uint64(48))
        | (batch.seq_nr.astype(np.uint64) << np.uint64(32))
        | batch.timestamp_us.astype(np.uint64)
    )
    by_arrival = np.argsort(batch.arrival_us, kind="stable")
    _, first = np.unique(key[by_arrival], return_index=True)
    return np.sort(by_arrival[first])


def _order_index(batch: PacketBatch) -> np.ndarray:
    keep = _dedup_index(batch)
    if len(keep) == 0:
        return keep
    ts = batch.timestamp_us[keep]
    ref = ts[np.argmin(batch.arrival_us[keep])]
    rel = (ts - ref) % TS_MODULUS
    rel = np.where(rel >= TS_MODULUS // 2, rel - TS_MODULUS, rel)
    order = np.argsort(rel, kind="stable")
    ties = np.flatnonzero(np.diff(rel[order]) == 0)
    if len(ties):
        t = int(ts[order[ties[0]]])
        raise AmbiguousOrderError(t, int(np.sum(ts == t)))
    return keep[order]


def restore_order(stream):
    """Deduplicate retransmissions and sort by wrapping timestamp.

    Accepts a ReceivedStream, a PacketBatch or a list of PacketEvent and
    returns the same kind of container (a PacketBatch for ReceivedStream).
    The result does not depend on arrival order.
    """
    if isinstance(stream, ReceivedStream):
        stream = stream.packets
    if isinstance(stream, PacketBatch):
        return stream.take(_order_index(stream))
    events = list(stream)
    batch = PacketBatch.from_events(events)
    return [events[i] for i in _order_index(batch)]


def _symbols_of(ordered, pkg: DataPackage) -> np.ndarray:
    if isinstance(ordered, PacketBatch):
        table = np.array([pkg.symbol_of(ip) for ip in ordered.ips] or [-1], np.int64)
        return table[ordered.dest] if len(ordered) else np.zeros(0, np.int64)
    index = {ip: i for i, ip in enumerate(pkg.ips)}
    out = []
    for item in ordered:
        ip = item.dest_ip if isinstance(item, PacketEvent) else str(item)
        out.append(index.get(ip, -1))
    return np.asarray(out, np.int64)


def extract_symbols(ordered, pkg: DataPackage) -> SymbolExtraction:
    """Apply the run-parity rule to a timestamp-ordered stream.

    ``ordered`` may be a PacketBatch, a list of PacketEvent, or a plain
    sequence of destination IP labels.  X packets (IPs outside the package)
    separate runs but never join two runs of the same IP.  A package closes
    once ``pkg.size`` distinct symbols are collected.
    """
    syms = _symbols_of(ordered, pkg)
    n = pkg.size
    if len(syms) == 0:
        return SymbolExtraction([], ())
    starts = np.flatnonzero(np.r_[True, syms[1:] != syms[:-1]])
    lengths = np.diff(np.r_[starts, len(syms)])
    run_syms = syms[starts]
    inside = run_syms >= 0
    x_packets = int(lengths[~inside].sum())
    even_runs = int(np.sum(inside & (lengths % 2 == 0)))
    odd = inside & (lengths % 2 == 1)

    packages = []
    package_starts = []
    current = []
    for pos, s in zip(starts[odd].tolist(), run_syms[odd].tolist()):
        if s in current:
            raise PackageCorruptionError(pkg.ips[s], pos, len(packages))
        if not current:
            package_starts.append(pos)
        current.append(s)
        if len(current) == n:
            packages.append(tuple(current))
            current = []
    if current:
        package_starts.pop()
    return SymbolExtraction(
        packages=packages,
        tail=tuple(current),
        even_runs=even_runs,
        x_packets=x_packets,
        packets_in_packages=n * len(packages),
        package_starts=package_starts,
    )


def decode_bits(packages: Sequence[Sequence[int]], n: int) -> str:
    """Concatenate the bits of each package, in order.

    A package may be a permutation of ``0..n-1`` or ``n`` distinct pool
    indices, which are read by their relative order.
    """
    cap = lehmer.capacity_bits(n)
    out = []
    for i, symbols in enumerate(packages):
        if len(symbols) != n:
            raise DomainError(f"package {i} has {len(symbols)} symbols, expected {n}")
        r = lehmer.order_rank(symbols)
        if r >> cap:
            raise OutOfCodebookError(r, cap, i)
        out.append(format(r, f"0{cap}b"))
    return "".join(out)


def extract(stream: ReceivedStream) -> ExtractionReport:
    batch = stream.packets
    ordered = restore_order(batch)
    found = extract_symbols(ordered, stream.pkg)
    bits = decode_bits(found.packages, stream.pkg.size)
    return ExtractionReport(
        bits=bits,
        packages_decoded=len(found.packages),
        symbols_discarded_even_runs=found.even_runs,
        packets_out_of_package=found.x_packets,
        incomplete_tail=found.tail,
        packages=found.packages,
        packets_total=len(ordered),
        packets_in_packages=found.packets_in_packages,
        duplicates_dropped=len(batch) - len(ordered),
    )
