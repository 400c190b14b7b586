"""Sender side: turn secret bits into a packet schedule.

Each chunk of ``capacity_bits(n)`` secret bits selects a permutation, and the
permutation fixes the order in which the package IPs receive a *symbol run*
(an odd number of consecutive packets).  Any other packet to a package IP is
sent in an even-length run, and packets to other IPs are free.  Every packet
gets a timestamp strictly larger than the previous one, so the receiver can
rebuild the send order no matter how the network shuffles it.

Two builders are provided: :func:`build_schedule` generates its own cover
traffic from a :class:`CoverPlan`, and :func:`embed_in_cover` threads packages
greedily through an existing cover stream (used by the experiments).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import lehmer
from .errors import CapacityError, DomainError
from .mutp import TS_MODULUS
from .packets import DataPackage, PacketBatch
from .rng import generator, spaced_times

__all__ = [
    "RunPolicy",
    "CoverPlan",
    "SendSchedule",
    "pad_info",
    "build_schedule",
    "embed_in_cover",
    "bytes_to_bits",
    "bits_to_bytes",
]

_MAX_SPAN_US = (1 << 31) - 1


def bytes_to_bits(data: bytes) -> str:
    return "".join(format(b, "08b") for b in data)


def bits_to_bytes(bits: str) -> bytes:
    if len(bits) % 8:
        raise DomainError(f"{len(bits)} bits is not a whole number of bytes")
    return bytes(int(bits[i:i + 8], 2) for i in range(0, len(bits), 8))


def _bitstring(secret) -> str:
    bits = secret if isinstance(secret, str) else "".join(str(int(b)) for b in secret)
    if bits.strip("01"):
        raise DomainError("secret may only contain the bits 0 and 1")
    return bits


@dataclass(frozen=True)
class RunPolicy:
    symbol_run_length: int = 1
    filler_run_length: int = 2

    def __post_init__(self):
        if self.symbol_run_length < 1 or self.symbol_run_length % 2 == 0:
            raise DomainError("symbol_run_length must be a positive odd integer")
        if self.filler_run_length < 0 or self.filler_run_length % 2:
            raise DomainError("filler_run_length must be a non-negative even integer")


@dataclass(frozen=True)
class CoverPlan:
    """Cover traffic mixed into a schedule by :func:`build_schedule`.

    Before each symbol run, with probability ``x_prob`` a burst of 1 to
    ``x_burst_max`` packets goes to random ``x_ips`` (outside the package), and
    with probability ``filler_prob`` a filler run of 1 to ``filler_units_max``
    times the policy's filler length goes to some other package IP.
    """

    x_ips: tuple = ()
    x_prob: float = 0.0
    x_burst_max: int = 3
    filler_prob: float = 0.0
    filler_units_max: int = 2

    def __post_init__(self):
        object.__setattr__(self, "x_ips", tuple(str(ip) for ip in self.x_ips))
        for name in ("x_prob", "filler_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise DomainError(f"{name} must be a probability, got {p}")
        if self.x_burst_max < 1 or self.filler_units_max < 1:
            raise DomainError("burst sizes must be at least 1")


@dataclass
class SendSchedule:
    packets: PacketBatch
    package: DataPackage
    package_boundaries: list
    bits_embedded: int
    pad_bits: int = 0
    stats: dict = field(default_factory=dict)

    @property
    def entries(self) -> list:
        return self.packets.events()

    def __len__(self):
        return len(self.packets)


def pad_info(secret_len: int, n: int) -> tuple:
    """(package count, zero pad bits) needed to carry ``secret_len`` bits."""
    if secret_len <= 0:
        raise DomainError("secret must contain at least one bit")
    cap = lehmer.capacity_bits(n)
    count = -(-secret_len // cap)
    return count, count * cap - secret_len


def _connections(ips, dest, rng):
    """One uTP connection per destination: random distinct ids, running seq_nr."""
    k = len(ips)
    conn_of = rng.choice(1 << 16, size=k, replace=False)
    seq_start = rng.integers(0, 1 << 16, size=k)
    conn = conn_of[dest]
    seq = np.empty(len(dest), np.int64)
    for d in range(k):
        mask = dest == d
        seq[mask] = (seq_start[d] + np.arange(int(mask.sum()))) % (1 << 16)
    return conn, seq


def _finalize(ips, dest, send_us, rng, ts_origin) -> PacketBatch:
    dest = np.asarray(dest, np.int64)
    send_us = np.asarray(send_us, np.int64)
    if len(send_us) > 1:
        if np.any(np.diff(send_us) <= 0):
            raise DomainError("send times must be strictly increasing")
        if send_us[-1] - send_us[0] > _MAX_SPAN_US:
            raise DomainError("schedule spans more than 2**31 us; timestamps would alias")
    if ts_origin is None:
        ts_origin = int(rng.integers(0, TS_MODULUS))
    conn, seq = _connections(ips, dest, rng)
    ts = (int(ts_origin) + send_us) % TS_MODULUS
    return PacketBatch(ips=ips, dest=dest, conn_id=conn, seq_nr=seq, timestamp_us=ts, send_us=send_us)


def build_schedule(
    secret,
    pkg: DataPackage,
    policy: RunPolicy = RunPolicy(),
    cover: CoverPlan = CoverPlan(),
    rate_pps: float = 1350.0,
    seed: int = 0,
    ts_origin: Optional[int] = None,
) -> SendSchedule:
    """Encode ``secret`` (bit string) into a timestamped DATA packet schedule.

    The final chunk is zero-padded; the pad length is returned in
    ``pad_bits``.  Consecutive runs to the same package IP would merge at the
    receiver, so when two adjacent symbols collide the builder separates them
    with an X packet or a filler run, and raises CapacityError if the plan
    offers neither.
    """
    bits = _bitstring(secret)
    n = pkg.size
    count, pad = pad_info(len(bits), n)
    cap = lehmer.capacity_bits(n)
    bits = bits + "0" * pad

    if set(cover.x_ips) & set(pkg.ips):
        raise CapacityError("cover X IPs overlap the data package")
    if cover.x_prob > 0 and not cover.x_ips:
        raise CapacityError("cover plan asks for X traffic but lists no X IPs")
    if cover.filler_prob > 0 and policy.filler_run_length == 0:
        raise CapacityError("cover plan asks for filler runs but filler_run_length is 0")

    rng = generator(seed, "schedule")
    m = len(pkg.ips)
    x_base = m
    ips = pkg.ips + cover.x_ips
    dest = []
    boundaries = []
    last = None  # pool index of the last emitted run, None after X

    def emit_x():
        nonlocal last
        burst = int(rng.integers(1, cover.x_burst_max + 1))
        dest.extend(x_base + int(i) for i in rng.integers(0, len(cover.x_ips), size=burst))
        last = None

    def emit_filler(avoid):
        nonlocal last
        choices = [j for j in range(m) if j not in avoid]
        if not choices:
            return False
        j = choices[int(rng.integers(0, len(choices)))]
        units = int(rng.integers(1, cover.filler_units_max + 1))
        dest.extend([j] * (policy.filler_run_length * units))
        last = j
        return True

    for p in range(count):
        boundaries.append(len(dest))
        perm = lehmer.bits_to_permutation(bits[p * cap:(p + 1) * cap], n)
        if m > n:
            members = np.sort(rng.choice(m, size=n, replace=False))
            sequence = [int(members[v]) for v in perm]
        else:
            sequence = list(perm)
        for s in sequence:
            if cover.x_ips and rng.random() < cover.x_prob:
                emit_x()
            if policy.filler_run_length and rng.random() < cover.filler_prob:
                emit_filler({last, s})
            if last == s:
                if cover.x_ips:
                    emit_x()
                elif not (policy.filler_run_length and emit_filler({s})):
                    raise CapacityError(
                        "adjacent symbol runs to the same IP need X traffic or filler to separate them"
                    )
            dest.extend([s] * policy.symbol_run_length)
            last = s
    boundaries.append(len(dest))

    if rate_pps <= 0:
        raise DomainError("rate_pps must be positive")
    send_us = spaced_times(len(dest), rate_pps, rng)
    batch = _finalize(ips, dest, send_us, rng, ts_origin)
    return SendSchedule(batch, pkg, boundaries, count * cap, pad)


def embed_in_cover(
    cover,
    pkg: DataPackage,
    secret,
    seed: int = 0,
    ts_origin: Optional[int] = None,
) -> SendSchedule:
    """Greedily thread packages through an existing cover stream.

    The cover is scanned in order.  Each package takes the next unused packet
    of each of ``pkg.size`` distinct package IPs (with a pool larger than the
    package size, the first distinct IPs to show up).  Those packets are held
    until the package is complete and then sent back to back as single-packet
    runs, in the order the next secret chunk dictates.  Every other packet to
    a package IP goes out in an even-length run; a packet that would make a
    run odd is held for that IP's next run.  Packets still held when the cover
    ends are not sent.

    Embedding stops when the secret runs out (an incomplete trailing chunk is
    not embedded).  ``bits_embedded`` counts packages actually sent.
    """
    bits = _bitstring(secret)
    n = pkg.size
    m = len(pkg.ips)
    cap = lehmer.capacity_bits(n)
    max_packages = len(bits) // cap

    cover_ips = tuple(cover.ips)
    lookup = {ip: i for i, ip in enumerate(cover_ips)}
    missing = [ip for ip in pkg.ips if ip not in lookup]
    if missing:
        raise DomainError(f"package IPs absent from the cover stream: {missing}")
    sym_of_dest = np.full(len(cover_ips), -1, np.int64)
    for s, ip in enumerate(pkg.ips):
        sym_of_dest[lookup[ip]] = s

    dest = np.asarray(cover.dest, np.int64)
    gen_us = np.asarray(cover.gen_us, np.int64)
    total = len(dest)
    starts = np.flatnonzero(np.r_[True, dest[1:] != dest[:-1]]) if total else np.zeros(0, np.int64)
    ends = np.r_[starts[1:], total].astype(np.int64)
    run_syms = sym_of_dest[dest[starts]] if total else starts

    if max_packages:
        chunks = np.frombuffer(bits[:max_packages * cap].encode("ascii"), np.uint8) - ord("0")
        weights = 1 << np.arange(cap - 1, -1, -1, dtype=np.int64)
        ranks = (chunks.reshape(max_packages, cap).astype(np.int64) @ weights).tolist()
    else:
        ranks = []
    perms = [tuple(lehmer.unrank(n, r)) for r in range(1 << cap)]

    emit = []
    pending = [[] for _ in range(m)]
    collecting = {}  # symbol -> cover index of its packet, current package
    ready = deque()  # complete packages waiting to go out: [(symbol, cover index), ...]
    boundaries = []
    last = -1  # symbol of the last emitted run, -1 after X traffic
    formed = sent = 0

    for start, end, sym in zip(starts.tolist(), ends.tolist(), run_syms.tolist()):
        if sym < 0:
            emit.extend(range(start, end))
            last = -1
        else:
            avail = pending[sym]
            avail.extend(range(start, end))
            # a long run can feed one symbol to each of several packages
            while avail and sym not in collecting and formed < max_packages:
                collecting[sym] = avail.pop(0)
                if len(collecting) == n:
                    members = sorted(collecting)
                    ready.append([(members[v], collecting[members[v]]) for v in perms[ranks[formed]]])
                    collecting = {}
                    formed += 1
            k = len(avail)
            if k >= 2 and sym != last:
                take = k - (k & 1)
                emit.extend(avail[:take])
                del avail[:take]
                last = sym
        # a block may not start with the IP of the run just sent
        while ready and ready[0][0][0] != last:
            block = ready.popleft()
            boundaries.append(len(emit))
            emit.extend(idx for _, idx in block)
            last = block[-1][0]
            sent += 1

    # Even remainders can still go out safely; lone packets stay held.
    for sym in sorted(range(m), key=lambda s: s == last):
        held = pending[sym]
        take = len(held) - len(held) % 2
        if take and sym != last:
            emit.extend(held[:take])
            del held[:take]
            last = sym
            while ready and ready[0][0][0] != last:
                block = ready.popleft()
                boundaries.append(len(emit))
                emit.extend(idx for _, idx in block)
                last = block[-1][0]
                sent += 1
    held_at_end = sum(len(h) for h in pending) + len(collecting) + n * len(ready)
    packages = sent

    order = np.asarray(emit, np.int64)
    emitted_gen = gen_us[order]
    i = np.arange(len(order), dtype=np.int64)
    send_us = i + np.maximum.accumulate(emitted_gen - i) if len(order) else emitted_gen
    rng = generator(seed, "embed")
    batch = _finalize(cover_ips, dest[order], send_us, rng, ts_origin)
    boundaries.append(len(order))
    delay = send_us - emitted_gen
    stats = {
        "cover_packets": total,
        "held_at_end": held_at_end,
        "mean_hold_us": float(delay.mean()) if len(delay) else 0.0,
        "max_hold_us": int(delay.max()) if len(delay) else 0,
    }
    return SendSchedule(batch, pkg, boundaries, packages * cap, 0, stats)
