"""Text trace files and the envelope sidecar.

Trace: one packet per line, ``#`` starts a comment, lines in any order::

    arrival_us,send_us,dest_ip,conn_id,seq_nr,timestamp_us,type,is_retransmit

Envelope: a JSON object carrying what the receiver needs besides the trace:
the ordered package IPs, the package size, the secret length and the zero
pad count.
"""
from __future__ import annotations

import hashlib
import io
import json
import os
import re
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, TraceFormatError
from .mutp import PacketType
from .packets import DataPackage, PacketBatch

__all__ = [
    "TRACE_COLUMNS",
    "ENVELOPE_MAGIC",
    "Envelope",
    "format_trace",
    "parse_trace",
    "write_trace",
    "read_trace",
    "trace_check_value",
]

TRACE_COLUMNS = ("arrival_us", "send_us", "dest_ip", "conn_id", "seq_nr",
                 "timestamp_us", "type", "is_retransmit")
ENVELOPE_MAGIC = "STEGTORRENT-ENVELOPE"
ENVELOPE_VERSION = 1
_CHECK_PREFIX = "envelope-check:"

_TOKEN = re.compile(r"^[^\s,#]+$")
_LIMITS = {"conn_id": 0xFFFF, "seq_nr": 0xFFFF, "timestamp_us": 0xFFFFFFFF}


@dataclass
class Envelope:
    package_size: int
    ips: list
    secret_bits: int
    pad_bits: int = 0
    nonce: str = ""
    magic: str = ENVELOPE_MAGIC
    version: int = ENVELOPE_VERSION

    @property
    def package(self) -> DataPackage:
        return DataPackage(tuple(self.ips), self.package_size)

    def check_value(self) -> str:
        """Digest binding a trace to this envelope's IP order."""
        text = "\n".join([self.magic, self.nonce, str(self.package_size), *self.ips])
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:32]

    def dumps(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Envelope":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"envelope is not valid JSON: {exc}") from None
        if not isinstance(raw, dict) or raw.get("magic") != ENVELOPE_MAGIC:
            raise DomainError("not a StegTorrent envelope (bad magic)")
        if raw.get("version") != ENVELOPE_VERSION:
            raise DomainError(f"unsupported envelope version {raw.get('version')!r}")
        try:
            env = cls(**raw)
        except TypeError as exc:
            raise DomainError(f"malformed envelope: {exc}") from None
        env.package  # validates IPs and size
        if env.secret_bits < 0 or env.pad_bits < 0:
            raise DomainError("envelope bit counts must be non-negative")
        return env


def trace_check_value(text: str) -> Optional[str]:
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("#") and _CHECK_PREFIX in line:
            return line.split(_CHECK_PREFIX, 1)[1].strip()
    return None


def format_trace(batch: PacketBatch, check: Optional[str] = None) -> str:
    out = io.StringIO()
    out.write("# " + ",".join(TRACE_COLUMNS) + "\n")
    if check:
        out.write(f"# {_CHECK_PREFIX} {check}\n")
    arrival = np.where(batch.arrival_us < 0, batch.send_us, batch.arrival_us)
    names = [PacketType(int(t)).name for t in batch.ptype]
    for i in range(len(batch)):
        out.write(
            f"{arrival[i]},{batch.send_us[i]},{batch.ips[batch.dest[i]]},"
            f"{batch.conn_id[i]},{batch.seq_nr[i]},{batch.timestamp_us[i]},"
            f"{names[i]},{int(batch.retransmit[i])}\n"
        )
    return out.getvalue()


def _uint(text, name, line_no):
    if not text.isdigit():
        raise TraceFormatError(f"{name} must be an unsigned decimal integer, got {text!r}", line_no)
    value = int(text)
    if name in _LIMITS and value > _LIMITS[name]:
        raise TraceFormatError(f"{name}={value} exceeds {_LIMITS[name]}", line_no)
    return value


def parse_trace(text: str) -> PacketBatch:
    cols = {name: [] for name in TRACE_COLUMNS}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != len(TRACE_COLUMNS):
            raise TraceFormatError(
                f"expected {len(TRACE_COLUMNS)} fields, got {len(fields)}", line_no
            )
        rec = dict(zip(TRACE_COLUMNS, fields))
        if not _TOKEN.match(rec["dest_ip"]):
            raise TraceFormatError(f"bad dest_ip {rec['dest_ip']!r}", line_no)
        try:
            ptype = PacketType[rec["type"]]
        except KeyError:
            raise TraceFormatError(f"unknown packet type {rec['type']!r}", line_no) from None
        if rec["is_retransmit"] not in ("0", "1"):
            raise TraceFormatError("is_retransmit must be 0 or 1", line_no)
        for name in ("arrival_us", "send_us", "conn_id", "seq_nr", "timestamp_us"):
            cols[name].append(_uint(rec[name], name, line_no))
        cols["dest_ip"].append(rec["dest_ip"])
        cols["type"].append(int(ptype))
        cols["is_retransmit"].append(rec["is_retransmit"] == "1")
    table = list(dict.fromkeys(cols["dest_ip"]))
    index = {ip: i for i, ip in enumerate(table)}
    return PacketBatch(
        ips=tuple(table),
        dest=[index[ip] for ip in cols["dest_ip"]],
        conn_id=cols["conn_id"],
        seq_nr=cols["seq_nr"],
        timestamp_us=cols["timestamp_us"],
        send_us=cols["send_us"],
        arrival_us=cols["arrival_us"],
        retransmit=cols["is_retransmit"],
        ptype=cols["type"],
    )


def write_trace(path, batch: PacketBatch, check: Optional[str] = None) -> None:
    with open(os.fspath(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_trace(batch, check))


def read_trace(path) -> tuple:
    """(PacketBatch, envelope check value or None)."""
    with open(os.fspath(path), encoding="utf-8") as fh:
        text = fh.read()
    return parse_trace(text), trace_check_value(text)
