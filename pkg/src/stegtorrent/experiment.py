"""Bandwidth and packet-utilization experiments over simulated sessions.

Three ways of choosing the IPs that form packages are compared:

* ``A``: every IP seen in the session,
* ``B``: as many of the most active IPs as the package size,
* ``C``: the six most active IPs.

For each session a cover stream is generated, packages carrying random
bits are embedded greedily, the result crosses the simulated channel and is
decoded.  Metrics come from the decoded stream, and the decoded bits are
checked against what was embedded.
"""
from __future__ import annotations

import csv
import io
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from . import lehmer
from .channel import transmit, uniform_configs
from .errors import ConfigurationError, DomainError
from .packets import DataPackage
from .receiver import extract
from .rng import derive_seed, generator
from .sender import embed_in_cover
from .traffic import CoverStream, SessionConfig, generate_cover

__all__ = [
    "CASES",
    "DEFAULT_RATE_PPS",
    "CSV_HEADER",
    "ChannelSettings",
    "CaseSpec",
    "SessionMetrics",
    "CaseResult",
    "implied_rate",
    "case_pool",
    "run_session",
    "run_case",
    "run_experiment",
    "table_report",
]

CASES = ("A", "B", "C")
CASE_C_IPS = 6
# Aggregate packet rate at which bandwidth = rate * utilization * bits / n
# reproduces the reference Case A measurements (about 1348 pps at n=2, 1370 at n=6).
DEFAULT_RATE_PPS = 1350.0
CSV_HEADER = "case,package_size,mean_bandwidth_bps,std_bandwidth_bps,mean_utilization_pct"


def implied_rate(bandwidth_bps, utilization, n) -> float:
    """Packet rate implied by a (bandwidth, utilization) pair at package size n."""
    return bandwidth_bps / (utilization * lehmer.capacity_bits(n) / n)


@dataclass(frozen=True)
class ChannelSettings:
    base_delay_us: int = 30_000
    jitter_us: int = 2_000
    loss_prob: float = 0.01
    retransmit_timeout_us: int = 100_000
    duplicate_prob: float = 0.0


@dataclass(frozen=True)
class CaseSpec:
    case: str
    package_size: int
    sessions: int = 20
    session: SessionConfig = field(default_factory=lambda: SessionConfig(rate_pps=DEFAULT_RATE_PPS))
    channel: ChannelSettings = ChannelSettings()

    def __post_init__(self):
        if self.case not in CASES:
            raise ConfigurationError(f"unknown case {self.case!r}")
        if not 2 <= self.package_size <= 6:
            raise ConfigurationError("package size must be in [2, 6]")
        if self.sessions < 1:
            raise ConfigurationError("need at least one session")


@dataclass(frozen=True)
class SessionMetrics:
    steg_bandwidth_bps: float
    utilization: float
    packets_total: int
    packets_in_packages: int
    packages_decoded: int
    package_size: int
    rate_pps: float
    mean_hold_us: float = 0.0

    @property
    def bandwidth_exact(self) -> Fraction:
        if not self.packets_total:
            return Fraction(0)
        bits = self.packages_decoded * lehmer.capacity_bits(self.package_size)
        return Fraction(bits) * Fraction(self.rate_pps) / self.packets_total

    @property
    def session_duration_s(self) -> float:
        return self.packets_total / self.rate_pps


@dataclass
class CaseResult:
    case: str
    package_size: int
    sessions: list

    @property
    def mean_bandwidth(self) -> float:
        return statistics.fmean(m.steg_bandwidth_bps for m in self.sessions)

    @property
    def std_bandwidth(self) -> float:
        if len(self.sessions) < 2:
            return 0.0
        return statistics.stdev(m.steg_bandwidth_bps for m in self.sessions)

    @property
    def mean_utilization(self) -> float:
        return statistics.fmean(m.utilization for m in self.sessions)


def case_pool(case: str, n: int, cover: CoverStream) -> tuple:
    """IPs (most active first) that packages may use in ``case``."""
    active = cover.most_active()
    if case == "A":
        need, pool = n, active
    elif case == "B":
        need, pool = n, active[:n]
    elif case == "C":
        need, pool = CASE_C_IPS, active[:CASE_C_IPS]
    else:
        raise ConfigurationError(f"unknown case {case!r}")
    if len(active) < need:
        raise ConfigurationError(
            f"case {case} needs {need} active IPs, session has {len(active)}"
        )
    return tuple(pool)


def _payload(n, cover_len, seed) -> str:
    # enough bits for the densest possible embedding
    count = lehmer.capacity_bits(n) * (cover_len // n + 1)
    bits = generator(seed, "payload", n).integers(0, 2, size=count, dtype=np.uint8)
    return (bits + ord("0")).tobytes().decode("ascii")


def run_session(
    cover: CoverStream,
    pool: Sequence[str],
    n: int,
    seed: int,
    channel: ChannelSettings = ChannelSettings(),
    secret: Optional[str] = None,
) -> SessionMetrics:
    """Embed, transmit and decode one session; return its metrics.

    ``secret`` defaults to random bits drawn from ``seed``.  Raises
    RuntimeError if the receiver does not recover exactly the embedded bits.
    """
    pkg = DataPackage(tuple(pool), n)
    if secret is None:
        secret = _payload(n, len(cover), seed)
    schedule = embed_in_cover(cover, pkg, secret, seed=derive_seed(seed, "embed"))
    configs = uniform_configs(
        cover.ips,
        base_delay_us=channel.base_delay_us,
        jitter_us=channel.jitter_us,
        loss_prob=channel.loss_prob,
        retransmit_timeout_us=channel.retransmit_timeout_us,
        duplicate_prob=channel.duplicate_prob,
        seed=derive_seed(seed, "channel"),
    )
    report = extract(transmit(schedule, configs))
    if report.bits != secret[:schedule.bits_embedded] or len(report.bits) != schedule.bits_embedded:
        raise RuntimeError("decoded bits differ from the embedded bits")
    total = report.packets_total
    bits = report.packages_decoded * lehmer.capacity_bits(n)
    return SessionMetrics(
        steg_bandwidth_bps=bits * cover.rate_pps / total if total else 0.0,
        utilization=report.packets_in_packages / total if total else 0.0,
        packets_total=total,
        packets_in_packages=report.packets_in_packages,
        packages_decoded=report.packages_decoded,
        package_size=n,
        rate_pps=cover.rate_pps,
        mean_hold_us=schedule.stats["mean_hold_us"],
    )


def _session_task(args):
    index, pairs, session, channel, master_seed = args
    cfg = replace(session, seed=derive_seed(master_seed, "cover", index))
    cover = generate_cover(cfg)
    # the seed does not depend on the case, so cases that pick the same
    # pool and size (B and C at n=6) see identical payloads and channels
    seed = derive_seed(master_seed, "session", index)
    out = []
    for case, n in pairs:
        out.append(run_session(cover, case_pool(case, n, cover), n, seed, channel))
    return out


def run_experiment(
    cases: Iterable[str] = CASES,
    sizes: Iterable[int] = range(2, 7),
    sessions: int = 20,
    session: Optional[SessionConfig] = None,
    channel: ChannelSettings = ChannelSettings(),
    master_seed: int = 0,
    workers: int = 1,
) -> list:
    """Run every (case, size) pair over the same simulated sessions.

    Each session's cover stream is generated once and shared by all pairs.
    Results are identical for any ``workers`` count.
    """
    pairs = []
    for c in cases:
        for n in sizes:
            CaseSpec(c, n, sessions)  # validates
            pairs.append((c, n))
    if not pairs:
        raise DomainError("nothing to run: empty case or size list")
    if session is None:
        session = SessionConfig(rate_pps=DEFAULT_RATE_PPS)
    tasks = [(i, pairs, session, channel, master_seed) for i in range(sessions)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_session = list(pool.map(_session_task, tasks))
    else:
        per_session = [_session_task(t) for t in tasks]
    return [
        CaseResult(c, n, [per_session[s][j] for s in range(sessions)])
        for j, (c, n) in enumerate(pairs)
    ]


def run_case(spec: CaseSpec, master_seed: int = 0, workers: int = 1) -> CaseResult:
    (result,) = run_experiment(
        [spec.case], [spec.package_size], spec.sessions, spec.session,
        spec.channel, master_seed, workers,
    )
    return result


def table_report(results: Sequence[CaseResult]) -> tuple:
    """(aligned text table, CSV text) with one row per (case, size)."""
    results = sorted(results, key=lambda r: (r.case, r.package_size))
    if not results:
        raise DomainError("no results to report")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    lines = [
        f"{'Case':<5}{'Size':>5}{'Bandwidth [b/s]':>17}{'Std [b/s]':>11}{'Utilization [%]':>17}"
    ]
    for r in results:
        row = (
            r.case,
            r.package_size,
            f"{r.mean_bandwidth:.2f}",
            f"{r.std_bandwidth:.2f}",
            f"{100 * r.mean_utilization:.2f}",
        )
        writer.writerow(row)
        lines.append(f"{row[0]:<5}{row[1]:>5}{row[2]:>17}{row[3]:>11}{row[4]:>17}")
    return "\n".join(lines) + "\n", buf.getvalue()
