"""Simulated network path from the sender to each receiving client.

Each destination has its own :class:`ChannelConfig`.  A packet's delivered
copy arrives after ``base_delay_us`` plus uniform integer jitter in
``[-jitter_us, +jitter_us]``; every lost attempt postpones delivery by
``retransmit_timeout_us``.  Retransmitted copies reuse the original header,
timestamp included.  With ``duplicate_prob`` a copy that was not actually
lost is retransmitted anyway (a spurious timeout) and both copies arrive.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .errors import ConfigurationError
from .packets import PacketBatch
from .rng import generator
from .receiver import ReceivedStream

__all__ = ["ChannelConfig", "transmit", "uniform_configs"]


@dataclass(frozen=True)
class ChannelConfig:
    base_delay_us: int = 30_000
    jitter_us: int = 2_000
    loss_prob: float = 0.01
    retransmit_timeout_us: int = 100_000
    seed: int = 0
    duplicate_prob: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.loss_prob < 1.0:
            raise ConfigurationError("loss_prob must lie in [0, 1)")
        if not 0.0 <= self.duplicate_prob <= 1.0:
            raise ConfigurationError("duplicate_prob must lie in [0, 1]")
        if self.base_delay_us < 0 or self.jitter_us < 0 or self.retransmit_timeout_us <= 0:
            raise ConfigurationError("delays must be non-negative and the timeout positive")


def uniform_configs(ips, **kwargs) -> dict:
    """The same channel settings (and master seed) for every destination."""
    cfg = ChannelConfig(**kwargs)
    return {ip: cfg for ip in ips}


def _transmit_one(send_us, cfg: ChannelConfig, ip):
    """Arrival times, retransmit flags and spurious duplicates for one destination."""
    rng = generator(cfg.seed, "channel", ip)
    k = len(send_us)
    jitter = rng.integers(-cfg.jitter_us, cfg.jitter_us + 1, size=k)
    if cfg.loss_prob > 0:
        # failed attempts before the first success
        losses = rng.geometric(1.0 - cfg.loss_prob, size=k) - 1
    else:
        losses = np.zeros(k, np.int64)
    arrival = send_us + cfg.base_delay_us + losses * cfg.retransmit_timeout_us
    # nothing arrives before it was sent
    arrival = np.maximum(arrival + jitter, send_us)
    retrans = losses > 0
    dup_idx = np.zeros(0, np.int64)
    dup_arrival = np.zeros(0, np.int64)
    if cfg.duplicate_prob > 0:
        dup = rng.random(k) < cfg.duplicate_prob
        dup_idx = np.flatnonzero(dup)
        extra = rng.integers(-cfg.jitter_us, cfg.jitter_us + 1, size=len(dup_idx))
        dup_arrival = arrival[dup_idx] + cfg.retransmit_timeout_us + extra
    return arrival, retrans, dup_idx, dup_arrival


def transmit(schedule, configs: Mapping[str, ChannelConfig]) -> ReceivedStream:
    """Carry every packet of ``schedule`` to its destination.

    Destinations are simulated independently, each from its own random
    stream keyed by (config seed, IP), so the result does not depend on the
    order destinations are processed in.  Output is sorted by arrival time.
    """
    batch = schedule.packets
    arrival = np.empty(len(batch), np.int64)
    retrans = np.zeros(len(batch), bool)
    dups = []
    for d, ip in enumerate(batch.ips):
        mask = np.flatnonzero(batch.dest == d)
        if len(mask) == 0:
            continue
        if ip not in configs:
            raise ConfigurationError(f"no channel configuration for destination {ip}")
        a, r, di, da = _transmit_one(batch.send_us[mask], configs[ip], ip)
        arrival[mask] = a
        retrans[mask] = r
        if len(di):
            dups.append((mask[di], da))

    out = replace(batch, arrival_us=arrival, retransmit=retrans)
    if dups:
        idx = np.concatenate([i for i, _ in dups])
        extra = batch.take(idx)
        extra.arrival_us = np.concatenate([a for _, a in dups])
        extra.retransmit = np.ones(len(idx), bool)
        out = PacketBatch(
            out.ips,
            *(np.concatenate([getattr(out, c), getattr(extra, c)])
              for c in ("dest", "conn_id", "seq_nr", "timestamp_us", "send_us",
                        "arrival_us", "retransmit", "ptype")),
        )
    # ties broken by send time then position, so the order is fully determined
    order = np.lexsort((np.arange(len(out)), out.send_us, out.arrival_us))
    return ReceivedStream(out.take(order), schedule.package)
