"""Cover traffic: per-destination packet shares and bursty session streams."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import DomainError
from .rng import generator, spaced_times

__all__ = [
    "PRESETS",
    "IpDistribution",
    "SessionConfig",
    "CoverStream",
    "preset",
    "generate_cover",
]

# Ten most active peers, then the share of everything else ("rest") and how
# many peers that remainder is spread over.  The top shares of `dominant`
# and `balanced` are the extremes of the observed 16-77% range; `average`
# has one peer above 25% and six peers covering more than 75% of traffic.
PRESETS = {
    "balanced": {
        "top": (0.16, 0.14, 0.12, 0.11, 0.10, 0.09, 0.07, 0.06, 0.05, 0.04),
        "rest_ips": 12,
    },
    "dominant": {
        "top": (0.77, 0.06, 0.04, 0.03, 0.02, 0.015, 0.012, 0.01, 0.008, 0.006),
        "rest_ips": 12,
    },
    "average": {
        "top": (0.40, 0.17, 0.10, 0.05, 0.025, 0.012, 0.01, 0.008, 0.006, 0.005),
        "rest_ips": 60,
    },
}


def _top_ip(i):
    return f"10.0.0.{i + 1}"


def _rest_ip(i):
    return f"10.0.1.{i + 1}"


@dataclass(frozen=True)
class IpDistribution:
    """Fraction of session packets sent to each destination IP.

    ``rest`` lists the IPs that the ten-slot summary folds into one
    aggregate slot.
    """

    shares: Mapping[str, float]
    name: str = "custom"
    rest: tuple = ()

    def __post_init__(self):
        shares = {str(ip): float(s) for ip, s in dict(self.shares).items()}
        object.__setattr__(self, "shares", shares)
        if not shares:
            raise DomainError("distribution needs at least one IP")
        if any(s <= 0 for s in shares.values()):
            raise DomainError("every share must be positive")
        total = sum(shares.values())
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"shares sum to {total!r}, not 1")

    @property
    def ips(self) -> tuple:
        return tuple(self.shares)

    @property
    def probabilities(self) -> np.ndarray:
        p = np.array(list(self.shares.values()))
        return p / p.sum()

    def ranked(self) -> list:
        """(ip, share) pairs, most active first."""
        return sorted(self.shares.items(), key=lambda kv: -kv[1])

    def top(self, k=1) -> float:
        return sum(s for _, s in self.ranked()[:k])

    def slots(self) -> dict:
        """Eleven-slot summary: each non-aggregated IP plus one 'rest' slot."""
        out = {ip: s for ip, s in self.shares.items() if ip not in self.rest}
        if self.rest:
            out["rest"] = sum(self.shares[ip] for ip in self.rest)
        return out


def preset(name: str) -> IpDistribution:
    try:
        spec = PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    top = spec["top"]
    k = spec["rest_ips"]
    rest_share = 1.0 - sum(top)
    shares = {_top_ip(i): s for i, s in enumerate(top)}
    rest = tuple(_rest_ip(i) for i in range(k))
    for ip in rest:
        shares[ip] = rest_share / k
    return IpDistribution(shares, name=name, rest=rest)


@dataclass(frozen=True)
class SessionConfig:
    distribution: IpDistribution = field(default_factory=lambda: preset("average"))
    total_packets: int = 500_000
    rate_pps: float = 1350.0
    seed: int = 0
    mean_run_length: float = 2.0

    def __post_init__(self):
        if self.total_packets <= 0 or self.rate_pps <= 0:
            raise DomainError("total_packets and rate_pps must be positive")
        if self.mean_run_length < 1:
            raise DomainError("mean_run_length must be at least 1")


@dataclass
class CoverStream:
    """Generated session traffic: destination per packet and generation time."""

    ips: tuple
    dest: np.ndarray
    gen_us: np.ndarray
    rate_pps: float

    def __len__(self):
        return len(self.dest)

    def counts(self) -> dict:
        c = np.bincount(self.dest, minlength=len(self.ips))
        return {ip: int(c[i]) for i, ip in enumerate(self.ips)}

    def most_active(self) -> list:
        """IPs that received packets, by descending count (ties: table order)."""
        c = np.bincount(self.dest, minlength=len(self.ips))
        order = np.lexsort((np.arange(len(self.ips)), -c))
        return [self.ips[i] for i in order if c[i] > 0]


def _split_runs(count, p, rng):
    """Geometric run lengths (success prob ``p``) summing to ``count``."""
    parts = []
    remaining = count
    while remaining > 0:
        draw = rng.geometric(p, size=int(remaining * p * 1.2) + 8)
        csum = np.cumsum(draw)
        cut = int(np.searchsorted(csum, remaining))
        if cut < len(draw):
            draw = draw[:cut + 1].copy()
            draw[-1] -= csum[cut] - remaining
            parts.append(draw)
            remaining = 0
        else:
            parts.append(draw)
            remaining -= int(csum[-1])
    return np.concatenate(parts) if parts else np.zeros(0, np.int64)


def generate_cover(cfg: SessionConfig) -> CoverStream:
    """One session of DATA traffic from the client to its peers.

    Per-IP counts are a multinomial draw.  Each IP's packets are cut into
    bursts with geometric lengths (mean ``mean_run_length``) and the bursts
    of all IPs are shuffled together.  Bursts that land next to each other
    for the same IP simply form a longer burst.
    """
    rng = generator(cfg.seed, "cover")
    dist = cfg.distribution
    counts = rng.multinomial(cfg.total_packets, dist.probabilities)
    p = 1.0 / cfg.mean_run_length
    labels = []
    lengths = []
    for i, c in enumerate(counts):
        if c:
            runs = _split_runs(int(c), p, rng)
            labels.append(np.full(len(runs), i, np.int64))
            lengths.append(runs)
    labels = np.concatenate(labels)
    lengths = np.concatenate(lengths)
    order = rng.permutation(len(labels))
    dest = np.repeat(labels[order], lengths[order])
    gen_us = spaced_times(len(dest), cfg.rate_pps, rng)
    return CoverStream(dist.ips, dest, gen_us, cfg.rate_pps)
