import zlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stegtorrent.channel import ChannelConfig, transmit, uniform_configs
from stegtorrent.errors import ConfigurationError
from stegtorrent.packets import DataPackage
from stegtorrent.receiver import extract, restore_order
from stegtorrent.sender import CoverPlan, SendSchedule, build_schedule

from conftest import make_batch

A, B = "10.0.0.1", "10.0.0.2"


def schedule_of(dests, send):
    ips = tuple(dict.fromkeys(dests))
    pkg = DataPackage(ips + ("10.0.0.99",) if len(ips) < 2 else ips)
    return SendSchedule(make_batch(ips, dests, send), pkg, [0, len(dests)], 0)


def test_identity_channel_preserves_order():
    s = build_schedule("1011001110", DataPackage((A, B, "10.0.0.3")), seed=3)
    out = transmit(s, uniform_configs(s.packets.ips, jitter_us=0, loss_prob=0.0))
    assert out.packets.dest_ips == s.packets.dest_ips
    assert np.array_equal(out.packets.arrival_us, s.packets.send_us + 30_000)
    assert not out.packets.retransmit.any()


def jitter_draw(seed, ip, width):
    """First jitter value for ``ip``, drawn straight from numpy."""
    ss = np.random.SeedSequence(seed, spawn_key=(zlib.crc32(b"channel"), zlib.crc32(ip.encode())))
    return int(np.random.Generator(np.random.PCG64(ss)).integers(-width, width + 1))


def test_jitter_can_invert_order():
    ja, jb = jitter_draw(0, A, 500), jitter_draw(0, B, 500)
    assert (ja, jb) == (265, -329)
    s = schedule_of([A, B], [0, 100])
    out = transmit(s, uniform_configs((A, B), jitter_us=500, loss_prob=0.0, seed=0))
    assert out.packets.dest_ips == [B, A]
    assert list(out.packets.arrival_us) == [100 + 30_000 + jb, 30_000 + ja]
    # the timestamps put it right again
    assert restore_order(out).dest_ips == [A, B]


def test_loss_rate():
    k = 10_000
    s = schedule_of([A] * k, list(range(0, 1000 * k, 1000)))
    out = transmit(s, {A: ChannelConfig(loss_prob=0.05, jitter_us=0, seed=11)})
    n = int(out.packets.retransmit.sum())
    sigma = (k * 0.05 * 0.95) ** 0.5
    assert abs(n - 500) <= 3 * sigma
    assert n == 494  # pinned for this seed
    late = out.packets.arrival_us - out.packets.send_us - 30_000
    assert np.all(late % 100_000 == 0)
    assert np.array_equal(late > 0, out.packets.retransmit)


def test_retransmitted_copy_keeps_timestamp():
    s = build_schedule("110100", DataPackage((A, B, "10.0.0.3")), seed=1)
    out = transmit(s, uniform_configs(s.packets.ips, loss_prob=0.3, seed=5))
    assert sorted(out.packets.timestamp_us) == sorted(s.packets.timestamp_us)


def test_deterministic_and_independent_of_config_order():
    s = build_schedule("1110001", DataPackage((A, B, "10.0.0.3")), seed=2)
    c1 = {ip: ChannelConfig(loss_prob=0.2, seed=4) for ip in s.packets.ips}
    c2 = dict(reversed(list(c1.items())))
    assert transmit(s, c1).packets.equals(transmit(s, c2).packets)


def test_missing_configuration():
    s = build_schedule("1", DataPackage((A, B)))
    with pytest.raises(ConfigurationError):
        transmit(s, {A: ChannelConfig()})


@pytest.mark.parametrize("kwargs", [
    {"loss_prob": 1.0}, {"loss_prob": -0.1}, {"jitter_us": -1},
    {"retransmit_timeout_us": 0}, {"duplicate_prob": 2.0},
])
def test_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        ChannelConfig(**kwargs)


def test_duplicates_are_dropped_by_receiver():
    secret = "1011100101110001"
    pkg = DataPackage((A, B, "10.0.0.3", "10.0.0.4"))
    s = build_schedule(secret, pkg, seed=8)
    out = transmit(s, uniform_configs(s.packets.ips, duplicate_prob=0.5, seed=6))
    assert len(out.packets) > len(s.packets)
    report = extract(out)
    assert report.duplicates_dropped == len(out.packets) - len(s.packets)
    assert report.bits.startswith(secret)


@settings(max_examples=40, deadline=None)
@given(
    secret=st.text("01", min_size=1, max_size=80),
    n=st.integers(2, 6),
    jitter=st.integers(0, 5000),
    loss=st.floats(0, 0.3),
    seed=st.integers(0, 2**20),
)
def test_end_to_end(secret, n, jitter, loss, seed):
    pkg = DataPackage(tuple(f"10.0.0.{i}" for i in range(1, n + 1)))
    plan = CoverPlan(x_ips=("10.9.9.9",), x_prob=0.2, filler_prob=0.2)
    s = build_schedule(secret, pkg, cover=plan, seed=seed)
    out = transmit(s, uniform_configs(s.packets.ips, jitter_us=jitter, loss_prob=loss, seed=seed))
    assert extract(out).bits[: len(secret)] == secret
