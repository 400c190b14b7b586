import numpy as np
import pytest

from stegtorrent.errors import DomainError
from stegtorrent.traffic import IpDistribution, SessionConfig, generate_cover, preset


def test_dominant_top_share():
    assert preset("dominant").top(1) == pytest.approx(0.77)


def test_balanced_top_share():
    assert preset("balanced").top(1) == pytest.approx(0.16)


def test_average_constraints():
    d = preset("average")
    assert d.top(1) >= 0.25
    assert d.top(6) > 0.75


@pytest.mark.parametrize("name", ["balanced", "dominant", "average"])
def test_preset_is_normalized(name):
    d = preset(name)
    assert sum(d.shares.values()) == pytest.approx(1.0, abs=1e-9)
    assert len(d.slots()) == 11
    assert sum(d.slots().values()) == pytest.approx(1.0, abs=1e-9)
    # no aggregated IP outranks a listed one
    assert max(d.shares[ip] for ip in d.rest) < min(
        s for ip, s in d.shares.items() if ip not in d.rest)


def test_unknown_preset():
    with pytest.raises(DomainError):
        preset("bursty")


@pytest.mark.parametrize("shares", [{}, {"a": 0.5}, {"a": 1.2, "b": -0.2}, {"a": 0.0, "b": 1.0}])
def test_invalid_distribution(shares):
    with pytest.raises(DomainError):
        IpDistribution(shares)


def test_session_config_validation():
    with pytest.raises(DomainError):
        SessionConfig(total_packets=0)
    with pytest.raises(DomainError):
        SessionConfig(rate_pps=0)


def test_single_ip_session():
    cover = generate_cover(SessionConfig(IpDistribution({"10.1.1.1": 1.0}), total_packets=1000))
    assert len(cover) == 1000
    assert cover.counts() == {"10.1.1.1": 1000}


@pytest.fixture(scope="module")
def big_session():
    return generate_cover(SessionConfig(preset("average"), total_packets=500_000, seed=7))


def test_shares_match_distribution(big_session):
    dist = preset("average")
    counts = big_session.counts()
    total = 500_000
    assert sum(counts.values()) == total
    for ip, p in dist.shares.items():
        share = counts[ip] / total
        assert abs(share - p) <= 0.005
        assert abs(counts[ip] - total * p) <= 4 * np.sqrt(total * p * (1 - p))


def test_session_duration(big_session):
    duration_s = big_session.gen_us[-1] / 1e6
    assert duration_s == pytest.approx(500_000 / 1350, rel=0.005)
    assert np.all(np.diff(big_session.gen_us) > 0)


def test_runs_are_bursty(big_session):
    d = big_session.dest
    runs = 1 + np.count_nonzero(d[1:] != d[:-1])
    assert len(d) / runs > 1.5


def test_most_active_order(big_session):
    assert big_session.most_active()[:3] == ["10.0.0.1", "10.0.0.2", "10.0.0.3"]


def test_deterministic():
    cfg = SessionConfig(preset("balanced"), total_packets=5000, seed=3)
    a, b = generate_cover(cfg), generate_cover(cfg)
    assert np.array_equal(a.dest, b.dest) and np.array_equal(a.gen_us, b.gen_us)
    c = generate_cover(SessionConfig(preset("balanced"), total_packets=5000, seed=4))
    assert not np.array_equal(a.dest, c.dest)
