import io
import json
import random

import pytest

from stegtorrent.cli import main
from stegtorrent.tracefile import Envelope

IPS = "10.0.0.1,10.0.0.2,10.0.0.3,10.0.0.4,10.0.0.5"


def run(argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out)
    return code, out.getvalue()


def packet_lines(path):
    return [l for l in path.read_text().splitlines() if l and not l.startswith("#")]


def test_capacity_table():
    code, text = run(["capacity", "--sizes", "2..6"])
    assert code == 0
    rows = [l.split() for l in text.splitlines()[1:]]
    assert [(int(n), int(bits)) for n, _, bits in rows] == [(2, 1), (3, 2), (4, 4), (5, 6), (6, 9)]
    assert rows[-1][1] == "720"
    _, text = run(["capacity", "--sizes", "4"])
    assert text.splitlines()[1].split() == ["4", "24", "4"]


def test_one_bit_two_packets(tmp_path):
    (tmp_path / "s").write_text("1")
    trace = tmp_path / "t"
    code, _ = run(["encode", "--bits", "--secret", tmp_path / "s", "--ips", "a,b", "--out", trace])
    assert code == 0
    lines = packet_lines(trace)
    assert [l.split(",")[2] for l in lines] == ["b", "a"]
    code, _ = run(["decode", "--bits", "--trace", trace, "--envelope", f"{trace}.envelope.json",
                   "--out", tmp_path / "r"])
    assert code == 0 and (tmp_path / "r").read_text() == "1"


def test_empty_secret(tmp_path, capsys):
    (tmp_path / "s").write_bytes(b"")
    code, _ = run(["encode", "--secret", tmp_path / "s", "--ips", "a,b", "--out", tmp_path / "t"])
    assert code == 3
    assert "empty" in capsys.readouterr().err


def test_missing_secret_file(tmp_path):
    code, _ = run(["encode", "--secret", tmp_path / "nope", "--ips", "a,b", "--out", tmp_path / "t"])
    assert code == 2


def test_bad_package_is_domain_error(tmp_path):
    (tmp_path / "s").write_bytes(b"x")
    code, _ = run(["encode", "--secret", tmp_path / "s", "--ips", "a,a", "--out", tmp_path / "t"])
    assert code == 3


def test_lossy_roundtrip_128_bytes(tmp_path):
    secret = bytes(random.Random(1).randrange(256) for _ in range(128))
    (tmp_path / "s").write_bytes(secret)
    trace = tmp_path / "t"
    code, _ = run(["encode", "--secret", tmp_path / "s", "--ips", IPS, "--package-size", 5,
                   "--x-ips", "10.9.0.1,10.9.0.2", "--x-prob", 0.3, "--filler-prob", 0.3,
                   "--jitter-us", 5000, "--loss", 0.05, "--seed", 42, "--out", trace])
    assert code == 0
    assert any(l.endswith(",1") for l in packet_lines(trace))  # some retransmits
    code, _ = run(["decode", "--trace", trace, "--envelope", f"{trace}.envelope.json",
                   "--out", tmp_path / "r"])
    assert code == 0
    assert (tmp_path / "r").read_bytes() == secret


def test_encode_is_deterministic(tmp_path):
    (tmp_path / "s").write_bytes(b"same bytes")
    for name in ("t1", "t2"):
        run(["encode", "--secret", tmp_path / "s", "--ips", IPS, "--loss", 0.1,
             "--jitter-us", 3000, "--seed", 3, "--out", tmp_path / name])
    assert (tmp_path / "t1").read_bytes() == (tmp_path / "t2").read_bytes()
    assert (tmp_path / "t1.envelope.json").read_bytes() == (tmp_path / "t2.envelope.json").read_bytes()


def write_stream(path, labels, shuffle_seed=None):
    """One trace line per label, timestamps in list order; X is 'peer-x'."""
    rows = []
    for i, lab in enumerate(labels):
        ip = "peer-x" if lab == "X" else f"ip{lab}"
        rows.append(f"{50_000 + 7 * i},{1000 * i},{ip},{i},{i},{1000 * i},DATA,0")
    if shuffle_seed is not None:
        random.Random(shuffle_seed).shuffle(rows)
    path.write_text("\n".join(rows) + "\n")


def write_envelope(path, n, secret_bits):
    env = Envelope(n, [f"ip{k}" for k in range(1, n + 1)], secret_bits)
    path.write_text(env.dumps())


WORKED = [1, 4, 4, "X", "X", 4, 4, 3, "X", 3, 3, 5, 2, 2, 5, 5, 2, 2, 2, 4, 4, 4, "X", 5]


def test_worked_example_trace(tmp_path, capsys):
    write_stream(tmp_path / "t", WORKED, shuffle_seed=5)
    write_envelope(tmp_path / "e", 5, 6)
    code, _ = run(["decode", "--bits", "--trace", tmp_path / "t", "--envelope", tmp_path / "e",
                   "--out", tmp_path / "r"])
    assert code == 0
    err = capsys.readouterr().err
    assert "packages decoded: 1" in err
    assert "incomplete tail package: ip5" in err
    # (1,3,5,2,4) is rank 10 among 5-permutations
    assert (tmp_path / "r").read_text() == "001010"


def test_truncated_trace_partial_output(tmp_path, capsys):
    (tmp_path / "s").write_bytes(b"abcd")
    trace = tmp_path / "t"
    run(["encode", "--secret", tmp_path / "s", "--ips", IPS, "--seed", 1, "--out", trace])
    lines = packet_lines(trace)
    last = max(lines, key=lambda l: int(l.split(",")[5]))
    trace.write_text("\n".join(l for l in lines if l != last) + "\n")
    code, _ = run(["decode", "--trace", trace, "--envelope", f"{trace}.envelope.json",
                   "--out", tmp_path / "r"])
    assert code == 0
    err = capsys.readouterr().err
    assert "incomplete tail package" in err
    assert "incomplete: recovered" in err
    assert b"abcd".startswith((tmp_path / "r").read_bytes())
    assert len((tmp_path / "r").read_bytes()) < 4


def test_ambiguous_timestamps(tmp_path):
    (tmp_path / "t").write_text("1,0,ip1,1,0,500,DATA,0\n2,0,ip2,2,0,500,DATA,0\n")
    write_envelope(tmp_path / "e", 2, 1)
    code, _ = run(["decode", "--trace", tmp_path / "t", "--envelope", tmp_path / "e"])
    assert code == 4


def test_out_of_codebook(tmp_path, capsys):
    # 4,3,2,1 is the last of 24 orders; only ranks 0..15 carry data
    write_stream(tmp_path / "t", [4, 3, 2, 1])
    write_envelope(tmp_path / "e", 4, 4)
    code, _ = run(["decode", "--trace", tmp_path / "t", "--envelope", tmp_path / "e"])
    assert code == 5
    assert "package 0" in capsys.readouterr().err


def test_corrupted_package(tmp_path):
    write_stream(tmp_path / "t", [1, 2, 1, 3])
    write_envelope(tmp_path / "e", 3, 2)
    code, _ = run(["decode", "--trace", tmp_path / "t", "--envelope", tmp_path / "e"])
    assert code == 5


def test_malformed_trace_line(tmp_path, capsys):
    write_stream(tmp_path / "t", [1, 2])
    with open(tmp_path / "t", "a") as fh:
        fh.write("oops\n")
    write_envelope(tmp_path / "e", 2, 1)
    code, _ = run(["decode", "--trace", tmp_path / "t", "--envelope", tmp_path / "e"])
    assert code == 6
    assert "line 3" in capsys.readouterr().err


def test_envelope_mismatch(tmp_path, capsys):
    (tmp_path / "s").write_bytes(b"hi")
    trace = tmp_path / "t"
    run(["encode", "--secret", tmp_path / "s", "--ips", IPS, "--out", trace])
    env_path = tmp_path / "t.envelope.json"
    raw = json.loads(env_path.read_text())
    raw["ips"] = raw["ips"][::-1]
    env_path.write_text(json.dumps(raw))
    code, _ = run(["decode", "--trace", trace, "--envelope", env_path])
    assert code == 3
    assert "does not match" in capsys.readouterr().err


def test_experiment_csv(tmp_path):
    argv = ["experiment", "--case", "A,B,C", "--sizes", "2..6", "--sessions", 2,
            "--packets", 3000, "--seed", 11]
    code, csv1 = run(argv)
    assert code == 0
    lines = csv1.splitlines()
    assert lines[0] == "case,package_size,mean_bandwidth_bps,std_bandwidth_bps,mean_utilization_pct"
    assert len(lines) == 16
    _, csv2 = run(argv)
    assert csv1 == csv2
    code, table = run(argv + ["--out", tmp_path / "x.csv"])
    assert (tmp_path / "x.csv").read_text() == csv1
    assert "Utilization" in table


def test_experiment_single_session_std(tmp_path):
    code, text = run(["experiment", "--case", "B", "--sizes", "2,3", "--sessions", 1,
                      "--packets", 2000])
    rows = text.splitlines()[1:]
    assert len(rows) == 2
    assert all(r.split(",")[3] == "0.00" for r in rows)


def test_experiment_bad_case():
    code, _ = run(["experiment", "--case", "Z", "--sessions", 1, "--packets", 1000])
    assert code == 3
