"""Command line front end.

    stegtorrent capacity   [--sizes 2..6]
    stegtorrent encode     --secret FILE --ips IP,IP,... --out TRACE [...]
    stegtorrent decode     --trace TRACE --envelope ENV [--out FILE]
    stegtorrent experiment [--case A,B,C] [--sizes 2..6] [--sessions 20] [...]

Exit codes: 0 ok, 2 I/O error, 3 invalid input, 4 ambiguous timestamps,
5 corrupted or out-of-codebook package, 6 malformed trace line.
"""
from __future__ import annotations

import argparse
import sys
from math import factorial

from . import lehmer
from .channel import transmit, uniform_configs
from .errors import (
    AmbiguousOrderError,
    DomainError,
    OutOfCodebookError,
    PackageCorruptionError,
    StegTorrentError,
    TraceFormatError,
)
from .experiment import DEFAULT_RATE_PPS, ChannelSettings, run_experiment, table_report
from .packets import DataPackage
from .receiver import ReceivedStream, extract
from .rng import derive_seed
from .sender import CoverPlan, RunPolicy, bits_to_bytes, build_schedule, bytes_to_bits
from .tracefile import Envelope, read_trace, write_trace
from .traffic import PRESETS, SessionConfig, preset

EXIT_IO = 2
EXIT_DOMAIN = 3
EXIT_AMBIGUOUS = 4
EXIT_CODEBOOK = 5
EXIT_TRACE = 6


def _sizes(text):
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",") if x.strip()]


def _csv_list(text):
    return [x.strip() for x in text.split(",") if x.strip()]


def _parser():
    p = argparse.ArgumentParser(prog="stegtorrent", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("capacity", help="bits per package for each package size")
    c.add_argument("--sizes", type=_sizes, default=list(range(2, 7)))

    e = sub.add_parser("encode", help="hide a secret file in a simulated packet trace")
    e.add_argument("--secret", required=True, help="file whose bytes are hidden")
    e.add_argument("--ips", type=_csv_list, required=True, help="package IPs, shared-secret order")
    e.add_argument("--bits", action="store_true", help="secret file holds 0/1 text, not raw bytes")
    e.add_argument("--package-size", type=int, default=None)
    e.add_argument("--x-ips", type=_csv_list, default=[], help="cover IPs outside the package")
    e.add_argument("--x-prob", type=float, default=0.0)
    e.add_argument("--filler-prob", type=float, default=0.0)
    e.add_argument("--symbol-run", type=int, default=1, help="odd packets per symbol")
    e.add_argument("--rate-pps", type=float, default=DEFAULT_RATE_PPS)
    e.add_argument("--base-delay-us", type=int, default=30_000)
    e.add_argument("--jitter-us", type=int, default=0)
    e.add_argument("--loss", type=float, default=0.0)
    e.add_argument("--rto-us", type=int, default=100_000)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", required=True, help="trace file to write")
    e.add_argument("--envelope", default=None, help="envelope path (default OUT.envelope.json)")

    d = sub.add_parser("decode", help="recover a secret from a trace")
    d.add_argument("--trace", required=True)
    d.add_argument("--envelope", required=True)
    d.add_argument("--out", default=None, help="output file (default stdout)")
    d.add_argument("--bits", action="store_true", help="write the recovered bits as 0/1 text")

    x = sub.add_parser("experiment", help="bandwidth/utilization table over simulated sessions")
    x.add_argument("--case", type=_csv_list, default=["A", "B", "C"])
    x.add_argument("--sizes", type=_sizes, default=list(range(2, 7)))
    x.add_argument("--sessions", type=int, default=20)
    x.add_argument("--packets", type=int, default=500_000)
    x.add_argument("--preset", choices=sorted(PRESETS), default="average")
    x.add_argument("--rate-pps", type=float, default=DEFAULT_RATE_PPS)
    x.add_argument("--jitter-us", type=int, default=2_000)
    x.add_argument("--loss", type=float, default=0.01)
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--workers", type=int, default=1)
    x.add_argument("--out", default=None, help="CSV path (default: CSV to stdout)")
    return p


def cmd_capacity(args, out):
    out.write(f"{'n':>3} {'n!':>20} {'bits':>5}\n")
    for n in args.sizes:
        out.write(f"{n:>3} {factorial(n):>20} {lehmer.capacity_bits(n):>5}\n")
    return 0


def cmd_encode(args, out):
    with open(args.secret, "rb") as fh:
        data = fh.read()
    if args.bits:
        bits = "".join(data.decode("ascii", "replace").split())
        if set(bits) - {"0", "1"}:
            raise DomainError("--bits secret may only contain 0 and 1")
    else:
        bits = bytes_to_bits(data)
    if not bits:
        raise DomainError("secret file is empty")
    pkg = DataPackage(tuple(args.ips), args.package_size)
    policy = RunPolicy(symbol_run_length=args.symbol_run)
    cover = CoverPlan(x_ips=tuple(args.x_ips), x_prob=args.x_prob, filler_prob=args.filler_prob)
    schedule = build_schedule(bits, pkg, policy, cover, args.rate_pps, args.seed)
    configs = uniform_configs(
        schedule.packets.ips,
        base_delay_us=args.base_delay_us,
        jitter_us=args.jitter_us,
        loss_prob=args.loss,
        retransmit_timeout_us=args.rto_us,
        seed=derive_seed(args.seed, "channel"),
    )
    received = transmit(schedule, configs)
    env = Envelope(
        package_size=pkg.size,
        ips=list(pkg.ips),
        secret_bits=len(bits),
        pad_bits=schedule.pad_bits,
        nonce=format(derive_seed(args.seed, "nonce"), "08x"),
    )
    env_path = args.envelope or args.out + ".envelope.json"
    write_trace(args.out, received.packets, env.check_value())
    with open(env_path, "w", encoding="utf-8") as fh:
        fh.write(env.dumps())
    sys.stderr.write(
        f"encoded {len(bits)} bits in {len(schedule.package_boundaries) - 1} packages, "
        f"{len(received.packets)} packets -> {args.out}, envelope {env_path}\n"
    )
    return 0


def cmd_decode(args, out):
    with open(args.envelope, encoding="utf-8") as fh:
        env = Envelope.loads(fh.read())
    batch, check = read_trace(args.trace)
    if check is not None and check != env.check_value():
        raise DomainError("envelope IP order does not match the trace")
    if check is None and len(batch):
        absent = [ip for ip in env.ips if ip not in batch.ips]
        if absent and len(env.ips) == env.package_size:
            raise DomainError(f"envelope IPs missing from the trace: {absent}")
    report = extract(ReceivedStream(batch, env.package))
    bits = report.bits[:env.secret_bits]
    complete = len(bits) == env.secret_bits
    if args.bits:
        data = bits.encode("ascii")
    else:
        data = bits_to_bytes(bits[:len(bits) - len(bits) % 8])
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        out.buffer.write(data) if hasattr(out, "buffer") else out.write(data.decode("latin-1"))
    err = sys.stderr
    err.write(
        f"packages decoded: {report.packages_decoded}\n"
        f"packets: {report.packets_total} unique, {report.duplicates_dropped} duplicate copies dropped\n"
        f"even runs discarded: {report.symbols_discarded_even_runs}\n"
        f"packets outside the package: {report.packets_out_of_package}\n"
    )
    if report.incomplete_tail:
        tail = ",".join(env.ips[s] for s in report.incomplete_tail)
        err.write(f"incomplete tail package: {tail}\n")
    if not complete:
        err.write(
            f"incomplete: recovered {len(bits)} of {env.secret_bits} secret bits\n"
        )
    return 0


def cmd_experiment(args, out):
    session = SessionConfig(preset(args.preset), args.packets, args.rate_pps)
    channel = ChannelSettings(jitter_us=args.jitter_us, loss_prob=args.loss)
    results = run_experiment(
        [c.upper() for c in args.case], args.sizes, args.sessions, session, channel,
        args.seed, args.workers,
    )
    text, csv_text = table_report(results)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(csv_text)
        out.write(text)
    else:
        out.write(csv_text)
    return 0


COMMANDS = {
    "capacity": cmd_capacity,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "experiment": cmd_experiment,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = _parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except TraceFormatError as exc:
        code, msg = EXIT_TRACE, exc
    except AmbiguousOrderError as exc:
        code, msg = EXIT_AMBIGUOUS, exc
    except (OutOfCodebookError, PackageCorruptionError) as exc:
        code, msg = EXIT_CODEBOOK, exc
    except (StegTorrentError, ValueError) as exc:
        code, msg = EXIT_DOMAIN, exc
    except OSError as exc:
        code, msg = EXIT_IO, exc
    sys.stderr.write(f"stegtorrent {args.command}: {msg}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
