"""
A message across a bad network
==============================

Build a schedule for a short text, push it through a channel with jitter
and loss, and read it back.  Reordering in flight does not matter because
the receiver sorts by timestamp, and a retransmitted copy carries the
original timestamp.
"""

import numpy as np

from stegtorrent import (
    CoverPlan, DataPackage, bits_to_bytes, build_schedule, bytes_to_bits, extract, transmit,
    uniform_configs,
)

secret = bytes_to_bits(b"meet at dawn")
pkg = DataPackage(("10.0.0.1", "10.0.0.2", "10.0.0.3", "10.0.0.4", "10.0.0.5"))

# Some traffic goes to peers outside the package, and some extra packets
# go to package peers in even bursts.  Both are ignored when decoding.
plan = CoverPlan(x_ips=("10.0.9.1", "10.0.9.2"), x_prob=0.3, filler_prob=0.3)
schedule = build_schedule(secret, pkg, cover=plan, seed=7)
print(len(secret), "bits ->", len(schedule), "packets,", schedule.pad_bits, "pad bits")

configs = uniform_configs(schedule.packets.ips, jitter_us=5000, loss_prob=0.1, seed=7)
received = transmit(schedule, configs)

sent = schedule.packets.dest_ips
arrived = received.packets.dest_ips
moved = sum(a != b for a, b in zip(sent, arrived))
print(f"{moved} of {len(sent)} positions differ on arrival,",
      int(received.packets.retransmit.sum()), "retransmitted copies")

report = extract(received)
print(bits_to_bytes(report.bits[:len(secret)]))
print("duplicates dropped:", report.duplicates_dropped)

