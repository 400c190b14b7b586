"""
Bandwidth and utilization over simulated sessions
=================================================

Each session is cover traffic from one client to its peers, drawn from the
`average` preset.  Packages are built from the session's own packets, so
the hidden channel costs no extra traffic; it only changes send order.

Case A builds packages from every peer, case B from the n busiest, case C
from the six busiest.  This run is small; the CLI `experiment` command
(or the acceptance tests) run the full 20 x 500 000 version.
"""

from stegtorrent import SessionConfig, preset, run_experiment, table_report

session = SessionConfig(preset("average"), total_packets=50_000)
results = run_experiment(sessions=3, session=session, master_seed=1)
text, csv_text = table_report(results)
print(text)

# Utilization is the share of packets that ended up inside a package.
# Larger packages hold more bits each but are harder to fill, since every
# peer of the package has to show up before the package can close.
for r in results:
    if r.case == "A":
        hold = sum(m.mean_hold_us for m in r.sessions) / len(r.sessions)
        print(f"A n={r.package_size}: packets wait {hold / 1000:.1f} ms on average")
