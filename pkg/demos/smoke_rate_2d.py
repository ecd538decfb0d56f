"""2D smoke rate on the unit square with a reachable reference.

The dense 2^-6 reference (27096 interior nodes) is beyond a desk machine,
so this script lifts the node cap and uses 2^-5 (5420 nodes, roughly
235 MB for the matrix and ten minutes of assembly on one core).  Only the
coarse levels 2^-2 .. 2^-4 enter the fit.

    python3 demos/smoke_rate_2d.py [--ref-k 5] [--threads N]
"""

import argparse
import time

from twoscale.studies import smoke_rate_2d

parser = argparse.ArgumentParser()
parser.add_argument("--ref-k", type=int, default=5)
parser.add_argument("--threads", type=int, default=1)
args = parser.parse_args()

t0 = time.perf_counter()
res = smoke_rate_2d(0.5, 2.0, (2.0**-2, 2.0**-3, 2.0**-4), ref_h=2.0**-args.ref_k,
                    threads=args.threads, max_nodes=10**6)
print(f"reference h = 2^-{args.ref_k}, N_ref = {res.details['ref_N']}")
print(f"{'h':>10} {'N':>6} {'error':>12}")
for h, n, e in res.rows:
    print(f"{h:10.5f} {n:6d} {e:12.5e}")
print(f"slope {res.slope:.3f} (r2 {res.r2:.3f}), monotone {res.details['monotone']}")
print(f"wallclock {time.perf_counter() - t0:.0f}s")
