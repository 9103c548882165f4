"""
Measuring lookup latency
========================

The same harness behind ``lsi-bench``: equality lookups on a skewed dataset,
sweeping the error bound and fingerprint width, with two baselines for
reference. Every row carries a checksum of all results; they must agree.
"""

import sys

from lsi.bench import BenchConfig, emit_csv, run

cfg = BenchConfig(
    dataset="lognormal_mapped",
    n=1_000_000,
    indexes=("lsi", "sorted_pairs", "robin_hash"),
    epsilons=(4, 64, 256),
    widths=(0, 4, 16),
    workload="equality",
    reps=3,
    validate=True,
)
reports = run(cfg)

# %%
for r in reports:
    print(f"{r.index:12s} eps={r.epsilon:<4d} w={r.width:<3d} {r.total_bytes / 1e6:8.2f} MB "
          f"mean {r.mean_ns:7.1f} ns  p99 {r.p99_ns:7.1f} ns")
assert len({r.checksum for r in reports}) == 1

# %%
if len(sys.argv) > 1:
    emit_csv(reports, sys.argv[1])
