"""
Filtering a linear scan with hash fingerprints
==============================================

For equality lookups the index can skip binary search: it scans the model's
rank range and only dereferences a base key when the stored hash bits match
the query's. With w bits, an absent key costs about range / 2**w base
accesses.
"""

from lsi import LookupStats, build
from lsi.datagen import DatasetSpec, generate, make_workload

keys = generate(DatasetSpec("uniform_sparse", 500_000, seed=3))
indexed, workload = make_workload(keys, "lower_bound_absent", 20_000, seed=4)

# %%
print(f"{'w':>3} {'probes':>10} {'base reads':>11} {'rate':>9} {'2^-w':>9}")
for w in (1, 2, 4, 8, 16):
    stats = LookupStats()
    build(indexed, 256, w).equality_many(workload.queries, stats)
    rate = stats.fingerprint_false_positives / stats.fingerprint_probes
    print(f"{w:>3} {stats.fingerprint_probes:>10,d} {stats.base_accesses:>11,d} "
          f"{rate:>9.5f} {2.0**-w:>9.5f}")

# %%
# Width 0 falls back to binary search inside the range.
stats = LookupStats()
build(indexed, 256, 0).equality_many(workload.queries, stats)
print("binary search base reads per lookup:", stats.base_accesses / len(workload))
