"""
Indexing an unsorted column
===========================

Build a learned secondary index over a shuffled array of keys, then run
lower-bound and equality lookups against it. The base array stays where it
is; the index only stores a bit-packed permutation, a small model and
(optionally) a few hash bits per key.
"""

import numpy as np

import lsi
from lsi.datagen import DatasetSpec, generate

# %%
# A million keys from a skewed distribution, with 30% duplicates, unsorted.
keys = generate(DatasetSpec("lognormal_mapped", 1_000_000, seed=1, duplicate_fraction=0.3))
print(keys[:5], keys.dtype)

# %%
# Build with error bound 32 and 8 fingerprint bits per key.
index = lsi.Lsi.build(keys, max_error=32, fingerprint_width=8)
print(f"built in {index.build_seconds:.2f}s")
for part, size in index.size_breakdown().items():
    print(f"  {part:18s} {size:>12,d}")
print(f"  base data          {keys.nbytes:>12,d}")

# %%
# lower_bound returns (base index, rank) of the smallest key >= q.
q = int(np.median(keys)) + 1
idx, rank = index.lower_bound(q)
print(q, "->", int(keys[idx]), "at base position", idx, "rank", rank)

# %%
# Equality returns every base position holding the key.
dup = np.unique(keys, return_counts=True)
hot = int(dup[0][np.argmax(dup[1])])
positions = index.equality(hot)
print(f"key {hot} appears {len(positions)} times")
assert all(keys[p] == hot for p in positions)

# %%
# Lookup statistics: how much of the base data a lookup touched.
stats = lsi.LookupStats()
index.equality(12345, stats)
print(stats)
