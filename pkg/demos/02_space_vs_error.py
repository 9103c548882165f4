"""
Trading model size for lookup work
==================================

The error bound controls how many knots the spline needs. Larger bounds give
smaller models but wider search ranges. The permutation does not depend on
the bound at all, so it dominates the footprint once the model is small.
"""

from lsi import access_bound, build, packed_size_bits, theoretic_bound_bits
from lsi.datagen import DatasetSpec, generate

keys = generate(DatasetSpec("lognormal_mapped", 2_000_000, seed=7))
n = keys.size

# %%
print(f"{'eps':>5} {'model':>12} {'perm':>12} {'share':>7} {'max probes':>10}")
for eps in (4, 8, 16, 64, 256):
    s = build(keys, eps, 0).size_breakdown()
    share = s["permutation_bytes"] / s["total_bytes"]
    print(f"{eps:>5} {s['model_bytes']:>12,d} {s['permutation_bytes']:>12,d} {share:>7.1%} "
          f"{access_bound(eps):>10}")

# %%
# The model kind can be swapped: a radix histogram tree instead of the spline.
for kind in ("spline", "cht"):
    s = build(keys, 64, 0, kind).size_breakdown()
    print(kind, s["model_bytes"])

# %%
# How far is ceil(log2 n)-bit packing from log2(n!) bits?
for m in (10**3, 10**6, 10**9):
    gap = (packed_size_bits(m) - theoretic_bound_bits(m)) / m
    print(f"n={m:>13,d} width={packed_size_bits(m) // m:2d} bits, gap {gap:.3f} bits/key")

# Sorted (key, position) pairs would cost 16 bytes per key.
print(f"sorted pairs: {16 * n:,d} bytes")
