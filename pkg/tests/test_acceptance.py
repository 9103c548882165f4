"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that the ``acceptance criteria`` section of
the pytest terminal summary prints. Tolerances are the stated ones; nothing
is relaxed to make a criterion pass.
"""

import contextlib
import itertools
import math
import time

import numpy as np
import pytest

from lsi import LookupStats, access_bound, build, size_breakdown
from lsi.approx_index import build_cdf, build_hist_tree, fit_spline, SplineModel
from lsi.baselines import SortedPairsIndex
from lsi.bench import CSV_HEADER, TIMING_COLUMNS, BenchConfig, emit_csv, run, signatures
from lsi.datagen import DatasetSpec, generate, make_workload
from lsi.permutation import packed_size_bits, theoretic_bound_bits

import conftest
from conftest import mixed_queries

EPSILONS = (4, 16, 64, 256)
WIDTHS = (0, 1, 2, 4, 8, 16)
MODELS = ("spline", "cht")
FAMILIES = ("uniform_sparse", "lognormal_mapped", "clustered", "timestamps_with_duplicates")


@contextlib.contextmanager
def criterion(number, title):
    info = {}
    t0 = time.perf_counter()
    try:
        yield info
    except BaseException as e:
        line = f"C{number} FAIL  {title}: {type(e).__name__}: {str(e).splitlines()[0] if str(e) else ''}"
        conftest.ACCEPTANCE[number] = line
        print(line)
        raise
    detail = info.get("detail", "")
    line = f"C{number} PASS  {title} ({time.perf_counter() - t0:.1f}s){': ' + detail if detail else ''}"
    conftest.ACCEPTANCE[number] = line
    print(line)


def oracle(keys, queries):
    """Lower-bound and equality answers from a stable sort of the base data."""
    order = np.argsort(keys, kind="stable")
    s = keys[order]
    lo = np.searchsorted(s, queries, side="left")
    hi = np.searchsorted(s, queries, side="right")
    n = keys.shape[0]
    lb_idx = np.where(lo < n, order[np.minimum(lo, n - 1)], -1)
    csum = np.concatenate([[0], np.cumsum(order.astype(object) + 1)])
    eq_sig = np.array([int(csum[h] - csum[l]) % 2**64 for l, h in zip(lo, hi)], dtype=np.uint64)
    return lb_idx, np.where(lo < n, lo, -1), np.where(hi > lo, lo, -1), hi - lo, eq_sig


# -- 1 ---------------------------------------------------------------------------


@pytest.mark.slow
def test_c1_oracle_matrix():
    with criterion(1, "oracle correctness matrix") as info:
        t0 = time.perf_counter()
        instances = mismatches = 0
        rng = np.random.default_rng(2024)
        for n, family, dup in itertools.product((1, 2, 10**3, 10**4), FAMILIES, (0.0, 0.3, 0.9)):
            keys = generate(DatasetSpec(family, n, int(rng.integers(1 << 30)), dup))
            qs = mixed_queries(keys, rng, 150)
            lb_idx, lb_rank, eq_start, eq_count, eq_sig = oracle(keys, qs)
            lb_sig = (lb_idx + 1).astype(np.uint64)
            for eps, width, kind in itertools.product(EPSILONS, WIDTHS, MODELS):
                lsi = build(keys, eps, width, kind)
                instances += 1
                idx, rank = lsi.lower_bound_many(qs)
                start, count = lsi.equality_many(qs)
                bad = (
                    np.count_nonzero(idx != lb_idx)
                    + np.count_nonzero(rank != lb_rank)
                    + np.count_nonzero(start != eq_start)
                    + np.count_nonzero(count != eq_count)
                    + np.count_nonzero(signatures(lsi, "lower_bound", qs) != lb_sig)
                    + np.count_nonzero(signatures(lsi, "equality", qs) != eq_sig)
                )
                mismatches += bad
                assert bad == 0, f"n={n} {family} dup={dup} eps={eps} w={width} {kind}"
        elapsed = time.perf_counter() - t0
        assert instances >= 1000
        assert mismatches == 0
        assert elapsed <= 300, f"matrix took {elapsed:.0f}s"
        info["detail"] = f"{instances} instances, 0 mismatches"


# -- 2 ---------------------------------------------------------------------------


def test_c2_error_bound_exhaustive():
    with criterion(2, "error-bound invariant at n=1e5") as info:
        checked = 0
        for family in FAMILIES:
            keys = np.sort(generate(DatasetSpec(family, 10**5, 3, 0.3)))
            cdf = build_cdf(keys)
            # independent first-occurrence ranks
            uniq, first = np.unique(keys, return_index=True)
            assert np.array_equal(cdf.keys, uniq) and np.array_equal(cdf.ranks, first)
            for eps in EPSILONS:
                kk, kr = fit_spline(cdf, eps)
                pred = SplineModel(kk, kr, eps, cdf.n).predict_many(uniq)
                worst = np.max(np.abs(pred - first))
                assert worst <= eps, f"{family} eps={eps}: deviation {worst}"
                tree = build_hist_tree(cdf, cdf.n, eps, 8)
                for _, _, lo, count in tree.terminal_bins():
                    if count > eps:
                        distinct = np.unique(keys[lo:lo + count]).size
                        assert distinct == 1, f"{family} eps={eps}: bin of {count} keys"
                checked += uniq.size
        info["detail"] = f"{checked} distinct keys checked"


# -- 3 ---------------------------------------------------------------------------


@pytest.mark.slow
def test_c3_space_headline():
    with criterion(3, "space: LSI(eps=8, w=0) <= sorted pairs / 4 at n=1e7") as info:
        t0 = time.perf_counter()
        keys = generate(DatasetSpec("uniform_sparse", 10**7, 7))
        assert np.unique(keys).size == keys.size
        sizes = size_breakdown(build(keys, 8, 0))
        pairs = 16 * keys.size
        elapsed = time.perf_counter() - t0
        assert sizes["total_bytes"] <= pairs / 4, sizes
        assert elapsed <= 120
        info["detail"] = (f"total={sizes['total_bytes']} (perm {sizes['permutation_bytes']}, "
                          f"model {sizes['model_bytes']}), ratio {pairs / sizes['total_bytes']:.2f}x")


# -- 4 ---------------------------------------------------------------------------


@pytest.mark.slow
def test_c4_space_breakdown():
    with criterion(4, "space breakdown at n=1e7 (lognormal)") as info:
        keys = generate(DatasetSpec("lognormal_mapped", 10**7, 8))
        s4 = size_breakdown(build(keys, 4, 0))
        s8 = size_breakdown(build(keys, 8, 0))
        share = s8["permutation_bytes"] / s8["total_bytes"]
        assert s4["model_bytes"] > s8["model_bytes"]
        assert s4["permutation_bytes"] == s8["permutation_bytes"]
        assert share >= 0.5
        info["detail"] = (f"model {s4['model_bytes']} > {s8['model_bytes']}, "
                          f"perm {s8['permutation_bytes']}, perm share {share:.1%}")


# -- 5 ---------------------------------------------------------------------------


def test_c5_permutation_bound():
    with criterion(5, "permutation compression bound") as info:
        for n in (10**3, 10**4, 10**5, 10**6):
            assert theoretic_bound_bits(n) <= packed_size_bits(n)
        n = 10**6
        exact = math.lgamma(n + 1) / math.log(2)
        gap = (packed_size_bits(n) - theoretic_bound_bits(n)) / n
        info["detail"] = f"gap at 1e6 = {gap:.4f} bits/key"
        assert theoretic_bound_bits(n) == pytest.approx(exact, rel=1e-12)
        assert 1.40 <= gap <= 1.45, (
            f"per-key gap {gap:.4f} outside [1.40, 1.45]: packed width is ceil(log2 n) = "
            f"{packed_size_bits(n) // n} bits, log2(n!)/n = {theoretic_bound_bits(n) / n:.4f}"
        )


# -- 6 ---------------------------------------------------------------------------


def test_c6_fingerprint_false_positives():
    with criterion(6, "fingerprint false-positive rate") as info:
        t0 = time.perf_counter()
        keys = generate(DatasetSpec("uniform_sparse", 10**6, 9))
        indexed, wl = make_workload(keys, "lower_bound_absent", 10**5, seed=10)
        assert len(wl) >= 10**5

        stats = LookupStats()
        start, count = build(indexed, 256, 8).equality_many(wl.queries, stats)
        assert np.all(count == 0)
        trials = stats.fingerprint_probes
        rate = stats.fingerprint_false_positives / trials
        p = 1 / 256
        sigma = math.sqrt(p * (1 - p) / trials)
        assert abs(rate - p) <= 3 * sigma, f"rate {rate:.6f} vs {p:.6f} (sigma {sigma:.2e})"

        bound = access_bound(256)
        plain = build(indexed, 256, 0)
        worst = 0
        for q in wl.queries.tolist():
            s = LookupStats()
            assert plain.equality(q, s) == []
            worst = max(worst, s.base_accesses)
        assert worst <= bound
        assert time.perf_counter() - t0 <= 60
        info["detail"] = (f"rate {rate:.6f} over {trials} probes (1/256 = {p:.6f}, 3 sigma "
                          f"{3 * sigma:.1e}); width 0 max accesses {worst} <= {bound}")


# -- 7 ---------------------------------------------------------------------------


def test_c7_access_bound():
    with criterion(7, "lower_bound base-access bound") as info:
        rng = np.random.default_rng(77)
        lookups = 0
        for family, dup in (("lognormal_mapped", 0.0), ("timestamps_with_duplicates", 0.9)):
            keys = generate(DatasetSpec(family, 10**5, 11, dup))
            qs = mixed_queries(keys, rng, 5_000)[:10**4]
            for eps, kind in itertools.product(EPSILONS, MODELS):
                lsi = build(keys, eps, 0, kind)
                bound = access_bound(eps)
                for q in qs.tolist():
                    s = LookupStats()
                    lsi.lower_bound(q, s)
                    assert s.base_accesses <= bound, f"{family} eps={eps} {kind} q={q}"
                    lookups += 1
        info["detail"] = f"{lookups} lookups, 0 violations"


# -- 8 ---------------------------------------------------------------------------


@pytest.mark.slow
def test_c8_fingerprint_scan_beats_binary_search():
    with criterion(8, "fingerprint scan faster than binary search for some eps") as info:
        cfg = BenchConfig(dataset="lognormal_mapped", n=10**6, seed=42, indexes=("lsi",),
                          epsilons=EPSILONS, widths=(0, 4, 16), workload="equality", reps=3)
        reports = run(cfg)
        mean = {(r.epsilon, r.width): r.mean_ns for r in reports}
        table = "; ".join(
            f"eps={e}: " + "/".join(f"{mean[e, w]:.0f}" for w in (0, 4, 16)) for e in EPSILONS
        )
        info["detail"] = f"mean ns (w0/w4/w16) {table}"
        print(info["detail"])
        winners = [e for e in EPSILONS if min(mean[e, 4], mean[e, 16]) < mean[e, 0]]
        assert winners, info["detail"]
        info["detail"] += f"; faster at eps {winners}"


# -- 9 ---------------------------------------------------------------------------


def _without_timing(path):
    drop = [CSV_HEADER.index(c) for c in TIMING_COLUMNS]
    rows = []
    for line in path.read_text().splitlines():
        cells = line.split(",")
        rows.append([c for i, c in enumerate(cells) if i not in drop])
    return rows


def test_c9_determinism(tmp_path):
    with criterion(9, "deterministic bench output and cross-index checksums") as info:
        common = dict(dataset="timestamps_with_duplicates", n=50_000, seed=3, duplicate_fraction=0.3,
                      epsilons=(4, 64), widths=(0, 8), reps=1)
        for workload, indexes in (("equality", ("lsi", "sorted_pairs", "robin_hash")),
                                  ("lower_bound", ("lsi", "sorted_pairs"))):
            paths = []
            for i in range(2):
                cfg = BenchConfig(indexes=indexes, workload=workload, **common)
                paths.append(emit_csv(run(cfg), tmp_path / f"{workload}{i}.csv"))
            a, b = (_without_timing(p) for p in paths)
            assert a == b
            checksums = {row[-1] for row in a[1:]}
            assert len(checksums) == 1, f"{workload}: {checksums}"
        info["detail"] = "identical non-timing columns, one checksum per workload"
