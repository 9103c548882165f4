"""Synthetic key sets, SOSD binary I/O and lookup workloads.

Families: ``uniform_dense`` (a shuffled run of consecutive integers),
``uniform_sparse``, ``lognormal_mapped`` (heavy skew), ``clustered`` (dense
clusters with empty gaps) and ``timestamps_with_duplicates`` (bursty
second-resolution timestamps).
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyDatasetError, TruncatedFileError

__all__ = [
    "FAMILIES",
    "DatasetSpec",
    "Workload",
    "generate",
    "make_workload",
    "read_sosd",
    "write_sosd",
]

FAMILIES = (
    "uniform_dense",
    "uniform_sparse",
    "lognormal_mapped",
    "clustered",
    "timestamps_with_duplicates",
)
WORKLOADS = ("lower_bound_absent", "equality_present")

_U64_MAX = np.iinfo(np.uint64).max


@dataclass(frozen=True)
class DatasetSpec:
    family: str
    n: int
    seed: int = 0
    duplicate_fraction: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if not 0.0 <= self.duplicate_fraction < 1.0:
            raise ConfigError(f"duplicate_fraction must be in [0, 1), got {self.duplicate_fraction}")

    @property
    def name(self):
        if self.duplicate_fraction:
            return f"{self.family}_{self.n}_d{self.duplicate_fraction:g}"
        return f"{self.family}_{self.n}"


@dataclass
class Workload:
    kind: str
    queries: np.ndarray
    expected: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return int(self.queries.shape[0])


def _distinct(draw, m, rng):
    """Draw until ``m`` distinct keys are collected; returns them sorted."""
    keys = np.unique(draw(rng, m))
    while keys.shape[0] < m:
        extra = draw(rng, max(16, 2 * (m - keys.shape[0])))
        keys = np.unique(np.concatenate([keys, extra]))
    if keys.shape[0] > m:
        keys = np.sort(rng.choice(keys, m, replace=False))
    return keys


def _uniform_sparse(rng, size):
    return rng.integers(0, _U64_MAX, size, dtype=np.uint64, endpoint=True)


def _lognormal(rng, size):
    x = rng.lognormal(mean=0.0, sigma=2.0, size=size) * 1e12
    return np.minimum(x, 1.8e19).astype(np.uint64)


def _clustered_draw(centers, spread):
    def draw(rng, size):
        which = rng.integers(0, centers.shape[0], size)
        x = centers[which] + rng.normal(0.0, 1.0, size) * spread[which]
        return np.clip(x, 0.0, 1.8e19).astype(np.uint64)

    return draw


def _timestamps(rng, m):
    # edit-time seconds: bursty gaps between consecutive distinct seconds
    gaps = rng.geometric(0.3, size=m).astype(np.uint64)
    busy = rng.random(m) < 0.05
    gaps[busy] += rng.integers(30, 3600, busy.sum()).astype(np.uint64)
    return np.uint64(1_000_000_000) + np.cumsum(gaps, dtype=np.uint64)


def _distinct_keys(spec, m, rng):
    family = spec.family
    if family == "uniform_dense":
        start = rng.integers(0, 2**48, dtype=np.uint64)
        return start + np.arange(m, dtype=np.uint64)
    if family == "uniform_sparse":
        return _distinct(_uniform_sparse, m, rng)
    if family == "lognormal_mapped":
        return _distinct(_lognormal, m, rng)
    if family == "clustered":
        k = max(1, min(1000, m // 1000))
        centers = rng.uniform(0.0, 1.6e19, k)
        spread = rng.uniform(1e9, 1e13, k)
        return _distinct(_clustered_draw(centers, spread), m, rng)
    return _timestamps(rng, m)


def generate(spec):
    """Deterministic unsorted key array for ``spec``.

    Exactly ``n - round(n * duplicate_fraction)`` keys are distinct; the extra
    copies are sampled from the distinct keys (bursty for timestamps).
    """
    rng = np.random.default_rng(spec.seed)
    m = max(1, spec.n - int(round(spec.n * spec.duplicate_fraction)))
    distinct = _distinct_keys(spec, m, rng)
    extra = spec.n - m
    if extra:
        if spec.family == "timestamps_with_duplicates":
            # concentrate copies on a few busy seconds
            weights = rng.pareto(1.2, m) + 1e-3
            picks = rng.choice(m, extra, p=weights / weights.sum())
        else:
            picks = rng.integers(0, m, extra)
        keys = np.concatenate([distinct, distinct[picks]])
    else:
        keys = distinct
    return rng.permutation(keys).astype(np.uint64, copy=False)


def write_sosd(path, keys):
    """Write ``keys`` as a little-endian u64 count followed by u64 keys."""
    keys = np.ascontiguousarray(keys, dtype="<u8")
    with open(path, "wb") as f:
        f.write(np.uint64(keys.shape[0]).astype("<u8").tobytes())
        f.write(keys.tobytes())


def read_sosd(path):
    size = os.path.getsize(path)
    with open(path, "rb") as f:
        header = f.read(8)
        if len(header) < 8:
            raise TruncatedFileError(f"{path}: missing count header")
        count = int(np.frombuffer(header, dtype="<u8")[0])
        if size != 8 + 8 * count:
            raise TruncatedFileError(
                f"{path}: header announces {count} keys ({8 + 8 * count} bytes), file has {size}"
            )
        keys = np.fromfile(f, dtype="<u8", count=count)
    return keys.astype(np.uint64, copy=False)


def oracle_lower_bound(keys, queries):
    """Base index of the first occurrence of the smallest key >= q, else -1."""
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    r = np.searchsorted(sorted_keys, queries, side="left")
    hit = r < keys.shape[0]
    return np.where(hit, order[np.minimum(r, keys.shape[0] - 1)], -1).astype(np.int64)


def oracle_signatures(keys, queries, kind):
    """Per-query result signatures (see :mod:`lsi.bench`) from a sorted copy."""
    keys = np.asarray(keys, dtype=np.uint64)
    queries = np.asarray(queries, dtype=np.uint64)
    if kind == "lower_bound":
        return (oracle_lower_bound(keys, queries) + 1).astype(np.uint64)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    lo = np.searchsorted(sorted_keys, queries, side="left")
    hi = np.searchsorted(sorted_keys, queries, side="right")
    csum = np.concatenate([np.zeros(1, dtype=np.uint64),
                           np.cumsum(order.astype(np.uint64) + np.uint64(1), dtype=np.uint64)])
    with np.errstate(over="ignore"):
        return (csum[hi] - csum[lo]).astype(np.uint64)


def make_workload(keys, kind, fraction_or_count=0.1, seed=0):
    """Split ``keys`` into (indexed keys, :class:`Workload`).

    ``lower_bound_absent`` removes a random ``fraction_or_count`` of the keys,
    every copy of each removed key included, and queries the removed keys.
    ``equality_present`` leaves the keys intact and samples queries from them.
    ``Workload.expected`` holds the oracle signature of every query.
    A float in (0, 1) is a fraction of ``len(keys)``; an int is a count.
    """
    keys = np.asarray(keys, dtype=np.uint64)
    n = keys.shape[0]
    if n == 0:
        raise EmptyDatasetError()
    if kind not in WORKLOADS:
        raise ConfigError(f"unknown workload {kind!r}; expected one of {WORKLOADS}")
    if isinstance(fraction_or_count, (int, np.integer)) and not isinstance(fraction_or_count, bool):
        count = int(fraction_or_count)
        if count < 1:
            raise ConfigError(f"query count must be >= 1, got {count}")
    else:
        frac = float(fraction_or_count)
        if not 0.0 < frac < 1.0:
            raise ConfigError(f"fraction must be in (0, 1), got {frac}")
        count = max(1, int(round(n * frac)))
    rng = np.random.default_rng(seed)

    if kind == "equality_present":
        queries = keys[rng.integers(0, n, count)]
        return keys, with_expected(keys, Workload(kind, queries))

    if count >= n:
        raise ConfigError("cannot remove every key from the dataset")
    removed = np.unique(keys[rng.choice(n, count, replace=False)])
    keep = ~np.isin(keys, removed)
    indexed = keys[keep]
    if indexed.shape[0] == 0:
        raise ConfigError("workload removed every key from the dataset")
    queries = rng.permutation(removed)
    return indexed, with_expected(indexed, Workload(kind, queries))


def with_expected(indexed, workload):
    """Attach oracle signatures to ``workload`` (for validation runs)."""
    kind = "lower_bound" if workload.kind == "lower_bound_absent" else "equality"
    workload.expected = oracle_signatures(indexed, workload.queries, kind)
    return workload
