"""Reference secondary indexes used as benchmark baselines.

``SortedPairsIndex`` stores sorted ``(key, base index)`` pairs, the payload a
B+-tree keeps in its leaves. ``RobinHoodTable`` is a build-once open-addressing
hash table with robin-hood displacement; it answers equality lookups only.
"""

import time

import numba as nb
import numpy as np

from .errors import EmptyDatasetError
from .fingerprint import fmix64, fmix64_array

__all__ = [
    "RobinHoodTable",
    "SortedPairsIndex",
    "robin_build",
    "robin_equality",
    "sorted_pairs_build",
    "sorted_pairs_lower_bound",
]


def _as_keys(base):
    base = np.asarray(base, dtype=np.uint64)
    if base.ndim != 1 or base.shape[0] == 0:
        raise EmptyDatasetError()
    return base


@nb.njit(cache=True, inline="always")
def _pairs_search(keys, q):
    a = 0
    b = keys.shape[0]
    while a < b:
        mid = (a + b) >> 1
        if keys[mid] < q:
            a = mid + 1
        else:
            b = mid
    return a


@nb.njit(cache=True)
def pairs_lower_bound_sig(aux, args, q):
    keys, values = args
    r = _pairs_search(keys, q)
    if r == keys.shape[0]:
        return np.uint64(0)
    return np.uint64(values[r] + 1)


@nb.njit(cache=True)
def pairs_equality_sig(aux, args, q):
    keys, values = args
    r = _pairs_search(keys, q)
    sig = np.uint64(0)
    while r < keys.shape[0] and keys[r] == q:
        sig += np.uint64(values[r] + 1)
        r += 1
    return sig


class SortedPairsIndex:
    """Stable-sorted ``(key, base index)`` pairs, 16 bytes per entry."""

    kind = "sorted_pairs"

    def __init__(self, keys, values, build_seconds=0.0):
        self.keys = keys
        self.values = values
        self.build_seconds = build_seconds

    @classmethod
    def build(cls, base):
        base = _as_keys(base)
        t0 = time.perf_counter()
        order = np.argsort(base, kind="stable")
        keys = base[order]
        values = order.astype(np.uint64)
        return cls(keys, values, time.perf_counter() - t0)

    @property
    def n(self):
        return int(self.keys.shape[0])

    @property
    def pairs(self):
        return list(zip(self.keys.tolist(), self.values.tolist()))

    def lower_bound(self, q):
        r = int(np.searchsorted(self.keys, np.uint64(q), side="left"))
        if r == self.n:
            return None
        return int(self.values[r]), r

    def equality(self, q):
        q = np.uint64(q)
        lo = np.searchsorted(self.keys, q, side="left")
        hi = np.searchsorted(self.keys, q, side="right")
        return self.values[lo:hi].astype(np.int64).tolist()

    def signature_kernel(self, workload):
        fn = pairs_lower_bound_sig if workload == "lower_bound" else pairs_equality_sig
        return fn, _noop, (self.keys, self.values)

    def size_bytes(self):
        return int(self.keys.nbytes + self.values.nbytes)

    def size_breakdown(self):
        return {"model_bytes": 0, "permutation_bytes": 0, "fingerprint_bytes": 0,
                "total_bytes": self.size_bytes()}


@nb.njit(cache=True)
def _noop(*args):
    return 0


# --------------------------------------------------------------------------
# robin-hood hashing

_EMPTY = -1


@nb.njit(cache=True)
def _robin_insert_all(base, slot_keys, slot_vals, slot_dist):
    mask = slot_keys.shape[0] - 1
    for i in range(base.shape[0]):
        key = base[i]
        val = np.int64(i)
        dist = np.int32(0)
        pos = np.int64(fmix64(key) & np.uint64(mask))
        while True:
            d = slot_dist[pos]
            if d == _EMPTY:
                slot_keys[pos] = key
                slot_vals[pos] = val
                slot_dist[pos] = dist
                break
            if d < dist:
                # steal the slot from the richer entry and carry it onward
                tk = slot_keys[pos]
                tv = slot_vals[pos]
                slot_keys[pos] = key
                slot_vals[pos] = val
                slot_dist[pos] = dist
                key = tk
                val = tv
                dist = d
            pos = (pos + 1) & mask
            dist += 1


@nb.njit(cache=True, inline="always")
def _robin_scan(slot_keys, slot_vals, slot_dist, q, out):
    mask = slot_keys.shape[0] - 1
    pos = np.int64(fmix64(q) & np.uint64(mask))
    dist = 0
    count = 0
    sig = np.uint64(0)
    while True:
        d = slot_dist[pos]
        if d == _EMPTY or d < dist:
            break
        if slot_keys[pos] == q:
            if count < out.shape[0]:
                out[count] = slot_vals[pos]
            count += 1
            sig += np.uint64(slot_vals[pos] + 1)
        pos = (pos + 1) & mask
        dist += 1
    return count, sig


@nb.njit(cache=True)
def robin_equality_sig(aux, args, q):
    slot_keys, slot_vals, slot_dist, scratch = args
    return _robin_scan(slot_keys, slot_vals, slot_dist, q, scratch)[1]


@nb.njit(cache=True)
def _robin_collect(slot_keys, slot_vals, slot_dist, q, out):
    return _robin_scan(slot_keys, slot_vals, slot_dist, q, out)[0]


class RobinHoodTable:
    """Open addressing with robin-hood displacement, power-of-two capacity.

    Duplicate keys occupy separate slots. Slots are ``(key, base index)`` plus
    a 4-byte probe distance (-1 marks an empty slot).
    """

    kind = "robin_hash"
    max_load = 0.75

    def __init__(self, slot_keys, slot_vals, slot_dist, n, build_seconds=0.0):
        self.slot_keys = slot_keys
        self.slot_vals = slot_vals
        self.slot_dist = slot_dist
        self.n = n
        self.build_seconds = build_seconds

    @classmethod
    def build(cls, base):
        base = _as_keys(base)
        n = base.shape[0]
        t0 = time.perf_counter()
        capacity = 1 << max(1, int(np.ceil(np.log2(n / cls.max_load))))
        while n > cls.max_load * capacity:
            capacity <<= 1
        slot_keys = np.zeros(capacity, dtype=np.uint64)
        slot_vals = np.zeros(capacity, dtype=np.int64)
        slot_dist = np.full(capacity, _EMPTY, dtype=np.int32)
        _robin_insert_all(base, slot_keys, slot_vals, slot_dist)
        return cls(slot_keys, slot_vals, slot_dist, n, time.perf_counter() - t0)

    @property
    def capacity(self):
        return int(self.slot_keys.shape[0])

    @property
    def load_factor(self):
        return self.n / self.capacity

    def equality(self, q):
        """Base indices holding ``q``; order follows the probe sequence."""
        out = np.empty(16, dtype=np.int64)
        count = _robin_collect(self.slot_keys, self.slot_vals, self.slot_dist, np.uint64(q), out)
        if count > out.shape[0]:
            out = np.empty(count, dtype=np.int64)
            _robin_collect(self.slot_keys, self.slot_vals, self.slot_dist, np.uint64(q), out)
        return out[:count].tolist()

    def check_invariant(self):
        """True iff every occupied slot's stored distance matches its home slot."""
        mask = np.uint64(self.capacity - 1)
        occupied = np.flatnonzero(self.slot_dist != _EMPTY)
        home = (fmix64_array(self.slot_keys[occupied]) & mask).astype(np.int64)
        dist = (occupied - home) % self.capacity
        if not np.array_equal(dist, self.slot_dist[occupied]):
            return False
        # robin-hood ordering: a slot's successor is at most one step poorer
        nxt = (occupied + 1) % self.capacity
        nd = self.slot_dist[nxt]
        return bool(np.all((nd == _EMPTY) | (nd <= self.slot_dist[occupied] + 1)))

    def signature_kernel(self, workload):
        if workload != "equality":
            raise NotImplementedError("a hash table cannot answer lower-bound lookups")
        scratch = np.empty(0, dtype=np.int64)
        return robin_equality_sig, _noop, (self.slot_keys, self.slot_vals, self.slot_dist, scratch)

    def size_bytes(self):
        return int(self.slot_keys.nbytes + self.slot_vals.nbytes + self.slot_dist.nbytes)

    def size_breakdown(self):
        return {"model_bytes": 0, "permutation_bytes": 0, "fingerprint_bytes": 0,
                "total_bytes": self.size_bytes()}


def sorted_pairs_build(base):
    return SortedPairsIndex.build(base)


def sorted_pairs_lower_bound(idx, q):
    return idx.lower_bound(q)


def robin_build(base):
    return RobinHoodTable.build(base)


def robin_equality(table, q):
    return table.equality(q)
