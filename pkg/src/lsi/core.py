"""The learned secondary index: model + permutation + fingerprints.

The index never stores the keys themselves. Lookups consult the model for a
rank range, map ranks to base positions through the permutation vector and
compare against the caller's unsorted base array by random access.
"""

import time
from dataclasses import dataclass, fields

import numba as nb
import numpy as np

from .approx_index import build_cdf, build_model
from .errors import ConfigError, EmptyDatasetError
from .fingerprint import check_width, fingerprints_from_sorted, fragment, stored_fragment
from .permutation import PermutationVector, packed_get

__all__ = [
    "Lsi",
    "LookupStats",
    "access_bound",
    "build",
    "equality",
    "lower_bound",
    "size_breakdown",
]

# stats slots
BASE, PERM, FP_PROBES, FP_FALSE = 0, 1, 2, 3


@dataclass
class LookupStats:
    """Per-lookup access counters; add instances together to aggregate."""

    base_accesses: int = 0
    perm_accesses: int = 0
    fingerprint_probes: int = 0
    fingerprint_false_positives: int = 0

    def __iadd__(self, other):
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))
        return self

    def __add__(self, other):
        out = LookupStats(**vars(self))
        out += other
        return out

    def _absorb(self, counters):
        self.base_accesses += int(counters[BASE])
        self.perm_accesses += int(counters[PERM])
        self.fingerprint_probes += int(counters[FP_PROBES])
        self.fingerprint_false_positives += int(counters[FP_FALSE])


def access_bound(max_error):
    """Worst-case base-data accesses of one lower-bound lookup."""
    return int(np.ceil(np.log2(2 * max_error + 2))) + 2


# --------------------------------------------------------------------------
# kernels
#
# ``args`` = (model args, perm bits, perm width, base, eps, fp bits, fp width, counters)


@nb.njit(cache=True, inline="always")
def _n_of(args):
    return np.int64(args[3].shape[0])


@nb.njit(cache=True, inline="always")
def _key_at(args, r):
    idx = packed_get(args[1], args[2], r)
    c = args[7]
    c[PERM] += 1
    c[BASE] += 1
    return idx, args[3][idx]


@nb.njit(cache=True)
def lsi_lower_bound(range_fn, args, q):
    """Kernel: (base index, rank) of the smallest key >= q, or (-1, -1)."""
    lo, hi, beyond = range_fn(args[0], q)
    if beyond:
        return -1, -1
    a = lo
    b = hi
    if b - a > 2 * args[4]:
        # Oversized range (a hist-tree bin holding one long duplicate run):
        # settle the two ends first so equal keys are not bisected.
        _, k = _key_at(args, a)
        if k >= q:
            b = a
        else:
            a += 1
            _, k = _key_at(args, b - 1)
            if k < q:
                a = b
            else:
                b -= 1
    while a < b:
        mid = (a + b) >> 1
        _, k = _key_at(args, mid)
        if k < q:
            a = mid + 1
        else:
            b = mid
    args[7][PERM] += 1
    return packed_get(args[1], args[2], a), a


@nb.njit(cache=True)
def lsi_equality(range_fn, args, q):
    """Kernel: (first rank, match count, signature) of all keys equal to q.

    The signature is the wrapping sum of ``base index + 1`` over matches.
    """
    n = _n_of(args)
    fp_bits = args[5]
    w = args[6]
    c = args[7]
    start = -1
    count = 0
    sig = np.uint64(0)
    if w == 0:
        idx, r = lsi_lower_bound(range_fn, args, q)
        if r < 0:
            return start, count, sig
        while r < n:
            idx, k = _key_at(args, r)
            if k != q:
                break
            if count == 0:
                start = r
            count += 1
            sig += np.uint64(idx + 1)
            r += 1
        return start, count, sig
    lo, hi, beyond = range_fn(args[0], q)
    if beyond:
        return start, count, sig
    frag = fragment(q, w)
    r = lo
    while r < n:
        if r > hi and count == 0:
            break
        c[FP_PROBES] += 1
        if stored_fragment(fp_bits, w, r) == frag:
            idx, k = _key_at(args, r)
            if k == q:
                if count == 0:
                    start = r
                count += 1
                sig += np.uint64(idx + 1)
            else:
                c[FP_FALSE] += 1
                if count > 0:
                    break
        elif count > 0:
            break
        r += 1
    return start, count, sig


@nb.njit(cache=True)
def lsi_lower_bound_sig(range_fn, args, q):
    idx, r = lsi_lower_bound(range_fn, args, q)
    return np.uint64(idx + 1)


@nb.njit(cache=True)
def lsi_equality_sig(range_fn, args, q):
    return lsi_equality(range_fn, args, q)[2]


@nb.njit(cache=True)
def _lower_bound_batch(range_fn, args, qs, out_idx, out_rank):
    for i in range(qs.shape[0]):
        out_idx[i], out_rank[i] = lsi_lower_bound(range_fn, args, qs[i])


@nb.njit(cache=True)
def _equality_batch(range_fn, args, qs, out_start, out_count):
    for i in range(qs.shape[0]):
        s, k, _ = lsi_equality(range_fn, args, qs[i])
        out_start[i] = s
        out_count[i] = k


# --------------------------------------------------------------------------


class Lsi:
    """Learned secondary index over a borrowed, unsorted ``uint64`` key array.

    Build with :meth:`Lsi.build`. The base array is referenced, not copied,
    and must not be mutated while the index is in use.
    """

    def __init__(self, base, model, perm, fingerprints, build_seconds=0.0):
        self.base = base
        self.model = model
        self.perm = perm
        self.fingerprints = fingerprints
        self.build_seconds = build_seconds

    @classmethod
    def build(cls, base, max_error=8, fingerprint_width=8, model_kind="spline", **model_options):
        """Sort, fit the CDF model, pack the permutation, hash fingerprints.

        ``model_options`` are forwarded to the model builder (``radix_bits``
        for the spline, ``fanout_bits`` for the hist-tree).
        """
        if max_error < 1:
            raise ConfigError(f"max_error must be >= 1, got {max_error}")
        check_width(fingerprint_width)
        base = np.asarray(base)
        if base.dtype != np.uint64:
            if base.size and (base.dtype.kind not in "iu" or base.min() < 0):
                raise ConfigError("keys must be non-negative integers")
            base = base.astype(np.uint64)
        if base.ndim != 1 or base.shape[0] == 0:
            raise EmptyDatasetError()

        t0 = time.perf_counter()
        order = np.argsort(base, kind="stable")
        sorted_keys = base[order]
        cdf = build_cdf(sorted_keys, check=False)
        model = build_model(cdf, max_error, model_kind, **model_options)
        perm = PermutationVector(order)
        del order
        fingerprints = fingerprints_from_sorted(sorted_keys, fingerprint_width)
        del sorted_keys, cdf
        elapsed = time.perf_counter() - t0
        return cls(base, model, perm, fingerprints, elapsed)

    @property
    def n(self):
        return self.perm.n

    @property
    def max_error(self):
        return self.model.max_error

    @property
    def fingerprint_width(self):
        return self.fingerprints.width

    @property
    def model_kind(self):
        return self.model.kind

    def kernel_args(self, counters=None):
        if counters is None:
            counters = np.zeros(4, dtype=np.int64)
        return (
            self.model.kernel_args,
            self.perm.bits,
            np.int64(self.perm.width),
            self.base,
            np.int64(self.model.max_error),
            self.fingerprints.bits,
            np.int64(self.fingerprints.width),
            counters,
        )

    def signature_kernel(self, workload):
        """(kernel, aux, args) computing a ``uint64`` result signature per query."""
        fn = lsi_lower_bound_sig if workload == "lower_bound" else lsi_equality_sig
        return fn, self.model.range_kernel, self.kernel_args()

    def lower_bound(self, q, stats=None):
        """``(base_index, rank)`` of the smallest key >= ``q``, or ``None``."""
        counters = np.zeros(4, dtype=np.int64)
        idx, rank = lsi_lower_bound(self.model.range_kernel, self.kernel_args(counters), np.uint64(q))
        if stats is not None:
            stats._absorb(counters)
        if rank < 0:
            return None
        return int(idx), int(rank)

    def equality(self, q, stats=None):
        """Base indices of every key equal to ``q``, in ascending rank order."""
        counters = np.zeros(4, dtype=np.int64)
        start, count, _ = lsi_equality(self.model.range_kernel, self.kernel_args(counters),
                                       np.uint64(q))
        if stats is not None:
            stats._absorb(counters)
        return [self.perm.get(r) for r in range(start, start + count)]

    def lower_bound_many(self, queries, stats=None):
        """Vectorized :meth:`lower_bound`; -1 marks queries above the max key."""
        qs = np.ascontiguousarray(queries, dtype=np.uint64)
        counters = np.zeros(4, dtype=np.int64)
        idx = np.empty(qs.shape[0], dtype=np.int64)
        rank = np.empty(qs.shape[0], dtype=np.int64)
        _lower_bound_batch(self.model.range_kernel, self.kernel_args(counters), qs, idx, rank)
        if stats is not None:
            stats._absorb(counters)
        return idx, rank

    def equality_many(self, queries, stats=None):
        """Vectorized equality: first matching rank (-1 if none) and match count."""
        qs = np.ascontiguousarray(queries, dtype=np.uint64)
        counters = np.zeros(4, dtype=np.int64)
        start = np.empty(qs.shape[0], dtype=np.int64)
        count = np.empty(qs.shape[0], dtype=np.int64)
        _equality_batch(self.model.range_kernel, self.kernel_args(counters), qs, start, count)
        if stats is not None:
            stats._absorb(counters)
        return start, count

    def size_breakdown(self):
        model = self.model.size_bytes()
        perm = self.perm.size_bytes
        fp = self.fingerprints.size_bytes
        return {
            "model_bytes": model,
            "permutation_bytes": perm,
            "fingerprint_bytes": fp,
            "total_bytes": model + perm + fp,
        }

    def size_bytes(self):
        return self.size_breakdown()["total_bytes"]

    def __repr__(self):
        return (
            f"Lsi(n={self.n}, model={self.model!r}, fingerprint_width={self.fingerprint_width})"
        )


def build(base, max_error=8, fingerprint_width=8, model_kind="spline", **model_options):
    return Lsi.build(base, max_error, fingerprint_width, model_kind, **model_options)


def lower_bound(lsi, q, stats=None):
    return lsi.lower_bound(q, stats)


def equality(lsi, q, stats=None):
    return lsi.equality(q, stats)


def size_breakdown(lsi):
    return lsi.size_breakdown()
