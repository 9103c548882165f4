"""Error-bounded approximate indexes over the key CDF.

Both models map a lookup key to a :class:`RankRange` that is guaranteed to
contain the key's lower-bound rank, i.e. the sorted position of the first
occurrence of the smallest key >= the query.

``SplineModel`` is a greedy piecewise-linear spline with a radix table over
the knots. ``HistTreeModel`` is a fixed-fanout radix tree whose terminal bins
hold at most ``max_error`` keys.
"""

from typing import NamedTuple

import numba as nb
import numpy as np

from .errors import ConfigError, EmptyDatasetError, UnsortedInputError

__all__ = [
    "Cdf",
    "CdfPoint",
    "HistTreeModel",
    "RankRange",
    "SplineModel",
    "build_cdf",
    "build_hist_tree",
    "build_model",
    "fit_spline",
    "model_size_bytes",
]

MODEL_KINDS = ("spline", "cht")


class CdfPoint(NamedTuple):
    key: int
    rank: int


class RankRange(NamedTuple):
    """Inclusive rank interval. ``beyond`` marks queries above the max key."""

    lo: int
    hi: int
    beyond: bool = False


class Cdf:
    """One point per distinct key: (key, rank of its first occurrence)."""

    __slots__ = ("keys", "ranks", "n")

    def __init__(self, keys, ranks, n):
        self.keys = keys
        self.ranks = ranks
        self.n = n

    def __len__(self):
        return int(self.keys.shape[0])

    def __iter__(self):
        for k, r in zip(self.keys.tolist(), self.ranks.tolist()):
            yield CdfPoint(k, r)

    def __getitem__(self, i):
        return CdfPoint(int(self.keys[i]), int(self.ranks[i]))

    def lower_bound_ranks(self, queries):
        """Reference lower-bound rank for each query (n when past the end)."""
        idx = np.searchsorted(self.keys, np.asarray(queries, dtype=np.uint64), side="left")
        return np.append(self.ranks, self.n)[idx]


def build_cdf(sorted_keys, check=True):
    sorted_keys = np.asarray(sorted_keys, dtype=np.uint64)
    n = sorted_keys.shape[0]
    if n == 0:
        raise EmptyDatasetError()
    if check and n > 1 and np.any(sorted_keys[1:] < sorted_keys[:-1]):
        raise UnsortedInputError("build_cdf requires keys sorted ascending")
    first = np.empty(n, dtype=bool)
    first[0] = True
    np.not_equal(sorted_keys[1:], sorted_keys[:-1], out=first[1:])
    ranks = np.flatnonzero(first).astype(np.int64)
    return Cdf(sorted_keys[ranks], ranks, n)


# --------------------------------------------------------------------------
# spline


@nb.njit(cache=True)
def _step_points(keys, ranks):
    # Each distinct key k_i whose successor is not k_i + 1 contributes a second
    # point (k_i + 1, r_{i+1}): every query in (k_i, k_{i+1}] has lower-bound
    # rank r_{i+1}, so bounding the spline there bounds all absent queries.
    m = keys.shape[0]
    xs = np.empty(2 * m, dtype=np.uint64)
    ys = np.empty(2 * m, dtype=np.int64)
    c = 0
    for i in range(m):
        xs[c] = keys[i]
        ys[c] = ranks[i]
        c += 1
        if i + 1 < m and keys[i + 1] - keys[i] > np.uint64(1):
            xs[c] = keys[i] + np.uint64(1)
            ys[c] = ranks[i + 1]
            c += 1
    return xs[:c], ys[:c]


@nb.njit(cache=True)
def _greedy_corridor(xs, ys, eps):
    m = xs.shape[0]
    out = np.empty(m, dtype=np.int64)
    out[0] = 0
    c = 1
    if m == 1:
        return out[:1]
    base = 0
    dx = float(xs[1] - xs[0])
    dy = float(ys[1] - ys[0])
    upper = (dy + eps) / dx
    lower = (dy - eps) / dx
    prev = 1
    for i in range(2, m):
        dx = float(xs[i] - xs[base])
        dy = float(ys[i] - ys[base])
        slope = dy / dx
        if slope > upper or slope < lower:
            base = prev
            out[c] = prev
            c += 1
            dx = float(xs[i] - xs[base])
            dy = float(ys[i] - ys[base])
            upper = (dy + eps) / dx
            lower = (dy - eps) / dx
        else:
            u = (dy + eps) / dx
            lo = (dy - eps) / dx
            if u < upper:
                upper = u
            if lo > lower:
                lower = lo
        prev = i
    out[c] = m - 1
    c += 1
    return out[:c]


def fit_spline(cdf, max_error):
    """Greedy corridor spline over ``cdf`` with maximum error ``max_error``.

    Returns the knot keys (``uint64``) and knot ranks (``int64``). Linear
    interpolation between consecutive knots stays within ``max_error`` of the
    lower-bound rank of every key in ``[min key, max key]``, including keys
    absent from the data.
    """
    if max_error < 1:
        raise ConfigError(f"max_error must be >= 1, got {max_error}")
    xs, ys = _step_points(cdf.keys, cdf.ranks)
    idx = _greedy_corridor(xs, ys, float(max_error))
    return xs[idx], ys[idx]


@nb.njit(cache=True, inline="always")
def _interpolate(kkeys, kranks, j, q):
    # j = index of the first knot with key >= q
    if kkeys[j] == q or j == 0:
        return float(kranks[j])
    k0 = kkeys[j - 1]
    r0 = kranks[j - 1]
    span = float(kkeys[j] - k0)
    return r0 + float(q - k0) * (float(kranks[j] - r0) / span)


@nb.njit(cache=True, inline="always")
def _spline_predict(m, q):
    kkeys, kranks, table, shift, key_min, key_max, n, eps = m
    b = np.int64((q - key_min) >> np.uint64(shift))
    lo = table[b]
    hi = min(table[b + 1], kkeys.shape[0] - 1)
    while lo < hi:
        mid = (lo + hi) >> 1
        if kkeys[mid] < q:
            lo = mid + 1
        else:
            hi = mid
    return _interpolate(kkeys, kranks, lo, q)


@nb.njit(cache=True)
def spline_range(m, q):
    """Kernel: (lo, hi, beyond) for query ``q`` on spline args ``m``."""
    key_min = m[4]
    key_max = m[5]
    n = m[6]
    eps = m[7]
    if q < key_min:
        return 0, 0, False
    if q > key_max:
        return n - 1, n - 1, True
    pred = np.int64(np.floor(_spline_predict(m, q) + 0.5))
    lo = max(pred - eps, 0)
    hi = min(pred + eps, n - 1)
    if lo > n - 1:
        lo = n - 1
    if hi < 0:
        hi = 0
    return lo, hi, False


@nb.njit(cache=True)
def _spline_predict_batch(m, qs):
    out = np.empty(qs.shape[0], dtype=np.float64)
    for i in range(qs.shape[0]):
        out[i] = _spline_predict(m, qs[i])
    return out


@nb.njit(cache=True)
def _global_segment_batch(kkeys, qs):
    out = np.empty(qs.shape[0], dtype=np.int64)
    for i in range(qs.shape[0]):
        out[i] = np.searchsorted(kkeys, qs[i])
    return out


def _default_radix_bits(knot_count):
    return min(18, (max(knot_count, 1) - 1).bit_length() + 2)


class SplineModel:
    """Piecewise-linear CDF model with a radix table over knot prefixes."""

    kind = "spline"

    def __init__(self, knot_keys, knot_ranks, max_error, n, radix_bits=None):
        self.knot_keys = np.ascontiguousarray(knot_keys, dtype=np.uint64)
        self.knot_ranks = np.ascontiguousarray(knot_ranks, dtype=np.int64)
        self.max_error = int(max_error)
        self.n = int(n)
        self.key_min = int(self.knot_keys[0])
        self.key_max = int(self.knot_keys[-1])
        if radix_bits is None:
            radix_bits = _default_radix_bits(len(self.knot_keys))
        if not 0 <= radix_bits <= 30:
            raise ConfigError(f"radix_bits out of range: {radix_bits}")
        self.radix_bits = int(radix_bits)
        span_bits = (self.key_max - self.key_min).bit_length()
        self.shift = max(0, span_bits - self.radix_bits)
        prefixes = (self.knot_keys - np.uint64(self.key_min)) >> np.uint64(self.shift)
        buckets = np.arange((1 << self.radix_bits) + 1, dtype=np.uint64)
        self.radix_table = np.searchsorted(prefixes, buckets, side="left").astype(np.int64)

    @property
    def knots(self):
        return [CdfPoint(k, r) for k, r in zip(self.knot_keys.tolist(), self.knot_ranks.tolist())]

    @property
    def knot_count(self):
        return int(self.knot_keys.shape[0])

    range_kernel = spline_range

    @property
    def kernel_args(self):
        return (
            self.knot_keys,
            self.knot_ranks,
            self.radix_table,
            np.int64(self.shift),
            np.uint64(self.key_min),
            np.uint64(self.key_max),
            np.int64(self.n),
            np.int64(self.max_error),
        )

    def predict(self, q):
        """Interpolated (unrounded) rank for ``key_min <= q <= key_max``."""
        q = int(q)
        if not self.key_min <= q <= self.key_max:
            raise ValueError(f"query {q} outside model domain")
        return float(_spline_predict_batch(self.kernel_args, np.array([q], dtype=np.uint64))[0])

    def predict_many(self, queries):
        qs = np.ascontiguousarray(queries, dtype=np.uint64)
        if qs.size and (qs.min() < self.key_min or qs.max() > self.key_max):
            raise ValueError("queries outside model domain")
        return _spline_predict_batch(self.kernel_args, qs)

    def bucket_bounds(self, q):
        """Knot-index window ``[begin, end]`` the radix table selects for ``q``."""
        b = (int(q) - self.key_min) >> self.shift
        return int(self.radix_table[b]), int(self.radix_table[b + 1])

    def global_segments(self, queries):
        """Index of the first knot >= each query, by search over all knots."""
        return _global_segment_batch(self.knot_keys, np.ascontiguousarray(queries, dtype=np.uint64))

    def lookup_range(self, q):
        lo, hi, beyond = spline_range(self.kernel_args, np.uint64(q))
        return RankRange(int(lo), int(hi), bool(beyond))

    def size_bytes(self):
        return int(self.knot_keys.nbytes + self.knot_ranks.nbytes + self.radix_table.nbytes)

    def payload(self):
        return (self.knot_keys, self.knot_ranks, self.radix_table)

    def __repr__(self):
        return (
            f"SplineModel(knots={self.knot_count}, max_error={self.max_error}, "
            f"radix_bits={self.radix_bits})"
        )


def build_spline(cdf, max_error, radix_bits=None):
    knot_keys, knot_ranks = fit_spline(cdf, max_error)
    return SplineModel(knot_keys, knot_ranks, max_error, cdf.n, radix_bits)


# --------------------------------------------------------------------------
# hist-tree


@nb.njit(cache=True)
def hist_tree_range(m, q):
    """Kernel: (lo, hi, beyond) for query ``q`` on hist-tree args ``m``."""
    ranks, children, fanout_bits, root_shift, key_min, key_max, n = m
    if q < key_min:
        return 0, 0, False
    if q > key_max:
        return n - 1, n - 1, True
    u = q - key_min
    fanout = 1 << fanout_bits
    mask = np.uint64(fanout - 1)
    node = 0
    shift = root_shift
    while True:
        j = np.int64((u >> np.uint64(shift)) & mask)
        child = children[node, j]
        if child < 0:
            lo = ranks[node, j]
            hi = ranks[node, j + 1]
            if lo > n - 1:
                lo = n - 1
            if hi > n - 1:
                hi = n - 1
            return lo, hi, False
        node = child
        shift -= fanout_bits


class HistTreeModel:
    """Compact radix tree with ``2**fanout_bits`` equal-width bins per node.

    ``ranks[node, j]`` is the lower-bound rank of bin ``j``'s smallest key and
    ``ranks[node, fanout]`` that of the node's upper end, so a terminal bin
    covers ranks ``[ranks[node, j], ranks[node, j + 1])``. ``children`` holds
    the child node id or -1 for a terminal bin.
    """

    kind = "cht"
    range_kernel = hist_tree_range

    def __init__(self, ranks, children, fanout_bits, root_shift, key_min, key_max, n,
                 max_error, depth):
        self.ranks = ranks
        self.children = children
        self.fanout_bits = int(fanout_bits)
        self.root_shift = int(root_shift)
        self.key_min = int(key_min)
        self.key_max = int(key_max)
        self.n = int(n)
        self.max_error = int(max_error)
        self.depth = int(depth)

    @property
    def fanout(self):
        return 1 << self.fanout_bits

    @property
    def node_count(self):
        return int(self.children.shape[0])

    @property
    def kernel_args(self):
        return (
            self.ranks,
            self.children,
            np.int64(self.fanout_bits),
            np.int64(self.root_shift),
            np.uint64(self.key_min),
            np.uint64(self.key_max),
            np.int64(self.n),
        )

    def lookup_range(self, q):
        lo, hi, beyond = hist_tree_range(self.kernel_args, np.uint64(q))
        return RankRange(int(lo), int(hi), bool(beyond))

    def terminal_bins(self):
        """Yield ``(node, bin, first_rank, count)`` for every terminal bin."""
        for node in range(self.node_count):
            for j in range(self.fanout):
                if self.children[node, j] < 0:
                    lo = int(self.ranks[node, j])
                    yield node, j, lo, int(self.ranks[node, j + 1]) - lo

    def size_bytes(self):
        return int(self.ranks.nbytes + self.children.nbytes)

    def payload(self):
        return (self.ranks, self.children)

    def __repr__(self):
        return (
            f"HistTreeModel(nodes={self.node_count}, depth={self.depth}, "
            f"max_error={self.max_error}, fanout_bits={self.fanout_bits})"
        )


def build_hist_tree(cdf, n=None, max_error=64, fanout_bits=8):
    """Recursively split the key bit-range until every bin holds <= ``max_error`` keys.

    A bin holding a single distinct key (a duplicate run) is terminal even
    when the run is longer than ``max_error``.
    """
    if max_error < 1:
        raise ConfigError(f"max_error must be >= 1, got {max_error}")
    if not 1 <= fanout_bits <= 16:
        raise ConfigError(f"fanout_bits must be in [1, 16], got {fanout_bits}")
    n = cdf.n if n is None else int(n)
    key_min = int(cdf.keys[0])
    key_max = int(cdf.keys[-1])
    u = cdf.keys - np.uint64(key_min)
    ranks_ext = np.append(cdf.ranks, n)
    fanout = 1 << fanout_bits
    span_bits = max(1, (key_max - key_min).bit_length())
    levels = -(-span_bits // fanout_bits)
    root_shift = levels * fanout_bits - fanout_bits
    bin_ids = np.arange(fanout + 1)
    mask = np.uint64(fanout - 1)

    rank_rows, child_rows = [], []
    # (node id, first distinct index, end distinct index, shift, depth)
    queue = [(0, 0, len(cdf), root_shift, 1)]
    depth = 1
    head = 0
    while head < len(queue):
        node, c0, c1, shift, d = queue[head]
        head += 1
        depth = max(depth, d)
        bins = (u[c0:c1] >> np.uint64(shift)) & mask
        bounds = np.searchsorted(bins, bin_ids, side="left") + c0
        bounds[-1] = c1
        node_ranks = ranks_ext[bounds]
        counts = np.diff(node_ranks)
        distinct = np.diff(bounds)
        children = np.full(fanout, -1, dtype=np.int32)
        split = np.flatnonzero((counts > max_error) & (distinct > 1))
        for j in split.tolist():
            child = len(queue)
            children[j] = child
            queue.append((child, int(bounds[j]), int(bounds[j + 1]), shift - fanout_bits, d + 1))
        rank_rows.append(node_ranks)
        child_rows.append(children)

    ranks = np.vstack(rank_rows).astype(np.int64)
    children = np.vstack(child_rows)
    return HistTreeModel(ranks, children, fanout_bits, root_shift, key_min, key_max, n,
                         max_error, depth)


def build_model(cdf, max_error, kind="spline", **options):
    if kind == "spline":
        return build_spline(cdf, max_error, radix_bits=options.get("radix_bits"))
    if kind == "cht":
        return build_hist_tree(cdf, cdf.n, max_error, options.get("fanout_bits", 8))
    raise ConfigError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


def model_size_bytes(model):
    return model.size_bytes()
