"""Bit-packed permutation vector.

Entry ``i`` holds the base-array position of the ``i``-th smallest key. Each
entry occupies ``ceil(log2(n))`` bits in a contiguous ``uint64`` word array;
entries may straddle a word boundary, so a read touches at most two words.
"""

import math

import numba as nb
import numpy as np

from .errors import EmptyDatasetError

__all__ = [
    "PermutationVector",
    "bit_width",
    "build_permutation",
    "packed_size_bits",
    "theoretic_bound_bits",
]

_LN2 = math.log(2.0)


def bit_width(n):
    """Bits per entry for ``n`` entries: ceil(log2 n), floored at 1."""
    if n < 1:
        raise ValueError("bit width undefined for n < 1")
    return max(1, (int(n) - 1).bit_length())


def packed_size_bits(n):
    """Payload bits of a bit-packed permutation of ``n`` entries."""
    return int(n) * bit_width(n)


def theoretic_bound_bits(n):
    """log2(n!), the information-theoretic size of a permutation of ``n``."""
    if n < 1:
        raise ValueError("theoretic bound undefined for n < 1")
    if n <= 1024:
        return math.fsum(math.log2(k) for k in range(2, int(n) + 1))
    return math.lgamma(n + 1.0) / _LN2


@nb.njit(cache=True)
def _pack(values, width, out):
    mask = (np.uint64(1) << np.uint64(width)) - np.uint64(1)
    for i in range(values.shape[0]):
        v = np.uint64(values[i]) & mask
        pos = i * width
        word = pos >> 6
        off = pos & 63
        out[word] |= v << np.uint64(off)
        if off + width > 64:
            out[word + 1] |= v >> np.uint64(64 - off)


@nb.njit(cache=True, inline="always")
def packed_get(bits, width, i):
    """Read entry ``i`` of a packed array. Kernel-level, no bounds check."""
    pos = i * width
    word = pos >> 6
    off = pos & 63
    v = bits[word] >> np.uint64(off)
    if off + width > 64:
        v |= bits[word + 1] << np.uint64(64 - off)
    return np.int64(v & ((np.uint64(1) << np.uint64(width)) - np.uint64(1)))


@nb.njit(cache=True)
def _unpack(bits, width, n):
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = packed_get(bits, width, i)
    return out


def pack_values(values, width):
    """Pack non-negative integers into ``width``-bit fields (width <= 63)."""
    values = np.ascontiguousarray(values, dtype=np.int64)
    words = (values.shape[0] * width + 63) // 64
    out = np.zeros(max(words, 1), dtype=np.uint64)
    _pack(values, width, out)
    return out[:words] if words else out[:0]


class PermutationVector:
    """Sorted-rank to base-index map stored at ``ceil(log2 n)`` bits per entry."""

    __slots__ = ("n", "width", "bits")

    def __init__(self, order):
        order = np.asarray(order)
        n = order.shape[0]
        if n == 0:
            raise EmptyDatasetError()
        self.n = n
        self.width = bit_width(n)
        self.bits = pack_values(order, self.width)
        self.bits.flags.writeable = False

    def __len__(self):
        return self.n

    def get(self, i):
        i = int(i)
        if not 0 <= i < self.n:
            raise IndexError(f"rank {i} out of range for permutation of {self.n}")
        return int(packed_get(self.bits, self.width, i))

    __getitem__ = get

    def to_array(self):
        """Decode every entry into an ``int64`` array."""
        return _unpack(self.bits, self.width, self.n)

    @property
    def size_bits(self):
        return self.n * self.width

    @property
    def size_bytes(self):
        return int(self.bits.nbytes)

    def __repr__(self):
        return f"PermutationVector(n={self.n}, width={self.width})"


def build_permutation(keys):
    """Stable argsort of ``keys``, bit-packed.

    Equal keys keep ascending base order, so ``p[i]`` is the position in
    ``keys`` of the ``i``-th smallest key with ties broken by position.
    """
    keys = np.asarray(keys)
    if keys.size == 0:
        raise EmptyDatasetError()
    return PermutationVector(np.argsort(keys, kind="stable"))
