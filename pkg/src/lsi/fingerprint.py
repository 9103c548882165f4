"""Per-rank hash fingerprints for pruning equality scans.

A fingerprint is the top ``width`` bits of the Murmur3 64-bit finalizer
applied to the key. Widths are powers of two up to 16, so fields never
straddle a ``uint64`` word.
"""

import numba as nb
import numpy as np

from .errors import ConfigError

__all__ = [
    "SUPPORTED_WIDTHS",
    "FingerprintVector",
    "build_fingerprints",
    "fingerprint_of",
    "fmix64",
    "fmix64_array",
]

SUPPORTED_WIDTHS = (0, 1, 2, 4, 8, 16)

_C1 = np.uint64(0xFF51AFD7ED558CCD)
_C2 = np.uint64(0xC4CEB9FE1A85EC53)
_S33 = np.uint64(33)


@nb.njit(cache=True, inline="always")
def fmix64(k):
    """Murmur3 finalizer on one ``uint64``."""
    k = np.uint64(k)
    k ^= k >> _S33
    k *= _C1
    k ^= k >> _S33
    k *= _C2
    k ^= k >> _S33
    return k


def fmix64_array(keys):
    keys = np.asarray(keys, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = keys ^ (keys >> _S33)
        h = h * _C1
        h ^= h >> _S33
        h = h * _C2
        h ^= h >> _S33
    return h


def check_width(width):
    if width not in SUPPORTED_WIDTHS:
        raise ConfigError(
            f"unsupported fingerprint width {width!r}; expected one of {SUPPORTED_WIDTHS}"
        )
    return int(width)


def fingerprint_of(key, width):
    """Top ``width`` bits of ``fmix64(key)``; 0 when ``width`` is 0."""
    width = check_width(width)
    if width == 0:
        return 0
    return int(fmix64(np.uint64(key))) >> (64 - width)


@nb.njit(cache=True, inline="always")
def fragment(key, width):
    """Kernel-level :func:`fingerprint_of` for width > 0."""
    return np.int64(fmix64(key) >> np.uint64(64 - width))


@nb.njit(cache=True, inline="always")
def stored_fragment(bits, width, i):
    pos = i * width
    word = bits[pos >> 6]
    return np.int64((word >> np.uint64(pos & 63)) & ((np.uint64(1) << np.uint64(width)) - np.uint64(1)))


class FingerprintVector:
    """Fixed-width fingerprints, one per sorted rank, packed at exact width."""

    __slots__ = ("n", "width", "bits")

    def __init__(self, fragments, width):
        self.width = check_width(width)
        fragments = np.asarray(fragments, dtype=np.uint64)
        self.n = int(fragments.shape[0])
        if self.width == 0:
            self.bits = np.zeros(0, dtype=np.uint64)
        else:
            per_word = 64 // self.width
            words = -(-self.n // per_word)
            padded = np.zeros(words * per_word, dtype=np.uint64)
            padded[: self.n] = fragments
            shifts = (np.arange(per_word, dtype=np.uint64) * np.uint64(self.width))
            self.bits = np.bitwise_or.reduce(
                padded.reshape(words, per_word) << shifts, axis=1
            ).astype(np.uint64)
        self.bits.flags.writeable = False

    def __len__(self):
        return self.n

    def get(self, i):
        i = int(i)
        if not 0 <= i < self.n:
            raise IndexError(f"rank {i} out of range for {self.n} fingerprints")
        if self.width == 0:
            return 0
        return int(stored_fragment(self.bits, self.width, i))

    def matches(self, i, frag):
        """True iff the fragment stored at rank ``i`` equals ``frag``."""
        stored = self.get(i)
        return self.width == 0 or stored == int(frag)

    def to_array(self):
        if self.width == 0:
            return np.zeros(self.n, dtype=np.int64)
        per_word = 64 // self.width
        shifts = np.arange(per_word, dtype=np.uint64) * np.uint64(self.width)
        mask = np.uint64((1 << self.width) - 1)
        fields = (self.bits[:, None] >> shifts) & mask
        return fields.ravel()[: self.n].astype(np.int64)

    @property
    def size_bytes(self):
        return int(self.bits.nbytes)

    def __repr__(self):
        return f"FingerprintVector(n={self.n}, width={self.width})"


def build_fingerprints(keys, perm, width):
    """Fingerprints of ``keys`` laid out in sorted-rank order via ``perm``."""
    width = check_width(width)
    keys = np.asarray(keys, dtype=np.uint64)
    if width == 0:
        return FingerprintVector(np.zeros(perm.n, dtype=np.uint64), 0)
    sorted_keys = keys[perm.to_array()]
    return fingerprints_from_sorted(sorted_keys, width)


def fingerprints_from_sorted(sorted_keys, width):
    width = check_width(width)
    if width == 0:
        return FingerprintVector(np.zeros(len(sorted_keys), dtype=np.uint64), 0)
    frags = fmix64_array(sorted_keys) >> np.uint64(64 - width)
    return FingerprintVector(frags, width)
