import bisect

import numpy as np
import pytest

MASK64 = (1 << 64) - 1


def ref_fmix64(k):
    """Murmur3 fmix64 on Python ints, written independently of the package."""
    k &= MASK64
    k ^= k >> 33
    k = (k * 0xFF51AFD7ED558CCD) & MASK64
    k ^= k >> 33
    k = (k * 0xC4CEB9FE1A85EC53) & MASK64
    k ^= k >> 33
    return k


def ref_fingerprint(key, width):
    return 0 if width == 0 else ref_fmix64(key) >> (64 - width)


def stable_argsort(keys):
    return sorted(range(len(keys)), key=lambda i: (keys[i], i))


class SortedOracle:
    """Naive answers from a sorted copy of the base data."""

    def __init__(self, base):
        self.base = [int(k) for k in base]
        self.order = stable_argsort(self.base)
        self.sorted = [self.base[i] for i in self.order]

    def lower_bound(self, q):
        r = bisect.bisect_left(self.sorted, int(q))
        if r == len(self.sorted):
            return None
        return self.order[r], r

    def lower_bound_rank(self, q):
        return bisect.bisect_left(self.sorted, int(q))

    def equality(self, q):
        # stable order: a run of equal keys lists base indices ascending
        lo = bisect.bisect_left(self.sorted, int(q))
        hi = bisect.bisect_right(self.sorted, int(q))
        return self.order[lo:hi]

    def equality_run(self, q):
        lo = bisect.bisect_left(self.sorted, int(q))
        hi = bisect.bisect_right(self.sorted, int(q))
        return (lo if hi > lo else -1), hi - lo


def mixed_queries(keys, rng, count):
    """Present keys, keys between present keys, and both out-of-domain sides."""
    keys = np.asarray(keys, dtype=np.uint64)
    lo, hi = int(keys.min()), int(keys.max())
    present = keys[rng.integers(0, keys.shape[0], count)]
    between = rng.integers(lo, hi, count, dtype=np.uint64, endpoint=True) if hi > lo else present
    extra = [lo, hi]
    if lo > 0:
        extra.append(lo - 1)
    if hi < MASK64:
        extra += [hi + 1, MASK64]
    return np.concatenate([present, between, np.array(extra, dtype=np.uint64)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary -----------------------------------------------------

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
