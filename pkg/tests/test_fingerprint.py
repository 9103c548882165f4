import numpy as np
import pytest

from lsi.errors import ConfigError
from lsi.fingerprint import (
    SUPPORTED_WIDTHS,
    FingerprintVector,
    build_fingerprints,
    fingerprint_of,
    fmix64,
    fmix64_array,
)
from lsi.permutation import build_permutation

from conftest import ref_fingerprint, ref_fmix64


def three_sigma(p, trials):
    return 3 * np.sqrt(p * (1 - p) / trials)


def test_fmix64_matches_reference(rng):
    keys = rng.integers(0, 2**64 - 1, 2000, dtype=np.uint64, endpoint=True).tolist()
    keys += [0, 1, 2**63, 2**64 - 1]
    expected = [ref_fmix64(k) for k in keys]
    assert [int(fmix64(np.uint64(k))) for k in keys] == expected
    assert fmix64_array(np.array(keys, dtype=np.uint64)).tolist() == expected


def test_fmix64_fixed_points():
    # zero is a fixed point of every xor-shift/multiply step
    assert ref_fmix64(0) == 0
    assert int(fmix64(np.uint64(0))) == 0


@pytest.mark.parametrize("width", SUPPORTED_WIDTHS)
def test_fingerprint_of_reference(width, rng):
    for k in rng.integers(0, 2**64 - 1, 200, dtype=np.uint64, endpoint=True).tolist():
        assert fingerprint_of(k, width) == ref_fingerprint(k, width)


def test_fingerprint_zero_width():
    assert all(fingerprint_of(k, 0) == 0 for k in (0, 1, 12345, 2**64 - 1))


def test_fingerprint_of_zero_key():
    assert fingerprint_of(0, 8) == ref_fmix64(0) >> 56 == 0
    assert fingerprint_of(1, 8) == ref_fmix64(1) >> 56


@pytest.mark.parametrize("width", [3, 5, 32, -1, 64])
def test_unsupported_width(width):
    with pytest.raises(ConfigError):
        fingerprint_of(1, width)
    with pytest.raises(ConfigError):
        FingerprintVector([1, 2], width)


@pytest.mark.parametrize("width", [1, 2, 4, 8, 16])
def test_one_bit_flip_avalanche(width, rng):
    pairs = 100_000
    a = rng.integers(0, 2**64 - 1, pairs, dtype=np.uint64, endpoint=True)
    bit = rng.integers(0, 64, pairs).astype(np.uint64)
    b = a ^ (np.uint64(1) << bit)
    shift = np.uint64(64 - width)
    differ = np.mean((fmix64_array(a) >> shift) != (fmix64_array(b) >> shift))
    p = 1 - 2.0**-width
    assert abs(differ - p) <= three_sigma(p, pairs)


def test_build_fingerprints_examples():
    keys = np.array([30, 10, 20], dtype=np.uint64)
    p = build_permutation(keys)
    fv = build_fingerprints(keys, p, 8)
    assert fv.to_array().tolist() == [ref_fingerprint(k, 8) for k in (10, 20, 30)]
    empty = build_fingerprints(keys, p, 0)
    assert empty.size_bytes == 0
    assert empty.bits.size == 0


@pytest.mark.parametrize("width", [1, 2, 4, 8, 16])
def test_packing_round_trip(width, rng):
    n = 1001
    frags = rng.integers(0, 1 << width, n).astype(np.uint64)
    fv = FingerprintVector(frags, width)
    assert fv.to_array().tolist() == frags.tolist()
    assert [fv.get(i) for i in range(0, n, 97)] == frags[::97].tolist()
    assert fv.size_bytes == -(-n * width // 64) * 8


def test_duplicates_give_identical_adjacent_fragments():
    keys = np.array([7, 3, 7, 7, 1], dtype=np.uint64)
    fv = build_fingerprints(keys, build_permutation(keys), 16)
    frags = fv.to_array().tolist()
    assert frags[2] == frags[3] == frags[4] == ref_fingerprint(7, 16)


def test_matches_and_bounds():
    keys = np.array([30, 10, 20], dtype=np.uint64)
    fv = build_fingerprints(keys, build_permutation(keys), 8)
    assert fv.matches(1, fingerprint_of(20, 8))
    with pytest.raises(IndexError):
        fv.matches(3, 0)
    zero = build_fingerprints(keys, build_permutation(keys), 0)
    assert zero.matches(0, 0) and zero.matches(2, 99)


@pytest.mark.parametrize("width", [1, 2, 4, 8])
def test_no_false_negatives_and_false_positive_rate(width, rng):
    n = 20_000
    keys = rng.integers(0, 2**64 - 1, n, dtype=np.uint64, endpoint=True)
    p = build_permutation(keys)
    fv = build_fingerprints(keys, p, width)
    stored = fv.to_array()
    order = p.to_array()
    # every present key matches at its own rank
    present = np.array([fingerprint_of(int(k), width) for k in keys[order]])
    assert np.array_equal(stored, present)
    # absent keys against random ranks
    probes = 100_000
    absent = rng.integers(0, 2**64 - 1, probes, dtype=np.uint64, endpoint=True)
    frag = (fmix64_array(absent) >> np.uint64(64 - width)).astype(np.int64)
    ranks = rng.integers(0, n, probes)
    rate = np.mean(stored[ranks] == frag)
    q = 2.0**-width
    assert abs(rate - q) <= three_sigma(q, probes)
