"""Benchmark harness: build each index, time lookups, report sizes as CSV.

Lookups run single-threaded inside one compiled loop. Every lookup's result
signature is folded into a running checksum and the next query key is XORed
with ``checksum & zero`` where ``zero`` is a runtime argument, so no lookup
can be elided or overlapped with the next. Every 64th lookup is bracketed by
``clock_gettime`` reads for the percentile columns; the mean is total loop
time over the query count.

Result signatures: lower-bound lookups yield ``base index + 1`` (0 when no
key is >= the query); equality lookups yield the wrapping sum of
``base index + 1`` over all matches. Correct indexes agree on both.

Usage::

    python -m lsi.bench --dataset lognormal_mapped --n 1000000 --index lsi \\
        --epsilon 4,16,64,256 --fp-bits 0,4,16 --workload equality --out eq.csv
"""

import argparse
import csv
import ctypes
import logging
import os
import sys
import time
from dataclasses import dataclass, field, fields

import numba as nb
import numpy as np

from .baselines import RobinHoodTable, SortedPairsIndex
from .core import Lsi
from .datagen import FAMILIES, DatasetSpec, generate, make_workload, read_sosd
from .errors import ConfigError, LsiError, ValidationError
from .fingerprint import check_width

__all__ = ["BenchConfig", "BenchReport", "CSV_HEADER", "emit_csv", "read_csv", "run", "main"]

log = logging.getLogger(__name__)

INDEX_KINDS = ("lsi", "sorted_pairs", "robin_hash")
SAMPLE_STRIDE = 64
TIMING_COLUMNS = ("build_seconds", "mean_ns", "p50_ns", "p99_ns")


@dataclass
class BenchConfig:
    dataset: str = "lognormal_mapped"
    n: int = 10_000_000
    seed: int = 42
    duplicate_fraction: float = 0.0
    indexes: tuple = ("lsi",)
    model: str = "spline"
    epsilons: tuple = (4, 16, 64, 256)
    widths: tuple = (0,)
    workload: str = "lower_bound"
    queries: int = None
    reps: int = 3
    out: str = None
    validate: bool = False

    def check(self):
        for kind in self.indexes:
            if kind not in INDEX_KINDS:
                raise ConfigError(f"unknown index {kind!r}; expected one of {INDEX_KINDS}")
        if self.model not in ("spline", "cht"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.workload not in ("lower_bound", "equality"):
            raise ConfigError(f"unknown workload {self.workload!r}")
        if "robin_hash" in self.indexes and self.workload == "lower_bound":
            raise ConfigError("robin_hash supports equality lookups only")
        for e in self.epsilons:
            if e < 1:
                raise ConfigError(f"epsilon must be >= 1, got {e}")
        for w in self.widths:
            check_width(w)
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.queries is not None and self.queries < 1:
            raise ConfigError("queries must be >= 1")


@dataclass
class BenchReport:
    dataset: str
    index: str
    model: str
    epsilon: int
    width: int
    build_seconds: float
    model_bytes: int
    permutation_bytes: int
    fingerprint_bytes: int
    total_bytes: int
    mean_ns: float
    p50_ns: float
    p99_ns: float
    checksum: int
    samples: np.ndarray = field(default=None, repr=False, compare=False)


CSV_HEADER = [f.name for f in fields(BenchReport) if f.name != "samples"]
_INT_COLUMNS = {"epsilon", "width", "model_bytes", "permutation_bytes", "fingerprint_bytes",
                "total_bytes", "checksum"}
_FLOAT_COLUMNS = {"build_seconds", "mean_ns", "p50_ns", "p99_ns"}


# --------------------------------------------------------------------------
# measurement kernels

_libc = ctypes.CDLL(None, use_errno=True)
_clock_gettime = _libc.clock_gettime
_clock_gettime.argtypes = [ctypes.c_int, ctypes.c_void_p]
_clock_gettime.restype = ctypes.c_int
_CLOCK = getattr(time, "CLOCK_MONOTONIC", 1)


@nb.njit
def _now_ns(ts):
    _clock_gettime(_CLOCK, ts.ctypes.data)
    return ts[0] * 1_000_000_000 + ts[1]


@nb.njit
def _timed_chain(fn, aux, args, qs, zero, stride, samples, ts):
    checksum = np.uint64(0)
    s = 0
    for i in range(qs.shape[0]):
        q = qs[i] ^ (checksum & zero)
        if i % stride == 0:
            t0 = _now_ns(ts)
            checksum += fn(aux, args, q)
            samples[s] = _now_ns(ts) - t0
            s += 1
        else:
            checksum += fn(aux, args, q)
    return checksum


@nb.njit
def _clock_overhead(ts, k):
    best = np.int64(1) << 40
    for _ in range(k):
        a = _now_ns(ts)
        b = _now_ns(ts)
        if b - a < best:
            best = b - a
    return best


@nb.njit(cache=True)
def _signatures(fn, aux, args, qs, out):
    for i in range(qs.shape[0]):
        out[i] = fn(aux, args, qs[i])


def signatures(index, workload, queries):
    fn, aux, args = index.signature_kernel(workload)
    qs = np.ascontiguousarray(queries, dtype=np.uint64)
    out = np.empty(qs.shape[0], dtype=np.uint64)
    _signatures(fn, aux, args, qs, out)
    return out


def measure(index, workload, queries, reps=3):
    """Time ``reps`` passes after one warm-up pass.

    Returns ``(checksum, mean_ns, p50_ns, p99_ns, samples)``. Sampled
    latencies have the calibrated clock-read overhead subtracted.
    """
    fn, aux, args = index.signature_kernel(workload)
    qs = np.ascontiguousarray(queries, dtype=np.uint64)
    ts = np.zeros(2, dtype=np.int64)
    zero = np.uint64(0)
    per_rep = -(-qs.shape[0] // SAMPLE_STRIDE)
    samples = np.zeros(per_rep * reps, dtype=np.int64)
    scratch = np.zeros(per_rep, dtype=np.int64)
    overhead = _clock_overhead(ts, 1000)

    reference = _timed_chain(fn, aux, args, qs, zero, SAMPLE_STRIDE, scratch, ts)
    total_ns = 0
    for r in range(reps):
        buf = samples[r * per_rep:(r + 1) * per_rep]
        t0 = time.perf_counter_ns()
        checksum = _timed_chain(fn, aux, args, qs, zero, SAMPLE_STRIDE, buf, ts)
        total_ns += time.perf_counter_ns() - t0
        if checksum != reference:
            raise RuntimeError("checksum changed between repetitions")
    samples = np.maximum(samples - overhead, 0)
    mean_ns = total_ns / (reps * qs.shape[0])
    p50, p99 = np.percentile(samples, [50, 99])
    return int(reference), float(mean_ns), float(p50), float(p99), samples


# --------------------------------------------------------------------------


def load_dataset(config):
    if config.dataset.startswith("sosd:"):
        path = config.dataset[len("sosd:"):]
        keys = read_sosd(path)
        return os.path.basename(path), keys
    if config.dataset not in FAMILIES:
        raise ConfigError(f"unknown dataset {config.dataset!r}; use a family name or sosd:PATH")
    spec = DatasetSpec(config.dataset, config.n, config.seed, config.duplicate_fraction)
    return spec.name, generate(spec)


def _validate(index, label, workload_kind, queries, expected):
    got = signatures(index, workload_kind, queries)
    bad = np.flatnonzero(got != expected)
    if bad.size:
        i = int(bad[0])
        raise ValidationError(
            f"{label}: {bad.size} mismatching lookups; first is query #{i} key={int(queries[i])} "
            f"(got signature {int(got[i])}, oracle {int(expected[i])})"
        )


def _report(dataset, label, model, eps, width, index, workload, queries, reps):
    checksum, mean_ns, p50, p99, samples = measure(index, workload, queries, reps)
    sizes = index.size_breakdown()
    return BenchReport(
        dataset=dataset,
        index=label,
        model=model,
        epsilon=eps,
        width=width,
        build_seconds=round(index.build_seconds, 6),
        model_bytes=sizes["model_bytes"],
        permutation_bytes=sizes["permutation_bytes"],
        fingerprint_bytes=sizes["fingerprint_bytes"],
        total_bytes=sizes["total_bytes"],
        mean_ns=round(mean_ns, 1),
        p50_ns=round(p50, 1),
        p99_ns=round(p99, 1),
        checksum=checksum,
        samples=samples,
    )


def run(config):
    """Build and measure every configured index; returns one report per row."""
    config.check()
    dataset, keys = load_dataset(config)
    kind = "lower_bound_absent" if config.workload == "lower_bound" else "equality_present"
    amount = config.queries if config.queries is not None else 0.1
    indexed, workload = make_workload(keys, kind, amount, seed=config.seed + 1)
    queries = workload.queries
    log.info("dataset %s: %d indexed keys, %d %s queries", dataset, indexed.shape[0],
             queries.shape[0], config.workload)

    reports = []
    for index_kind in config.indexes:
        if index_kind == "lsi":
            for eps in config.epsilons:
                for width in config.widths:
                    index = Lsi.build(indexed, eps, width, config.model)
                    label = f"lsi[{config.model},eps={eps},fp={width}]"
                    if config.validate:
                        _validate(index, label, config.workload, queries, workload.expected)
                    reports.append(_report(dataset, "lsi", config.model, eps, width, index,
                                           config.workload, queries, config.reps))
                    log.info("%s built in %.3fs", label, index.build_seconds)
        else:
            cls = SortedPairsIndex if index_kind == "sorted_pairs" else RobinHoodTable
            index = cls.build(indexed)
            if config.validate:
                _validate(index, index_kind, config.workload, queries, workload.expected)
            reports.append(_report(dataset, index_kind, "none", 0, 0, index,
                                   config.workload, queries, config.reps))
    return reports


def _fmt(name, value):
    if name in _FLOAT_COLUMNS:
        return repr(float(value))
    return str(value)


def _row(rep):
    return [_fmt(name, getattr(rep, name)) for name in CSV_HEADER]


def emit_csv(reports, path):
    if not reports:
        raise ValueError("no reports to write")
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rep in reports:
            writer.writerow(_row(rep))
    return path


def read_csv(path):
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        for row in reader:
            vals = {}
            for name in CSV_HEADER:
                raw = row[name]
                if name in _INT_COLUMNS:
                    vals[name] = int(raw)
                elif name in _FLOAT_COLUMNS:
                    vals[name] = float(raw)
                else:
                    vals[name] = raw
            out.append(BenchReport(**vals))
    return out


def _int_list(text):
    try:
        return tuple(int(x) for x in text.split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _parser():
    p = argparse.ArgumentParser(prog="lsi-bench", description=__doc__.split("\n\n")[0])
    p.add_argument("--dataset", default="lognormal_mapped",
                   help=f"one of {', '.join(FAMILIES)} or sosd:PATH")
    p.add_argument("--n", type=int, default=10_000_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--dup-fraction", type=float, default=0.0)
    p.add_argument("--index", default="lsi",
                   help="comma-separated subset of lsi,sorted_pairs,robin_hash")
    p.add_argument("--model", choices=("spline", "cht"), default="spline")
    p.add_argument("--epsilon", type=_int_list, default=(4, 16, 64, 256))
    p.add_argument("--fp-bits", type=_int_list, default=(0,))
    p.add_argument("--workload", choices=("lower_bound", "equality"), default="lower_bound")
    p.add_argument("--queries", type=int, default=None,
                   help="query count (default: 10%% of the keys)")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--validate", action="store_true")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    config = BenchConfig(
        dataset=args.dataset,
        n=args.n,
        seed=args.seed,
        duplicate_fraction=args.dup_fraction,
        indexes=tuple(x for x in args.index.split(",") if x),
        model=args.model,
        epsilons=args.epsilon,
        widths=args.fp_bits,
        workload=args.workload,
        queries=args.queries,
        reps=args.reps,
        out=args.out,
        validate=args.validate,
    )
    try:
        reports = run(config)
    except ValidationError as e:
        print(f"validation failed: {e}", file=sys.stderr)
        return 1
    except (LsiError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if config.out:
        emit_csv(reports, config.out)
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rep in reports:
            writer.writerow(_row(rep))
    return 0


if __name__ == "__main__":
    sys.exit(main())
