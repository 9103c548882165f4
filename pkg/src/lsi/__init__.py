"""Learned secondary index over unsorted in-memory integer keys."""

from .approx_index import (
    Cdf,
    CdfPoint,
    HistTreeModel,
    RankRange,
    SplineModel,
    build_cdf,
    build_hist_tree,
    fit_spline,
    model_size_bytes,
)
from .baselines import RobinHoodTable, SortedPairsIndex
from .core import Lsi, LookupStats, access_bound, build, equality, lower_bound, size_breakdown
from .datagen import DatasetSpec, Workload, generate, make_workload, read_sosd, write_sosd
from .errors import (
    ConfigError,
    EmptyDatasetError,
    LsiError,
    TruncatedFileError,
    UnsortedInputError,
    ValidationError,
)
from .fingerprint import FingerprintVector, build_fingerprints, fingerprint_of, fmix64
from .permutation import (
    PermutationVector,
    build_permutation,
    packed_size_bits,
    theoretic_bound_bits,
)

__version__ = "0.1.0"
