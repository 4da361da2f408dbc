"""Seeded random streams, Gaussian sampling, histograms and the Wilcoxon signed-rank test."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from fairopt import backend
from fairopt.errors import InsufficientDataError, InvalidParameterError

EXACT_MAX_N = 20
MIN_NONZERO_PAIRS = 5


class SeededStream:
    """Independent random stream identified by ``(master_seed, stream_index)``.

    The stream is derived with :class:`numpy.random.SeedSequence` using the
    stream index as spawn key, so streams never share generator state and a
    given pair always reproduces the same sequence.
    """

    def __init__(self, master_seed: int, stream_index: int = 0):
        if master_seed < 0 or master_seed >= 2**64:
            raise InvalidParameterError(f"master_seed must fit in 64 unsigned bits, got {master_seed}")
        if stream_index < 0:
            raise InvalidParameterError(f"stream_index must be non-negative, got {stream_index}")
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=(self.stream_index,))
        self.rng = np.random.Generator(np.random.PCG64(seq))

    def child(self, index: int) -> "SeededStream":
        """Stream for a sub-task; distinct from every top-level stream index."""
        # offset keeps children of stream i apart from the top-level streams
        return SeededStream(self.master_seed, (self.stream_index + 1) * 1_000_003 + index)

    def uniform(self, size=None):
        return self.rng.random(size)

    def normal(self, size=None):
        return self.rng.standard_normal(size)

    def __repr__(self):
        return f"SeededStream(master_seed={self.master_seed}, stream_index={self.stream_index})"


def gaussian(stream: SeededStream, mean: float, stddev: float) -> float:
    if not stddev >= 0:
        raise InvalidParameterError(f"stddev must be non-negative, got {stddev}")
    if stddev == 0:
        return float(mean)
    return float(mean + stddev * stream.normal())


@dataclass
class Histogram:
    """Fixed-width histogram over the half-open range ``[lo, hi)``.

    ``sum_x``/``sum_x2`` accumulate every added value (in range or not) so
    moments are exact rather than bin-quantised.
    """

    lo: float
    hi: float
    bin_count: int
    counts: np.ndarray = field(default=None)
    out_of_range_count: int = 0
    total: int = 0
    sum_x: float = 0.0
    sum_x2: float = 0.0

    def __post_init__(self):
        if self.bin_count <= 0:
            raise InvalidParameterError("bin_count must be positive")
        if not self.hi > self.lo:
            raise InvalidParameterError("histogram needs hi > lo")
        if self.counts is None:
            self.counts = np.zeros(self.bin_count, dtype=np.int64)

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.bin_count

    @property
    def edges(self) -> np.ndarray:
        return self.lo + self.width * np.arange(self.bin_count + 1)

    @property
    def mean(self) -> float:
        return self.sum_x / self.total if self.total else math.nan

    @property
    def variance(self) -> float:
        if self.total < 2:
            return math.nan
        m = self.mean
        return (self.sum_x2 - self.total * m * m) / (self.total - 1)

    def density(self) -> np.ndarray:
        return self.counts / (self.total * self.width) if self.total else np.zeros(self.bin_count)

    def add_many(self, xs) -> "Histogram":
        xs = np.asarray(xs, dtype=float).ravel()
        idx = np.floor((xs - self.lo) / self.width).astype(np.int64)
        inside = (xs >= self.lo) & (xs < self.hi)
        # float rounding can push a value just below hi into bin_count
        idx = np.minimum(idx, self.bin_count - 1)
        self.counts += np.bincount(idx[inside], minlength=self.bin_count)
        self.out_of_range_count += int(xs.size - inside.sum())
        self.total += int(xs.size)
        self.sum_x += float(xs.sum())
        self.sum_x2 += float(np.dot(xs, xs))
        return self


def histogram_add(h: Histogram, x: float) -> Histogram:
    return h.add_many([x])


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=float)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def wilcoxon_signed_rank(paired_a, paired_b, method: str = "auto") -> tuple[float, float]:
    """Two-sided paired Wilcoxon signed-rank test.

    Zero differences are dropped and tied magnitudes get midranks.  With
    ``method="auto"`` the null distribution is enumerated exactly over all
    ``2**n`` sign patterns for ``n <= 20`` and approximated by a
    continuity-corrected normal otherwise.

    Returns ``(statistic, p_value)`` where the statistic is
    ``min(W+, W-)``.
    """
    a = np.asarray(paired_a, dtype=float)
    b = np.asarray(paired_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise InsufficientDataError(f"paired samples must have equal lengths, got {a.shape} and {b.shape}")
    if method not in ("auto", "exact", "normal"):
        raise InvalidParameterError(f"unknown method {method!r}")
    d = a - b
    d = d[d != 0]
    n = len(d)
    if n < MIN_NONZERO_PAIRS:
        raise InsufficientDataError(f"need at least {MIN_NONZERO_PAIRS} nonzero differences, got {n}")

    ranks = _midranks(np.abs(d))
    # midranks are multiples of 1/2, so doubled ranks are exact integers
    doubled = np.rint(2 * ranks).astype(np.int64)
    w_plus2 = int(doubled[d > 0].sum())
    total2 = int(doubled.sum())
    statistic = min(w_plus2, total2 - w_plus2) / 2.0

    if method == "exact" or (method == "auto" and n <= EXACT_MAX_N):
        counts = backend.signed_rank_null_counts(doubled)
        sums = np.arange(len(counts))
        # two-sided: patterns at least as far from the null centre as observed
        extreme = np.abs(2 * sums - total2) >= abs(2 * w_plus2 - total2)
        p = counts[extreme].sum() / counts.sum()
        return statistic, float(min(1.0, p))

    mean = total2 / 4.0
    _, tie_sizes = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_sizes**3 - tie_sizes)) / 48.0
    dev = abs(w_plus2 / 2.0 - mean) - 0.5
    if dev <= 0 or var <= 0:
        return statistic, 1.0
    z = dev / math.sqrt(var)
    return statistic, float(min(1.0, math.erfc(z / math.sqrt(2.0))))
