"""Symbol encoding of real-valued series and delay-window embedding.

An :class:`Encoder` maps finite reals onto a small alphabet ``0..n-1`` via
half-open bins ``[lo, hi)`` (values below the first threshold map to 0,
values at or above the last one map to the top symbol).  :func:`embed`
turns a (source, destination) pair of symbol streams into columnar records
holding, per time step, the packed source word, the packed destination
past and the next destination symbol.  Words are packed in mixed radix
with the most recent symbol as the least significant digit, everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import DegenerateData, InsufficientData, InvalidInput

STRATEGIES = ("equal_width", "quantile", "threshold")
NORMALIZATIONS = ("none", "zscore", "minmax")


@dataclass(frozen=True)
class Encoder:
    """Binning rule mapping finite reals to symbols ``0..cardinality-1``.

    ``bin_edges`` holds the ``cardinality - 1`` interior thresholds in raw
    data units (normalization is folded into the edges at fit time, which
    is exact because all supported normalizations are affine).
    """

    bin_edges: np.ndarray
    cardinality: int
    strategy: str
    normalization: str

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=np.float64)
        object.__setattr__(self, "bin_edges", edges)
        edges.flags.writeable = False
        if self.cardinality < 1:
            raise InvalidInput("cardinality must be >= 1")
        if edges.size != self.cardinality - 1:
            raise InvalidInput(
                f"{edges.size} edges cannot delimit {self.cardinality} bins"
            )
        if edges.size and not np.all(np.diff(edges) > 0):
            raise InvalidInput("bin edges must be strictly increasing")
        if self.strategy not in STRATEGIES:
            raise InvalidInput(f"unknown strategy {self.strategy!r}")
        if self.normalization not in NORMALIZATIONS:
            raise InvalidInput(f"unknown normalization {self.normalization!r}")


@dataclass(frozen=True)
class SymbolSeries:
    """Integer symbol stream over a finite alphabet."""

    symbols: np.ndarray
    cardinality: int
    sample_interval: float = 1.0

    def __post_init__(self):
        sym = np.ascontiguousarray(self.symbols, dtype=np.int64)
        object.__setattr__(self, "symbols", sym)
        sym.flags.writeable = False
        if sym.ndim != 1 or sym.size < 1:
            raise InvalidInput("symbols must be a nonempty 1-D sequence")
        if self.cardinality < 1:
            raise InvalidInput("cardinality must be >= 1")
        if sym.min() < 0 or sym.max() >= self.cardinality:
            raise InvalidInput("symbols must lie in [0, cardinality)")
        if not self.sample_interval > 0:
            raise InvalidInput("sample_interval must be positive")

    def __len__(self) -> int:
        return self.symbols.size


@dataclass(frozen=True)
class EmbeddingSpec:
    """Window geometry: destination-past order ``ell``, source window
    length ``m_plus_1`` and signed interaction delay ``tau`` in samples."""

    ell: int = 1
    m_plus_1: int = 1
    tau: int = 1

    def __post_init__(self):
        if self.ell < 1:
            raise InvalidInput("ell must be >= 1")
        if self.m_plus_1 < 1:
            raise InvalidInput("m_plus_1 must be >= 1")


class EmbeddedRecord(NamedTuple):
    source_word: int
    dest_past_word: int
    dest_symbol: int
    time_index: int


@dataclass(frozen=True)
class EmbeddedRecords:
    """Columnar sequence of :class:`EmbeddedRecord`.

    ``source_word[t]`` indexes the product alphabet of the source window,
    ``dest_past_word[t]`` the product alphabet of the destination past and
    ``dest_symbol[t]`` the destination alphabet.
    """

    source_word: np.ndarray
    dest_past_word: np.ndarray
    dest_symbol: np.ndarray
    time_index: np.ndarray
    n_source_words: int
    n_past_words: int
    n_dest_symbols: int
    spec: EmbeddingSpec

    def __len__(self) -> int:
        return self.source_word.size

    def __getitem__(self, i: int) -> EmbeddedRecord:
        return EmbeddedRecord(
            int(self.source_word[i]),
            int(self.dest_past_word[i]),
            int(self.dest_symbol[i]),
            int(self.time_index[i]),
        )

    def __iter__(self) -> Iterator[EmbeddedRecord]:
        for i in range(len(self)):
            yield self[i]


@dataclass(frozen=True)
class PairEmbeddedRecords:
    """Columnar records for two source streams driving one destination."""

    dest_past_word: np.ndarray
    source_word_a: np.ndarray
    source_word_b: np.ndarray
    dest_symbol: np.ndarray
    time_index: np.ndarray
    n_past_words: int
    n_source_words_a: int
    n_source_words_b: int
    n_dest_symbols: int
    spec_a: EmbeddingSpec
    spec_b: EmbeddingSpec

    def __len__(self) -> int:
        return self.dest_symbol.size


def _as_finite_array(series, what: str) -> np.ndarray:
    values = np.asarray(series, dtype=np.float64)
    if values.ndim != 1:
        raise InvalidInput(f"{what} must be 1-D")
    if values.size == 0:
        raise InvalidInput(f"{what} is empty")
    if not np.all(np.isfinite(values)):
        raise InvalidInput(f"{what} contains non-finite values")
    return values


def _affine_params(values: np.ndarray, normalization: str) -> tuple[float, float]:
    """Offset/scale such that normalized = (x - offset) / scale."""
    if normalization == "none":
        return 0.0, 1.0
    if normalization == "zscore":
        std = float(values.std())
        if std == 0.0:
            raise DegenerateData("z-score normalization of a constant series")
        return float(values.mean()), std
    if normalization == "minmax":
        lo, hi = float(values.min()), float(values.max())
        if hi == lo:
            raise DegenerateData("min-max normalization of a constant series")
        return lo, hi - lo
    raise InvalidInput(f"unknown normalization {normalization!r}")


def fit_encoder(
    series,
    n_bins: int,
    strategy: str = "equal_width",
    normalization: str = "none",
    threshold: float = 0.5,
) -> Encoder:
    """Fit a binning rule to a series.

    ``equal_width`` splits the (normalized) observed range evenly;
    ``quantile`` places edges at empirical quantiles for near-equal
    occupancy; ``threshold`` makes a binary encoder splitting at
    ``threshold`` in normalized units.
    """
    values = _as_finite_array(series, "series")
    if strategy not in STRATEGIES:
        raise InvalidInput(f"unknown strategy {strategy!r}")
    if n_bins < 1:
        raise InvalidInput("n_bins must be >= 1")
    if n_bins >= 2 and float(values.min()) == float(values.max()):
        raise DegenerateData("constant series cannot fill >= 2 bins")

    if n_bins == 1:
        return Encoder(np.empty(0), 1, strategy, normalization)

    offset, scale = _affine_params(values, normalization)

    if strategy == "equal_width":
        lo = (float(values.min()) - offset) / scale
        hi = (float(values.max()) - offset) / scale
        norm_edges = np.linspace(lo, hi, n_bins + 1)[1:-1]
        edges = offset + scale * norm_edges
    elif strategy == "quantile":
        # Rank-based edges: with all-distinct values each bin receives
        # floor((i+1)N/k) - floor(iN/k) samples, so occupancy deviates by
        # at most one from N/k.
        ordered = np.sort(values)
        n = ordered.size
        ranks = (np.arange(1, n_bins) * n) // n_bins
        edges = ordered[ranks]
        if not np.all(np.diff(edges) > 0):
            raise DegenerateData("quantile bins collapse under ties")
    else:  # threshold
        if n_bins != 2:
            raise InvalidInput("threshold strategy requires n_bins == 2")
        edges = np.array([offset + scale * threshold])

    return Encoder(edges, n_bins, strategy, normalization)


def encode(series, encoder: Encoder, sample_interval: float = 1.0) -> SymbolSeries:
    """Map a real series to symbols with a fitted encoder."""
    values = _as_finite_array(series, "series")
    symbols = np.searchsorted(encoder.bin_edges, values, side="right")
    return SymbolSeries(symbols.astype(np.int64), encoder.cardinality, sample_interval)


def pack_words(windows: np.ndarray, cardinality: int) -> np.ndarray:
    """Pack symbol windows (rows, most recent symbol in column 0) into
    mixed-radix word indices."""
    windows = np.asarray(windows, dtype=np.int64)
    weights = cardinality ** np.arange(windows.shape[1], dtype=np.int64)
    return windows @ weights


def unpack_word(word: int, cardinality: int, length: int) -> tuple[int, ...]:
    """Inverse of :func:`pack_words` for a single word; most recent first."""
    out = []
    for _ in range(length):
        out.append(word % cardinality)
        word //= cardinality
    return tuple(out)


def _valid_window(n: int, ell: int, m_plus_1: int, tau: int) -> tuple[int, int]:
    """Inclusive range of time indices with every referenced lag in bounds."""
    lo = max(ell, tau + m_plus_1 - 1)
    hi = min(n - 1, n - 1 + tau)
    return lo, hi


def _source_words(symbols: np.ndarray, ts: np.ndarray, tau: int, m_plus_1: int,
                  cardinality: int) -> np.ndarray:
    word = np.zeros(ts.size, dtype=np.int64)
    weight = 1
    for b in range(m_plus_1):
        word += symbols[ts - tau - b] * weight
        weight *= cardinality
    return word


def _past_words(symbols: np.ndarray, ts: np.ndarray, ell: int,
                cardinality: int) -> np.ndarray:
    word = np.zeros(ts.size, dtype=np.int64)
    weight = 1
    for a in range(1, ell + 1):
        word += symbols[ts - a] * weight
        weight *= cardinality
    return word


def embed(src: SymbolSeries, dst: SymbolSeries, spec: EmbeddingSpec) -> EmbeddedRecords:
    """Build one record per time step whose full window is in bounds.

    For positive ``tau`` the number of records is
    ``len(dst) - max(ell, tau + m_plus_1 - 1)``; a negative ``tau``
    additionally drops steps at the end so the future-pointing source
    window stays in bounds.
    """
    if len(src) != len(dst):
        raise InvalidInput("source and destination series differ in length")
    if src.sample_interval != dst.sample_interval:
        raise InvalidInput("source and destination sample intervals differ")
    n = len(dst)
    lo, hi = _valid_window(n, spec.ell, spec.m_plus_1, spec.tau)
    if hi < lo:
        raise InsufficientData(
            f"series of length {n} too short for ell={spec.ell}, "
            f"m_plus_1={spec.m_plus_1}, tau={spec.tau}"
        )
    ts = np.arange(lo, hi + 1, dtype=np.int64)
    return EmbeddedRecords(
        source_word=_source_words(src.symbols, ts, spec.tau, spec.m_plus_1,
                                  src.cardinality),
        dest_past_word=_past_words(dst.symbols, ts, spec.ell, dst.cardinality),
        dest_symbol=dst.symbols[ts].copy(),
        time_index=ts,
        n_source_words=src.cardinality ** spec.m_plus_1,
        n_past_words=dst.cardinality ** spec.ell,
        n_dest_symbols=dst.cardinality,
        spec=spec,
    )


def embed_pair(
    src_a: SymbolSeries,
    src_b: SymbolSeries,
    dst: SymbolSeries,
    spec_a: EmbeddingSpec,
    spec_b: EmbeddingSpec,
) -> PairEmbeddedRecords:
    """Joint embedding of two sources against one destination.

    Both specs must agree on ``ell``; the valid time window is the
    intersection of the windows of the two single-source embeddings.
    """
    if spec_a.ell != spec_b.ell:
        raise InvalidInput("pair embedding requires a shared ell")
    if not (len(src_a) == len(src_b) == len(dst)):
        raise InvalidInput("all three series must share one length")
    n = len(dst)
    lo_a, hi_a = _valid_window(n, spec_a.ell, spec_a.m_plus_1, spec_a.tau)
    lo_b, hi_b = _valid_window(n, spec_b.ell, spec_b.m_plus_1, spec_b.tau)
    lo, hi = max(lo_a, lo_b), min(hi_a, hi_b)
    if hi < lo:
        raise InsufficientData("series too short for the joint embedding")
    ts = np.arange(lo, hi + 1, dtype=np.int64)
    return PairEmbeddedRecords(
        dest_past_word=_past_words(dst.symbols, ts, spec_a.ell, dst.cardinality),
        source_word_a=_source_words(src_a.symbols, ts, spec_a.tau,
                                    spec_a.m_plus_1, src_a.cardinality),
        source_word_b=_source_words(src_b.symbols, ts, spec_b.tau,
                                    spec_b.m_plus_1, src_b.cardinality),
        dest_symbol=dst.symbols[ts].copy(),
        time_index=ts,
        n_past_words=dst.cardinality ** spec_a.ell,
        n_source_words_a=src_a.cardinality ** spec_a.m_plus_1,
        n_source_words_b=src_b.cardinality ** spec_b.m_plus_1,
        n_dest_symbols=dst.cardinality,
        spec_a=spec_a,
        spec_b=spec_b,
    )
