"""Plug-in estimation of channel tensors from embedded records.

Counting is a plain multinomial tally over the joint cells; conditional
relative frequencies then give the tensor rows.  Rows whose context never
occurred carry no information: with zero smoothing they are set uniform
and reported, never silently invented.  Sub-channels with zero occupancy
get weight zero so they drop out of any weighted score downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .alphabet import EmbeddedRecords, PairEmbeddedRecords
from .errors import InsufficientData, InvalidInput
from .tensors import CausalTensor, InteractionTensor

# Counters are 64-bit; in-scope alphabets are tiny so dense arrays win.


@dataclass(frozen=True)
class JointCounts:
    """Dense occurrence counts over (g, i, j) or (h, i, j, k) cells."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        counts.flags.writeable = False
        if counts.ndim not in (3, 4):
            raise InvalidInput("joint counts must be 3-D or 4-D")
        if counts.min(initial=0) < 0:
            raise InvalidInput("counts must be nonnegative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class EstimationReport:
    """Bookkeeping for one estimation pass.

    ``unseen_contexts`` lists context tuples with zero occupancy: ``(g,)``
    for whole sub-channels and ``(g, i)`` (or ``(h, i, j)``) for single
    conditioning rows inside occupied sub-channels.
    """

    unseen_contexts: tuple = field(default_factory=tuple)
    effective_samples: int = 0
    smoothing: float = 0.0


def count_joint(records: EmbeddedRecords) -> JointCounts:
    """Tally (dest_past_word, source_word, dest_symbol) occurrences."""
    if len(records) == 0:
        raise InsufficientData("no records to count")
    g_n, i_n, j_n = records.n_past_words, records.n_source_words, records.n_dest_symbols
    flat = (records.dest_past_word * i_n + records.source_word) * j_n + records.dest_symbol
    counts = np.bincount(flat, minlength=g_n * i_n * j_n)
    return JointCounts(counts.reshape(g_n, i_n, j_n))


def count_joint_pair(records: PairEmbeddedRecords) -> JointCounts:
    """Tally (dest_past_word, source_word_a, source_word_b, dest_symbol)."""
    if len(records) == 0:
        raise InsufficientData("no records to count")
    h_n = records.n_past_words
    a_n, b_n = records.n_source_words_a, records.n_source_words_b
    k_n = records.n_dest_symbols
    flat = ((records.dest_past_word * a_n + records.source_word_a) * b_n
            + records.source_word_b) * k_n + records.dest_symbol
    counts = np.bincount(flat, minlength=h_n * a_n * b_n * k_n)
    return JointCounts(counts.reshape(h_n, a_n, b_n, k_n))


def _conditional_rows(counts: np.ndarray, smoothing: float):
    """Normalize the last axis; uniform-fill empty rows and return their ids."""
    n_out = counts.shape[-1]
    row_tot = counts.sum(axis=-1, keepdims=True)
    empty = row_tot[..., 0] == 0
    denom = row_tot + smoothing * n_out
    with np.errstate(divide="ignore", invalid="ignore"):
        rows = (counts + smoothing) / denom
    if smoothing == 0.0 and np.any(empty):
        rows[empty, :] = 1.0 / n_out
    unseen = [tuple(int(v) for v in idx) for idx in zip(*np.nonzero(empty))]
    return rows, unseen


def tensor_from_counts(counts: JointCounts,
                       smoothing: float = 0.0) -> tuple[CausalTensor, EstimationReport]:
    """Conditional relative frequencies as a causal tensor.

    Sub-channel weights are the marginal frequencies of the past words and
    ``context_input`` is filled with the conditional input frequencies.
    """
    if counts.counts.ndim != 3:
        raise InvalidInput("need 3-D counts; use interaction_from_counts for 4-D")
    if smoothing < 0:
        raise InvalidInput("smoothing must be >= 0")
    c = counts.counts.astype(np.float64)
    total = c.sum()
    if total == 0:
        raise InsufficientData("empty joint counts")

    entries, unseen_rows = _conditional_rows(c, smoothing)

    g_tot = c.sum(axis=(1, 2))
    weights = g_tot / total
    unseen_g = [(int(g),) for g in np.nonzero(g_tot == 0)[0]]

    ctx, _ = _conditional_rows(c.sum(axis=2), 0.0)

    unseen = unseen_g + [(g, i) for (g, i) in unseen_rows if g_tot[g] > 0]
    report = EstimationReport(unseen_contexts=tuple(unseen),
                              effective_samples=int(total),
                              smoothing=smoothing)
    tensor = CausalTensor(entries, subchannel_weights=weights, context_input=ctx)
    return tensor, report


def interaction_from_counts(counts: JointCounts, smoothing: float = 0.0,
                            delay_a: int = 0, delay_b: int = 0,
                            ) -> tuple[InteractionTensor, EstimationReport]:
    """Conditional relative frequencies over (h, i, j) -> k rows."""
    if counts.counts.ndim != 4:
        raise InvalidInput("interaction estimation needs 4-D counts")
    if smoothing < 0:
        raise InvalidInput("smoothing must be >= 0")
    c = counts.counts.astype(np.float64)
    total = c.sum()
    if total == 0:
        raise InsufficientData("empty joint counts")
    entries, unseen = _conditional_rows(c, smoothing)
    report = EstimationReport(unseen_contexts=tuple(unseen),
                              effective_samples=int(total),
                              smoothing=smoothing)
    return InteractionTensor(entries, delay_a=delay_a, delay_b=delay_b), report


def joint_pmf(counts: JointCounts) -> np.ndarray:
    """Normalized counts as a dense joint pmf."""
    total = counts.total
    if total == 0:
        raise InsufficientData("empty joint counts")
    return counts.counts / total
