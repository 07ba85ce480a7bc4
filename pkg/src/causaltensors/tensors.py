"""Stochastic-tensor algebra for channel-based time-series analysis.

A conditioned communication channel is stored as a row-stochastic 3-index
array ``entries[g, i, j]``: the probability of emitting output symbol ``j``
given input word ``i`` while the destination past selects sub-channel
``g``.  A signed integer ``delay`` carries the source-to-destination lag in
samples; cascading adds delays, Bayes inversion (:func:`dagger`) negates
them.  All objects are immutable after construction and all operations are
pure functions, so values can be shared freely across threads.

Index order conventions used throughout the package:

* causal tensor      ``[g, i, j]``  (sub-channel, input word, output)
* averaged tensor    ``[h, i, j]``  (downstream sub-channel, input, output)
* interaction tensor ``[h, i, j, k]`` (sub-channel, input A, input B, output)
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, ShapeError, SingularChannel

#: Stochasticity tolerance for exactly constructed objects.
ROW_SUM_ATOL = 1e-12


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True, order="C")
    arr.flags.writeable = False
    return arr


def _check_stochastic(entries: np.ndarray, what: str, atol: float = ROW_SUM_ATOL):
    if np.any(entries < 0):
        raise InvalidInput(f"{what} has negative entries")
    sums = entries.sum(axis=-1)
    if not np.allclose(sums, 1.0, rtol=0.0, atol=atol):
        worst = float(np.abs(sums - 1.0).max())
        raise InvalidInput(f"{what} rows must sum to 1 (worst deviation {worst:g})")


@dataclass(frozen=True)
class Pmf:
    """Probability vector over a finite alphabet."""

    probs: np.ndarray

    def __post_init__(self):
        probs = _freeze(self.probs)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 1 or probs.size < 1:
            raise InvalidInput("pmf must be a nonempty vector")
        _check_stochastic(probs[None, :], "pmf")

    @property
    def cardinality(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, n: int) -> "Pmf":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def point_mass(cls, index: int, n: int) -> "Pmf":
        p = np.zeros(n)
        p[index] = 1.0
        return cls(p)


@dataclass(frozen=True)
class CausalTensor:
    """Row-stochastic ``[g, i, j]`` array with delay metadata.

    ``subchannel_weights`` holds the selection probabilities of the
    sub-channels (uniform when not given); ``context_input`` optionally
    carries the per-sub-channel input pmfs ``p(i | g)``, which estimation
    fills in and :func:`dagger` uses as its default input.
    """

    entries: np.ndarray
    delay: int = 0
    subchannel_weights: np.ndarray | None = None
    context_input: np.ndarray | None = None

    def __post_init__(self):
        entries = _freeze(self.entries)
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 3:
            raise ShapeError("causal tensor entries must be 3-D [g, i, j]")
        _check_stochastic(entries, "causal tensor")
        g = entries.shape[0]
        if self.subchannel_weights is None:
            weights = np.full(g, 1.0 / g)
        else:
            weights = np.asarray(self.subchannel_weights, dtype=np.float64)
        weights = _freeze(weights)
        object.__setattr__(self, "subchannel_weights", weights)
        if weights.shape != (g,):
            raise ShapeError("subchannel_weights must have one entry per sub-channel")
        _check_stochastic(weights[None, :], "subchannel weights")
        if self.context_input is not None:
            ctx = _freeze(self.context_input)
            object.__setattr__(self, "context_input", ctx)
            if ctx.shape != entries.shape[:2]:
                raise ShapeError("context_input must be shaped [g, i]")
            _check_stochastic(ctx, "context_input")
        object.__setattr__(self, "delay", int(self.delay))

    @property
    def n_subchannels(self) -> int:
        return self.entries.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.entries.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.entries.shape[2]

    @property
    def is_single_channel(self) -> bool:
        return self.n_subchannels == 1

    @property
    def matrix(self) -> np.ndarray:
        """The transition matrix of a single-channel tensor."""
        if not self.is_single_channel:
            raise ShapeError("matrix view requires a single-channel tensor")
        return self.entries[0]

    @classmethod
    def from_matrix(cls, matrix, delay: int = 0,
                    input_pmf=None) -> "CausalTensor":
        """Wrap a plain transition matrix as a single-channel tensor."""
        m = np.asarray(matrix, dtype=np.float64)
        if m.ndim != 2:
            raise ShapeError("transition matrix must be 2-D")
        ctx = None
        if input_pmf is not None:
            p = input_pmf.probs if isinstance(input_pmf, Pmf) else np.asarray(input_pmf)
            ctx = p[None, :]
        return cls(m[None, :, :], delay=delay, subchannel_weights=np.array([1.0]),
                   context_input=ctx)


@dataclass(frozen=True)
class AveragedTensor:
    """Context-averaged tensor ``[h, i, j]``, row-stochastic over ``j``."""

    entries: np.ndarray
    delay: int = 0

    def __post_init__(self):
        entries = _freeze(self.entries)
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 3:
            raise ShapeError("averaged tensor entries must be 3-D [h, i, j]")
        _check_stochastic(entries, "averaged tensor")
        object.__setattr__(self, "delay", int(self.delay))

    @property
    def n_subchannels(self) -> int:
        return self.entries.shape[0]

    def as_causal(self, subchannel_weights=None,
                  context_input=None) -> CausalTensor:
        """Reinterpret the ``h`` axis as the sub-channel axis."""
        return CausalTensor(self.entries, delay=self.delay,
                            subchannel_weights=subchannel_weights,
                            context_input=context_input)


@dataclass(frozen=True)
class InteractionTensor:
    """Joint two-parent channel ``[h, i, j, k]``, row-stochastic over ``k``."""

    entries: np.ndarray
    delay_a: int = 0
    delay_b: int = 0

    def __post_init__(self):
        entries = _freeze(self.entries)
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 4:
            raise ShapeError("interaction tensor entries must be 4-D [h, i, j, k]")
        _check_stochastic(entries, "interaction tensor")
        object.__setattr__(self, "delay_a", int(self.delay_a))
        object.__setattr__(self, "delay_b", int(self.delay_b))

    @property
    def n_subchannels(self) -> int:
        return self.entries.shape[0]


class Degeneracy(enum.Enum):
    NOISELESS = "noiseless"
    PERFECT_NOISY = "perfect_noisy"
    GENERAL = "general"


def apply(tensor: CausalTensor, input_pmfs) -> np.ndarray:
    """Push per-sub-channel input pmfs through the tensor.

    A 1-D input (or :class:`Pmf`) is accepted for single-channel tensors
    and yields a 1-D output pmf; otherwise the input must be shaped
    ``[g, i]`` and the output is ``[g, j]``.  The map is linear in the
    input by construction.
    """
    if isinstance(input_pmfs, Pmf):
        input_pmfs = input_pmfs.probs
    p = np.asarray(input_pmfs, dtype=np.float64)
    if p.ndim == 1:
        if not tensor.is_single_channel:
            raise ShapeError("1-D input requires a single-channel tensor")
        if p.size != tensor.n_inputs:
            raise ShapeError("input pmf length does not match tensor inputs")
        return p @ tensor.entries[0]
    if p.shape != (tensor.n_subchannels, tensor.n_inputs):
        raise ShapeError("input pmfs must be shaped [g, i]")
    return np.einsum("gi,gij->gj", p, tensor.entries)


def average_tensor(tensor: CausalTensor, context=None) -> AveragedTensor:
    """Average a tensor over its sub-channel axis with context weights.

    ``context[h, i, g]`` gives the probability of sub-channel ``g`` given
    downstream sub-channel ``h`` and input ``i``.  For a single-channel
    tensor the context may be omitted, in which case the result is the
    tensor itself (one downstream sub-channel).
    """
    if context is None:
        if not tensor.is_single_channel:
            raise ShapeError("context is required for multi-channel tensors")
        return AveragedTensor(tensor.entries, delay=tensor.delay)
    ctx = np.asarray(context, dtype=np.float64)
    if ctx.ndim != 3 or ctx.shape[2] != tensor.n_subchannels:
        raise ShapeError("context must be shaped [h, i, g] over the sub-channels")
    if ctx.shape[1] != tensor.n_inputs:
        raise ShapeError("context input axis does not match the tensor")
    _check_stochastic(ctx, "context", atol=1e-9)
    out = np.einsum("hig,gij->hij", ctx, tensor.entries)
    return AveragedTensor(out, delay=tensor.delay)


def dagger(tensor: CausalTensor, input_pmfs=None,
           fallback: str = "error") -> CausalTensor:
    """Bayes-invert a tensor per sub-channel and negate its delay.

    ``input_pmfs[g, i]`` defaults to the tensor's ``context_input``.  Output
    symbols that can never occur make the inverse undefined on that row;
    ``fallback='error'`` raises :class:`SingularChannel` listing the dead
    ``(g, j)`` cells while ``fallback='uniform'`` fills those rows evenly.
    """
    if input_pmfs is None:
        if tensor.context_input is None:
            raise InvalidInput("no input pmfs given and tensor has no context_input")
        inp = tensor.context_input
    elif isinstance(input_pmfs, Pmf):
        inp = input_pmfs.probs[None, :]
    else:
        inp = np.asarray(input_pmfs, dtype=np.float64)
        if inp.ndim == 1:
            inp = inp[None, :]
    if inp.shape != (tensor.n_subchannels, tensor.n_inputs):
        raise ShapeError("input pmfs must be shaped [g, i]")
    _check_stochastic(inp, "input pmfs", atol=1e-9)

    joint = tensor.entries * inp[:, :, None]        # [g, i, j]
    p_out = joint.sum(axis=1)                       # [g, j]
    dead = p_out == 0.0
    if np.any(dead):
        if fallback == "error":
            cells = [(int(g), int(j)) for g, j in zip(*np.nonzero(dead))]
            raise SingularChannel(cells)
        if fallback != "uniform":
            raise InvalidInput(f"unknown fallback {fallback!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.transpose(joint, (0, 2, 1)) / p_out[:, :, None]   # [g, j, i]
    if np.any(dead):
        inv[dead, :] = 1.0 / tensor.n_inputs
    return CausalTensor(inv, delay=-tensor.delay,
                        subchannel_weights=tensor.subchannel_weights,
                        context_input=p_out)


def cascade(downstream: CausalTensor, upstream) -> CausalTensor:
    """Compose two channels in series: apply ``upstream`` then ``downstream``.

    ``upstream`` may be an :class:`AveragedTensor` aligned with the
    downstream sub-channel axis, a single-channel tensor (broadcast over
    that axis) or a multi-channel tensor whose sub-channel axis already
    matches.  The result's delay is the sum of the two delays.
    """
    h = downstream.n_subchannels
    if isinstance(upstream, AveragedTensor):
        up, up_delay = upstream.entries, upstream.delay
        if up.shape[0] != h:
            raise ShapeError("averaged tensor sub-channel axis mismatch")
    elif isinstance(upstream, CausalTensor):
        up, up_delay = upstream.entries, upstream.delay
        if upstream.is_single_channel:
            up = np.broadcast_to(up, (h,) + up.shape[1:])
        elif up.shape[0] != h:
            raise ShapeError("sub-channel axes of the two tensors do not align")
    else:
        raise ShapeError("upstream must be a CausalTensor or AveragedTensor")
    if up.shape[2] != downstream.n_inputs:
        raise ShapeError("inner alphabet of the cascade does not match")
    out = np.einsum("hij,hjk->hik", up, downstream.entries)
    return CausalTensor(out, delay=up_delay + downstream.delay,
                        subchannel_weights=downstream.subchannel_weights)


def contract_interaction(interaction: InteractionTensor, weights: AveragedTensor,
                         eliminate: str) -> CausalTensor:
    """Collapse one parent of an interaction tensor into a pairwise tensor.

    ``eliminate='a'`` sums out the first parent using reconstruction
    weights shaped ``[h, j, i]`` and yields the ``b -> child`` tensor;
    ``eliminate='b'`` sums out the second parent using forward weights
    ``[h, i, j]`` and yields the ``a -> child`` tensor.  The surviving
    parent's delay is kept on the result.
    """
    d = interaction.entries                         # [h, i, j, k]
    w = weights.entries
    if eliminate == "a":
        if w.shape != (d.shape[0], d.shape[2], d.shape[1]):
            raise ShapeError("weights must be shaped [h, j, i] to eliminate 'a'")
        out = np.einsum("hji,hijk->hjk", w, d)
        delay = interaction.delay_b
    elif eliminate == "b":
        if w.shape != (d.shape[0], d.shape[1], d.shape[2]):
            raise ShapeError("weights must be shaped [h, i, j] to eliminate 'b'")
        out = np.einsum("hij,hijk->hik", w, d)
        delay = interaction.delay_a
    else:
        raise InvalidInput("eliminate must be 'a' or 'b'")
    return CausalTensor(out, delay=delay)


def classify_degeneracy(tensor, tol: float) -> Degeneracy:
    """Classify a tensor as noiseless, perfectly noisy, or neither.

    Perfectly noisy means every entry equals ``1 / n_outputs`` within
    ``tol``; noiseless means every entry is 0 or 1 and every per-sub-channel
    column also sums to 1 (a permutation per sub-channel), which forces the
    input and output alphabets to have equal size.
    """
    e = tensor.entries if hasattr(tensor, "entries") else np.asarray(tensor, float)
    if e.ndim == 2:
        e = e[None, :, :]
    n_out = e.shape[-1]
    if np.all(np.abs(e - 1.0 / n_out) <= tol):
        return Degeneracy.PERFECT_NOISY
    near01 = np.all(np.minimum(np.abs(e), np.abs(e - 1.0)) <= tol)
    if near01 and np.allclose(e.sum(axis=1), 1.0, rtol=0.0, atol=tol):
        return Degeneracy.NOISELESS
    return Degeneracy.GENERAL


def tensor_to_json(tensor: CausalTensor) -> str:
    """Serialize to JSON; floats round-trip bit-exactly at double precision."""
    obj = {
        "dims": [tensor.n_subchannels, tensor.n_inputs, tensor.n_outputs],
        "delay": tensor.delay,
        "subchannel_weights": tensor.subchannel_weights.tolist(),
        "entries": tensor.entries.tolist(),
    }
    if tensor.context_input is not None:
        obj["context_input"] = tensor.context_input.tolist()
    return json.dumps(obj)


def tensor_from_json(text: str) -> CausalTensor:
    obj = json.loads(text)
    entries = np.asarray(obj["entries"], dtype=np.float64)
    dims = tuple(obj["dims"])
    if entries.shape != dims:
        raise ShapeError(f"entries shape {entries.shape} does not match dims {dims}")
    ctx = obj.get("context_input")
    return CausalTensor(
        entries,
        delay=int(obj["delay"]),
        subchannel_weights=np.asarray(obj["subchannel_weights"], dtype=np.float64),
        context_input=None if ctx is None else np.asarray(ctx, dtype=np.float64),
    )
