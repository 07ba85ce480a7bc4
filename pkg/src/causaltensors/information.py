"""Mutual information, transfer entropy and the data-processing check.

All quantities are in bits.  Zero probabilities follow the usual
convention 0 * log(0 / q) = 0; the plug-in estimates never divide a
positive numerator by a zero denominator because empirical conditionals
are absolutely continuous with respect to their marginals.

Two independent routes to transfer entropy are kept side by side on
purpose: :func:`transfer_entropy` works from a tensor plus a joint, while
:func:`transfer_entropy_plugin` works from the joint alone.  They must
agree on consistent inputs and the tests hold them to that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, ShapeError
from .estimation import JointCounts, joint_pmf
from .tensors import AveragedTensor, CausalTensor, Pmf


def _as_joint(joint, expected_ndim: int) -> np.ndarray:
    if isinstance(joint, JointCounts):
        joint = joint_pmf(joint)
    j = np.asarray(joint, dtype=np.float64)
    if j.ndim != expected_ndim:
        raise ShapeError(f"joint must be {expected_ndim}-D")
    if np.any(j < 0) or abs(float(j.sum()) - 1.0) > 1e-9:
        raise InvalidInput("joint must be a probability array")
    return j


def _plogq(p: np.ndarray, num: np.ndarray, den: np.ndarray) -> float:
    """Sum of p * log2(num / den) over cells with p > 0."""
    mask = p > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = p[mask] * np.log2(num[mask] / den[mask])
    return float(terms.sum())


@dataclass(frozen=True)
class TeResult:
    """Transfer entropy with its per-sub-channel decomposition.

    ``value_bits`` is exactly the weight-mix of the per-sub-channel mutual
    informations, so the decomposition can be inspected directly.
    """

    value_bits: float
    per_subchannel: tuple          # ((weight, mi_bits), ...)
    delay: int = 0


def mutual_information(input_pmf, channel) -> float:
    """Mutual information across one memoryless channel, in bits."""
    if isinstance(input_pmf, Pmf):
        p = input_pmf.probs
    else:
        p = np.asarray(input_pmf, dtype=np.float64)
    if isinstance(channel, CausalTensor):
        w = channel.matrix
    else:
        w = np.asarray(channel, dtype=np.float64)
    if p.ndim != 1 or w.ndim != 2 or w.shape[0] != p.size:
        raise ShapeError("input pmf and channel matrix do not line up")
    joint = p[:, None] * w
    p_out = joint.sum(axis=0)
    mi = _plogq(joint, w, np.broadcast_to(p_out, w.shape))
    return max(mi, 0.0)


def _subchannel_decomposition(joint: np.ndarray, entries: np.ndarray):
    """Per-sub-channel (weight, conditional MI) pairs for a (g, i, j) joint."""
    weights = joint.sum(axis=(1, 2))
    parts = []
    for g in range(joint.shape[0]):
        w = float(weights[g])
        if w == 0.0:
            parts.append((0.0, 0.0))
            continue
        cond = joint[g] / w
        p_out = cond.sum(axis=0)
        mi = _plogq(cond, entries[g], np.broadcast_to(p_out, cond.shape))
        parts.append((w, mi))
    return parts


def transfer_entropy(joint, tensor: CausalTensor) -> TeResult:
    """Transfer entropy of a channel tensor under a (g, i, j) joint."""
    j = _as_joint(joint, 3)
    if j.shape != tensor.entries.shape:
        raise ShapeError("joint shape does not match the tensor")
    parts = _subchannel_decomposition(j, tensor.entries)
    value = float(sum(w * mi for w, mi in parts))
    return TeResult(max(value, 0.0), tuple(parts), delay=tensor.delay)


def transfer_entropy_plugin(joint) -> float:
    """Transfer entropy from a (g, i, j) joint alone, in bits.

    Independent of any tensor object: both conditionals are read off the
    joint itself.
    """
    j = _as_joint(joint, 3)
    w_g = j.sum(axis=(1, 2), keepdims=True)
    row = j.sum(axis=2, keepdims=True)
    out_g = j.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        num = j / row                        # p(j | g, i)
        den = out_g / w_g                    # p(j | g)
    num = np.broadcast_to(num, j.shape)
    den = np.broadcast_to(den, j.shape)
    return max(_plogq(j, num, den), 0.0)


def expected_indirect_te(a_bar: AveragedTensor, b: CausalTensor, joint) -> float:
    """Transfer entropy predicted for a two-step relay.

    ``joint[h, i, k]`` is the joint over (destination past, first-stage
    input, destination symbol); the relay channel is the composition of
    ``a_bar`` and ``b``.  Equals the transfer entropy of the cascaded
    tensor under the same joint.
    """
    j = _as_joint(joint, 3)
    mix = np.einsum("hij,hjk->hik", a_bar.entries, b.entries)
    if j.shape != mix.shape:
        raise ShapeError("joint shape does not match the cascaded tensor")
    w_h = j.sum(axis=(1, 2), keepdims=True)
    out_h = j.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        den = np.broadcast_to(out_h / w_h, j.shape)
    return max(_plogq(j, mix, den), 0.0)


@dataclass(frozen=True)
class DpiResult:
    """Outcome of a data-processing-inequality check.

    ``margin`` is ``te_xz - min(te_xy, te_yz)``; the inequality is violated
    when the margin exceeds the allowed slack.
    """

    satisfied: bool
    margin: float


def dpi_check(te_xy: float, te_yz: float, te_xz: float,
              slack: float = 0.0) -> DpiResult:
    """Check te_xz <= min(te_xy, te_yz) + slack."""
    for v in (te_xy, te_yz, te_xz):
        if v < 0:
            raise InvalidInput("transfer entropies must be nonnegative")
    margin = te_xz - min(te_xy, te_yz)
    return DpiResult(satisfied=margin <= slack, margin=margin)
