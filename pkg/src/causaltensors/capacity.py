"""Channel capacity via Blahut-Arimoto and its sub-channel-weighted form.

The iteration keeps certified lower and upper capacity bounds each step
(mutual information of the current input vs. the max row divergence), so
convergence within ``tol`` bits guarantees the reported capacity is within
``tol`` of the true value.  The lower-bound sequence is nondecreasing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InvalidInput, ShapeError
from .tensors import CausalTensor, Pmf

_LN2 = np.log(2.0)


@njit(cache=True)
def _ba_iterate(w, log_w, tol_nats, max_iter):
    """Alternating maximization with certified bounds, in nats.

    Returns (lower_bound, input_pmf, iterations, converged).  The lower
    bound is the mutual information of the current input; the upper bound
    is the largest row divergence, so their gap certifies accuracy.
    """
    n_in, n_out = w.shape
    r = np.full(n_in, 1.0 / n_in)
    div = np.empty(n_in)
    p_out = np.empty(n_out)
    lower = 0.0
    for it in range(1, max_iter + 1):
        for j in range(n_out):
            acc = 0.0
            for i in range(n_in):
                acc += r[i] * w[i, j]
            p_out[j] = acc
        upper = -1.0e300
        lower = 0.0
        for i in range(n_in):
            acc = 0.0
            for j in range(n_out):
                if w[i, j] > 0.0:
                    acc += w[i, j] * (log_w[i, j] - np.log(p_out[j]))
            div[i] = acc
            lower += r[i] * acc
            if acc > upper:
                upper = acc
        if upper - lower < tol_nats:
            return lower, r, it, True
        total = 0.0
        for i in range(n_in):
            r[i] = r[i] * np.exp(div[i] - upper)
            total += r[i]
        for i in range(n_in):
            r[i] /= total
    return lower, r, max_iter, False


@dataclass(frozen=True)
class CapacityResult:
    capacity_bits: float
    optimal_input: Pmf
    iterations: int
    converged: bool


def blahut_arimoto(channel, tol: float = 1e-9,
                   max_iter: int = 10_000) -> CapacityResult:
    """Capacity of one memoryless channel matrix, in bits.

    Output columns that are never emitted are dropped up front (they
    contribute nothing and would otherwise put zeros under the log).  On
    hitting ``max_iter`` the best lower bound is returned with
    ``converged=False``; the call never raises for slow convergence.
    """
    if isinstance(channel, CausalTensor):
        w = channel.matrix
    else:
        w = np.asarray(channel, dtype=np.float64)
    if w.ndim != 2:
        raise ShapeError("channel must be a 2-D transition matrix")
    if np.any(w < 0) or not np.allclose(w.sum(axis=1), 1.0, rtol=0, atol=1e-9):
        raise InvalidInput("channel rows must be probability vectors")

    w = np.ascontiguousarray(w[:, w.sum(axis=0) > 0])
    log_w = np.zeros_like(w)
    mask = w > 0
    log_w[mask] = np.log(w[mask])

    lower, r, iterations, converged = _ba_iterate(w, log_w, tol * _LN2,
                                                  int(max_iter))
    return CapacityResult(
        capacity_bits=max(lower / _LN2, 0.0),
        optimal_input=Pmf(r),
        iterations=iterations,
        converged=bool(converged),
    )


def approx_capacity(tensor: CausalTensor, tol: float = 1e-9,
                    max_iter: int = 10_000):
    """Sub-channel-weighted capacity of a multi-channel tensor.

    Returns ``(gamma_tilde_bits, per_subchannel)`` where the list holds one
    :class:`CapacityResult` per sub-channel and ``None`` for sub-channels
    with zero weight, which are skipped.

    When the tensor carries ``context_input``, the per-sub-channel
    maximization only runs over input words that were actually observed in
    that sub-channel.  Estimated tensors fill never-seen rows with a
    uniform placeholder, and letting the input optimizer put mass on
    placeholder rows would manufacture capacity out of thin air; for a
    deterministic source half the input words may be impossible, so this
    is not a corner case.  The ``optimal_input`` then ranges over the
    observed words only.
    """
    per: list[CapacityResult | None] = []
    gamma = 0.0
    for g in range(tensor.n_subchannels):
        weight = float(tensor.subchannel_weights[g])
        if weight == 0.0:
            per.append(None)
            continue
        matrix = tensor.entries[g]
        if tensor.context_input is not None:
            matrix = matrix[tensor.context_input[g] > 0.0]
            if matrix.shape[0] == 0:
                per.append(None)
                continue
        res = blahut_arimoto(matrix, tol=tol, max_iter=max_iter)
        per.append(res)
        gamma += weight * res.capacity_bits
    return gamma, per
