"""Finite-difference verification of tape gradients."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from typing import Callable, Optional

import numpy as np

from multiseq.numerics.rng import make_rng
from multiseq.numerics.tensor import Tape, Tensor

logger = logging.getLogger(__name__)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """``|a - n| / max(|a| + |n|, tiny)`` over the flattened arrays."""
    diff = float(np.linalg.norm(np.ravel(analytic) - np.ravel(numeric)))
    scale = float(np.linalg.norm(np.ravel(analytic)) + np.linalg.norm(np.ravel(numeric)))
    return diff / max(scale, np.finfo(np.float64).tiny)


def gradient_check(
    fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    eps: float = 1e-5,
    max_entries: Optional[int] = None,
    seed: int = 0,
) -> float:
    """Worst relative error between tape gradients and central differences.

    ``fn`` must rebuild the scalar loss from ``params`` on every call and be
    deterministic. ``max_entries`` limits the checked entries per parameter to a
    seeded random subset.
    """
    with Tape() as tape:
        loss = fn()
    analytic = tape.gradient(loss, params)
    rng = make_rng(seed)

    worst = 0.0
    for param, grad in zip(params, analytic):
        flat = param.data.reshape(-1)
        indices = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            indices = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        numeric = np.empty(len(indices), dtype=np.float64)
        for k, index in enumerate(indices):
            original = flat[index]
            flat[index] = original + eps
            upper = float(np.sum(fn().data, dtype=np.float64))
            flat[index] = original - eps
            lower = float(np.sum(fn().data, dtype=np.float64))
            flat[index] = original
            numeric[k] = (upper - lower) / (2.0 * eps)
        error = relative_error(grad.reshape(-1)[indices], numeric)
        logger.debug("gradient check %s: relative error %.3e", param.name or param.id, error)
        worst = max(worst, error)
    return worst
