"""Seeded random streams and dropout masks."""

from __future__ import annotations

from collections.abc import Sequence
from typing import Union

import numpy as np

from multiseq.errors import UsageError
from multiseq.numerics.tensor import Tensor, default_dtype

Seed = Union[int, Sequence[int], np.random.Generator]


def make_rng(seed: Seed) -> np.random.Generator:
    """PCG64 generator for an int seed or a tuple of ints (e.g. ``(seed, step, site)``)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def dropout_mask(shape: Sequence[int], rate: float, seed: Seed) -> Tensor:
    """Inverted dropout mask: 0 with probability ``rate``, else ``1 / (1 - rate)``."""
    if not 0 <= rate < 1:
        msg = f"dropout rate must be in [0, 1), got {rate}"
        raise UsageError(msg)
    dtype = default_dtype()
    if rate == 0:
        return Tensor(np.ones(tuple(shape), dtype=dtype))
    keep = make_rng(seed).random(tuple(shape)) >= rate
    return Tensor(keep.astype(dtype) / dtype(1.0 - rate))
