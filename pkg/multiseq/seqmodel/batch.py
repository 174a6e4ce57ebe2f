"""Padded training batches."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Optional

import numpy as np

from multiseq.errors import UsageError
from multiseq.textproc.vocab import EOS_ID, PAD_ID


def pad_ids(rows: Sequence[Sequence[int]], pad_id: int = PAD_ID) -> np.ndarray:
    """Right-pad id lists into an ``(N, max_len)`` int64 matrix."""
    width = max((len(row) for row in rows), default=0)
    out = np.full((len(rows), width), pad_id, dtype=np.int64)
    for index, row in enumerate(rows):
        out[index, : len(row)] = row
    return out


@dataclass
class Batch:
    """One minibatch: padded ids per encoder, padded EOS-terminated targets, optional image rows."""

    sources: list[np.ndarray]
    targets: np.ndarray
    images: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        sizes = {len(s) for s in self.sources} | {len(self.targets)}
        if self.images is not None:
            sizes.add(len(self.images))
        if len(sizes) != 1:
            msg = f"batch streams disagree on the number of examples: {sorted(sizes)}"
            raise UsageError(msg)

    @property
    def size(self) -> int:
        return len(self.targets)

    @property
    def target_tokens(self) -> int:
        return int((self.targets != PAD_ID).sum())

    @classmethod
    def from_sequences(
        cls,
        sources: Sequence[Sequence[Sequence[int]]],
        targets: Sequence[Sequence[int]],
        images: Optional[np.ndarray] = None,
        append_eos: bool = True,
    ) -> Batch:
        """Build a batch from id lists; ``sources[i][j]`` is example ``j`` of encoder ``i``."""
        rows = [[*t, EOS_ID] if append_eos else list(t) for t in targets]
        return cls([pad_ids(stream) for stream in sources], pad_ids(rows), images)
