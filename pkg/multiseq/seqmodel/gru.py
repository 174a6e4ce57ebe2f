"""Gated recurrent unit cell and masked sequence runner."""

from __future__ import annotations

from typing import Optional

from multiseq.numerics import ops
from multiseq.numerics.tensor import Tensor
from multiseq.seqmodel.params import GRUWeights


def gru_cell(x: Tensor, h: Tensor, weights: GRUWeights) -> Tensor:
    """One GRU step on a batch.

    ``z, r = sigmoid(x W_zr + h U_zr + b_zr)``,
    ``c = tanh(x W_c + (r * h) U_c + b_c)``,
    ``h' = h + z * (c - h)`` (equivalently ``(1 - z) h + z c``).
    """
    hidden = weights.hidden_dim
    projected = ops.add(ops.matmul(x, weights.input), weights.bias)
    gates = ops.sigmoid(
        ops.add(
            ops.slice_last(projected, 0, 2 * hidden),
            ops.matmul(h, weights.recurrent_gates),
        )
    )
    update = ops.slice_last(gates, 0, hidden)
    reset = ops.slice_last(gates, hidden, 2 * hidden)
    candidate = ops.tanh(
        ops.add(
            ops.slice_last(projected, 2 * hidden, 3 * hidden),
            ops.matmul(ops.mul(reset, h), weights.recurrent_candidate),
        )
    )
    return ops.add(h, ops.mul(update, ops.sub(candidate, h)))


def masked_update(previous: Tensor, proposed: Tensor, mask: Optional[Tensor]) -> Tensor:
    """Keep ``previous`` on rows whose mask entry is 0."""
    if mask is None:
        return proposed
    return ops.add(previous, ops.mul(mask, ops.sub(proposed, previous)))
