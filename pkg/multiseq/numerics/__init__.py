"""Dense tensors with reverse-mode differentiation, Adam and dropout."""

from multiseq.numerics import ops
from multiseq.numerics.gradcheck import gradient_check, relative_error
from multiseq.numerics.ops import OpKind, forward
from multiseq.numerics.optim import AdamState, adam_step, l2_penalty
from multiseq.numerics.rng import dropout_mask, make_rng
from multiseq.numerics.tensor import Tape, Tensor, constant, default_dtype, precision

__all__ = [
    "AdamState",
    "OpKind",
    "Tape",
    "Tensor",
    "adam_step",
    "constant",
    "default_dtype",
    "dropout_mask",
    "forward",
    "gradient_check",
    "l2_penalty",
    "make_rng",
    "ops",
    "precision",
    "relative_error",
]
