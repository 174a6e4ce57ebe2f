"""Adam optimizer and the explicit L2 penalty term."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from multiseq.errors import DimensionError, UsageError
from multiseq.numerics import ops
from multiseq.numerics.tensor import Tensor


@dataclass
class AdamState:
    """Moment estimates and step counter for one parameter list.

    Moments are allocated on the first update and matched to the parameters by
    position, so the same parameter order must be passed on every step.
    """

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first_moments: list[np.ndarray] = field(default_factory=list)
    second_moments: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.learning_rate < 0:
            msg = f"learning rate must be >= 0, got {self.learning_rate}"
            raise UsageError(msg)
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            msg = f"betas must lie in [0, 1), got {self.beta1}, {self.beta2}"
            raise UsageError(msg)


def adam_step(params: Sequence[Tensor], grads: Sequence[np.ndarray], state: AdamState) -> None:
    """Apply one bias-corrected Adam update to ``params`` in place."""
    if len(params) != len(grads):
        msg = f"adam_step: {len(params)} parameters but {len(grads)} gradients"
        raise DimensionError(msg)
    if not state.first_moments:
        state.first_moments = [np.zeros_like(p.data, dtype=np.float64) for p in params]
        state.second_moments = [np.zeros_like(p.data, dtype=np.float64) for p in params]
    elif len(state.first_moments) != len(params):
        msg = f"adam_step: state tracks {len(state.first_moments)} parameters, got {len(params)}"
        raise DimensionError(msg)

    for param, grad, m in zip(params, grads, state.first_moments):
        if param.shape != np.shape(grad) or m.shape != param.shape:
            label = param.name or param.id
            msg = f"adam_step: parameter {label} {param.shape} vs gradient {np.shape(grad)}"
            raise DimensionError(msg)

    state.step += 1
    t = state.step
    correction1 = 1.0 - state.beta1**t
    correction2 = 1.0 - state.beta2**t
    for param, grad, m, v in zip(params, grads, state.first_moments, state.second_moments):
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(grad)
        update = state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        param.data -= update.astype(param.data.dtype)


def l2_penalty(params: Sequence[Tensor], coefficient: float) -> Tensor:
    """``coefficient`` times the sum of squared entries of every parameter, on the tape."""
    if coefficient < 0:
        msg = f"l2 coefficient must be >= 0, got {coefficient}"
        raise UsageError(msg)
    total = None
    for param in params:
        term = ops.sum(ops.mul(param, param))
        total = term if total is None else ops.add(total, term)
    if total is None:
        return Tensor(0.0)
    return ops.scale(total, coefficient)
