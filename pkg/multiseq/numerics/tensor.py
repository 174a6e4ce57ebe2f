"""Dense tensors and the operation tape used for reverse-mode gradients."""

from __future__ import annotations

import itertools
import logging
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Optional, Union

import numpy as np

from multiseq.errors import UsageError

if TYPE_CHECKING:
    from multiseq.numerics.ops import OpKind

logger = logging.getLogger(__name__)

_DTYPES = {32: np.float32, 64: np.float64}
_precision: ContextVar[int] = ContextVar("multiseq_precision", default=32)
_active_tape: ContextVar[Optional[Tape]] = ContextVar("multiseq_tape", default=None)
_ids = itertools.count()

ArrayLike = Union[np.ndarray, float, int, Sequence[Any]]


def default_dtype() -> type[np.floating]:
    """Scalar type new tensors are created with."""
    return _DTYPES[_precision.get()]


@contextmanager
def precision(bits: int) -> Iterator[None]:
    """Switch the default scalar width (32 or 64) inside a ``with`` block."""
    if bits not in _DTYPES:
        msg = f"precision must be 32 or 64, got {bits}"
        raise UsageError(msg)
    token = _precision.set(bits)
    try:
        yield
    finally:
        _precision.reset(token)


def active_tape() -> Optional[Tape]:
    return _active_tape.get()


class Tensor:
    """A dense array with an identity on the tape.

    Leaves created with ``requires_grad=True`` are the parameters gradients are
    taken against. Results of recorded operations inherit the flag from their
    inputs.
    """

    __slots__ = ("data", "id", "name", "requires_grad")

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: Optional[str] = None,
        dtype: Optional[type[np.floating]] = None,
    ) -> None:
        self.data = np.array(data, dtype=dtype or default_dtype())
        self.id = next(_ids)
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            msg = f"item() needs a single-element tensor, got shape {self.shape}"
            raise UsageError(msg)
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{label})"

    def __add__(self, other: Tensor) -> Tensor:
        from multiseq.numerics import ops

        return ops.add(self, other)

    def __sub__(self, other: Tensor) -> Tensor:
        from multiseq.numerics import ops

        return ops.sub(self, other)

    def __mul__(self, other: Tensor) -> Tensor:
        from multiseq.numerics import ops

        return ops.mul(self, other)

    def __matmul__(self, other: Tensor) -> Tensor:
        from multiseq.numerics import ops

        return ops.matmul(self, other)


def constant(data: ArrayLike) -> Tensor:
    """Tensor that never receives a gradient (masks, image features, biases of zero)."""
    return Tensor(data, requires_grad=False)


@dataclass
class Record:
    """One executed operation: its kind, operands, result and static attributes."""

    kind: OpKind
    inputs: tuple[Tensor, ...]
    output: Tensor
    attrs: dict[str, Any] = field(default_factory=dict)


class Tape:
    """Ordered record of differentiable operations.

    Operations are recorded only while the tape is active (inside its ``with``
    block) and only when at least one operand requires a gradient, so forward
    passes outside a tape run in inference mode.
    """

    def __init__(self) -> None:
        self.records: list[Record] = []
        self._token: Any = None

    def __enter__(self) -> Tape:
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc: object) -> None:
        _active_tape.reset(self._token)
        self._token = None

    def __len__(self) -> int:
        return len(self.records)

    def record(self, entry: Record) -> None:
        self.records.append(entry)

    def backward(self, loss: Tensor) -> dict[int, np.ndarray]:
        """Gradients of ``loss`` keyed by tensor id, accumulated over shared uses."""
        if loss.size != 1:
            msg = f"loss must be a scalar, got shape {loss.shape}"
            raise UsageError(msg)
        if not loss.requires_grad:
            msg = "loss does not depend on any parameter recorded on this tape"
            raise UsageError(msg)

        grads: dict[int, np.ndarray] = {loss.id: np.ones_like(loss.data)}
        for entry in reversed(self.records):
            upstream = grads.pop(entry.output.id, None)
            if upstream is None:
                continue
            operands = [t.data for t in entry.inputs]
            partials = entry.kind.vjp(upstream, operands, entry.output.data, entry.attrs)
            for tensor, partial in zip(entry.inputs, partials):
                if partial is None or not tensor.requires_grad:
                    continue
                if tensor.id in grads:
                    grads[tensor.id] = grads[tensor.id] + partial
                else:
                    grads[tensor.id] = partial
        logger.debug("backward over %d records", len(self.records))
        return grads

    def gradient(self, loss: Tensor, params: Sequence[Tensor]) -> list[np.ndarray]:
        """Gradient for each of ``params``; parameters the loss never touched get zeros."""
        grads = self.backward(loss)
        out = []
        for param in params:
            grad = grads.get(param.id)
            out.append(np.zeros_like(param.data) if grad is None else grad.astype(param.data.dtype))
        return out
