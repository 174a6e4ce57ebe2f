"""Differentiable operation kinds.

Each kind bundles a shape check, a forward rule and a vector-Jacobian product.
:func:`forward` runs a kind by name; the module-level helpers (``matmul``,
``tanh``, ...) are the spellings the model code uses.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any, Callable, Optional, Union

import numpy as np

from multiseq.errors import DimensionError, NumericError, UsageError, VocabularyError
from multiseq.numerics.tensor import Record, Tensor, active_tape

logger = logging.getLogger(__name__)

Arrays = Sequence[np.ndarray]
Attrs = dict[str, Any]
Grads = tuple[Optional[np.ndarray], ...]


@dataclass(frozen=True)
class OpKind:
    name: str
    forward: Callable[[Arrays, Attrs], np.ndarray]
    vjp: Callable[[np.ndarray, Arrays, np.ndarray, Attrs], Grads]
    validate: Callable[[Arrays, Attrs], None]
    arity: Optional[int] = None


REGISTRY: dict[str, OpKind] = {}


def _register(kind: OpKind) -> OpKind:
    REGISTRY[kind.name] = kind
    return kind


def _shape_error(kind: str, *shapes: tuple[int, ...]) -> DimensionError:
    listed = ", ".join(str(s) for s in shapes)
    msg = f"{kind}: incompatible shapes {listed}"
    return DimensionError(msg)


def sum_to_shape(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a broadcast gradient back to the operand's shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _no_check(_arrays: Arrays, _attrs: Attrs) -> None:
    return None


def _check_broadcast(name: str) -> Callable[[Arrays, Attrs], None]:
    def check(arrays: Arrays, _attrs: Attrs) -> None:
        try:
            np.broadcast_shapes(arrays[0].shape, arrays[1].shape)
        except ValueError:
            raise _shape_error(name, arrays[0].shape, arrays[1].shape) from None

    return check


# matmul


def _matmul_check(arrays: Arrays, _attrs: Attrs) -> None:
    a, b = arrays
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:  # noqa: PLR2004
        raise _shape_error("matmul", a.shape, b.shape)
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise _shape_error("matmul", a.shape, b.shape) from None


def _matmul_vjp(g: np.ndarray, arrays: Arrays, _out: np.ndarray, _attrs: Attrs) -> Grads:
    a, b = arrays
    ga = g @ np.swapaxes(b, -1, -2)
    gb = np.swapaxes(a, -1, -2) @ g
    return sum_to_shape(ga, a.shape), sum_to_shape(gb, b.shape)


_register(
    OpKind("matmul", lambda x, _: x[0] @ x[1], _matmul_vjp, _matmul_check, arity=2)
)


# elementwise binary


def _add_vjp(g: np.ndarray, arrays: Arrays, _out: np.ndarray, _attrs: Attrs) -> Grads:
    return sum_to_shape(g, arrays[0].shape), sum_to_shape(g, arrays[1].shape)


def _sub_vjp(g: np.ndarray, arrays: Arrays, _out: np.ndarray, _attrs: Attrs) -> Grads:
    return sum_to_shape(g, arrays[0].shape), sum_to_shape(-g, arrays[1].shape)


def _mul_vjp(g: np.ndarray, arrays: Arrays, _out: np.ndarray, _attrs: Attrs) -> Grads:
    a, b = arrays
    return sum_to_shape(g * b, a.shape), sum_to_shape(g * a, b.shape)


_register(OpKind("add", lambda x, _: x[0] + x[1], _add_vjp, _check_broadcast("add"), arity=2))
_register(OpKind("sub", lambda x, _: x[0] - x[1], _sub_vjp, _check_broadcast("sub"), arity=2))
_register(OpKind("mul", lambda x, _: x[0] * x[1], _mul_vjp, _check_broadcast("mul"), arity=2))


# elementwise unary


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


_register(
    OpKind(
        "tanh",
        lambda x, _: np.tanh(x[0]),
        lambda g, _x, y, _a: (g * (1.0 - y * y),),
        _no_check,
        arity=1,
    )
)
_register(
    OpKind(
        "sigmoid",
        lambda x, _: _sigmoid(x[0]),
        lambda g, _x, y, _a: (g * y * (1.0 - y),),
        _no_check,
        arity=1,
    )
)
_register(
    OpKind(
        "scale",
        lambda x, a: x[0] * np.asarray(a["factor"], dtype=x[0].dtype),
        lambda g, _x, _y, a: (g * a["factor"],),
        _no_check,
        arity=1,
    )
)


# normalizers over the last axis


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = np.exp(x - x.max(axis=-1, keepdims=True))
    return shifted / shifted.sum(axis=-1, keepdims=True)


def _log_softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _softmax_vjp(g: np.ndarray, _x: Arrays, y: np.ndarray, _attrs: Attrs) -> Grads:
    return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)


def _log_softmax_vjp(g: np.ndarray, _x: Arrays, y: np.ndarray, _attrs: Attrs) -> Grads:
    return (g - np.exp(y) * g.sum(axis=-1, keepdims=True),)


def _needs_axis(name: str) -> Callable[[Arrays, Attrs], None]:
    def check(arrays: Arrays, _attrs: Attrs) -> None:
        if arrays[0].ndim < 1:
            raise _shape_error(name, arrays[0].shape)

    return check


_register(
    OpKind("softmax", lambda x, _: _softmax(x[0]), _softmax_vjp, _needs_axis("softmax"), 1)
)
_register(
    OpKind(
        "log_softmax",
        lambda x, _: _log_softmax(x[0]),
        _log_softmax_vjp,
        _needs_axis("log_softmax"),
        1,
    )
)


# structural


def _concat_check(arrays: Arrays, attrs: Attrs) -> None:
    axis = attrs["axis"]
    first = arrays[0]
    for other in arrays[1:]:
        if other.ndim != first.ndim:
            raise _shape_error("concat", *(a.shape for a in arrays))
        left = np.delete(np.array(first.shape), axis)
        right = np.delete(np.array(other.shape), axis)
        if not np.array_equal(left, right):
            raise _shape_error("concat", *(a.shape for a in arrays))


def _concat_vjp(g: np.ndarray, arrays: Arrays, _out: np.ndarray, attrs: Attrs) -> Grads:
    bounds = np.cumsum([a.shape[attrs["axis"]] for a in arrays])[:-1]
    return tuple(np.split(g, bounds, axis=attrs["axis"]))


_register(
    OpKind(
        "concat",
        lambda x, a: np.concatenate(list(x), axis=a["axis"]),
        _concat_vjp,
        _concat_check,
    )
)


def _embedding_check(arrays: Arrays, attrs: Attrs) -> None:
    table = arrays[0]
    ids = attrs["ids"]
    if table.ndim != 2:  # noqa: PLR2004
        raise _shape_error("embedding", table.shape)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        msg = f"embedding: token id out of range for vocabulary of size {table.shape[0]}"
        raise VocabularyError(msg)


def _embedding_vjp(g: np.ndarray, arrays: Arrays, _out: np.ndarray, attrs: Attrs) -> Grads:
    grad = np.zeros_like(arrays[0])
    np.add.at(grad, attrs["ids"], g)
    return (grad,)


_register(
    OpKind(
        "embedding",
        lambda x, a: x[0][a["ids"]],
        _embedding_vjp,
        _embedding_check,
        arity=1,
    )
)


def _select_check(arrays: Arrays, attrs: Attrs) -> None:
    x = arrays[0]
    ids = attrs["ids"]
    if x.ndim < 1 or ids.shape != x.shape[:-1]:
        raise _shape_error("select", x.shape, ids.shape)
    if ids.size and (ids.min() < 0 or ids.max() >= x.shape[-1]):
        msg = f"select: index out of range for last axis of size {x.shape[-1]}"
        raise VocabularyError(msg)


def _select_forward(arrays: Arrays, attrs: Attrs) -> np.ndarray:
    picked = np.take_along_axis(arrays[0], attrs["ids"][..., None], axis=-1)
    return picked[..., 0]


def _select_vjp(g: np.ndarray, arrays: Arrays, _out: np.ndarray, attrs: Attrs) -> Grads:
    grad = np.zeros_like(arrays[0])
    np.put_along_axis(grad, attrs["ids"][..., None], g[..., None], axis=-1)
    return (grad,)


_register(OpKind("select", _select_forward, _select_vjp, _select_check, arity=1))


def _sum_forward(arrays: Arrays, attrs: Attrs) -> np.ndarray:
    return np.asarray(arrays[0].sum(axis=attrs["axis"]), dtype=arrays[0].dtype)


def _sum_vjp(g: np.ndarray, arrays: Arrays, _out: np.ndarray, attrs: Attrs) -> Grads:
    shape = arrays[0].shape
    if attrs["axis"] is not None:
        g = np.expand_dims(g, attrs["axis"])
    return (np.broadcast_to(g, shape).copy(),)


def _sum_check(arrays: Arrays, attrs: Attrs) -> None:
    axis = attrs["axis"]
    if axis is not None and not -arrays[0].ndim <= axis < arrays[0].ndim:
        raise _shape_error("sum", arrays[0].shape)


_register(OpKind("sum", _sum_forward, _sum_vjp, _sum_check, arity=1))


def _slice_check(arrays: Arrays, attrs: Attrs) -> None:
    width = arrays[0].shape[-1] if arrays[0].ndim else 0
    if not 0 <= attrs["start"] < attrs["stop"] <= width:
        raise _shape_error("slice", arrays[0].shape)


def _slice_vjp(g: np.ndarray, arrays: Arrays, _out: np.ndarray, attrs: Attrs) -> Grads:
    grad = np.zeros_like(arrays[0])
    grad[..., attrs["start"] : attrs["stop"]] = g
    return (grad,)


_register(
    OpKind(
        "slice",
        lambda x, a: x[0][..., a["start"] : a["stop"]],
        _slice_vjp,
        _slice_check,
        arity=1,
    )
)


def _take_check(arrays: Arrays, attrs: Attrs) -> None:
    x = arrays[0]
    axis = attrs["axis"]
    if not -x.ndim <= axis < x.ndim or not 0 <= attrs["index"] < x.shape[axis]:
        raise _shape_error("take", x.shape)


def _take_vjp(g: np.ndarray, arrays: Arrays, _out: np.ndarray, attrs: Attrs) -> Grads:
    grad = np.zeros_like(arrays[0])
    view = np.moveaxis(grad, attrs["axis"], 0)
    view[attrs["index"]] = g
    return (grad,)


_register(
    OpKind(
        "take",
        lambda x, a: np.take(x[0], a["index"], axis=a["axis"]),
        _take_vjp,
        _take_check,
        arity=1,
    )
)


def _reshape_check(arrays: Arrays, attrs: Attrs) -> None:
    if int(np.prod(attrs["shape"])) != arrays[0].size:
        raise _shape_error("reshape", arrays[0].shape, tuple(attrs["shape"]))


_register(
    OpKind(
        "reshape",
        lambda x, a: x[0].reshape(a["shape"]),
        lambda g, x, _y, _a: (g.reshape(x[0].shape),),
        _reshape_check,
        arity=1,
    )
)


def forward(kind: Union[str, OpKind], inputs: Sequence[Tensor], **attrs: Any) -> Tensor:
    """Evaluate one operation and record it on the active tape.

    Raises:
        DimensionError: operand shapes do not fit the kind.
        NumericError: the result contains NaN or infinity.
    """
    op = REGISTRY.get(kind) if isinstance(kind, str) else kind
    if op is None:
        msg = f"unknown operation kind {kind!r}"
        raise UsageError(msg)
    if op.arity is not None and len(inputs) != op.arity:
        msg = f"{op.name} takes {op.arity} operand(s), got {len(inputs)}"
        raise UsageError(msg)
    if not inputs:
        msg = f"{op.name} needs at least one operand"
        raise UsageError(msg)

    arrays = [t.data for t in inputs]
    op.validate(arrays, attrs)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        value = op.forward(arrays, attrs)
    if not np.all(np.isfinite(value)):
        msg = f"{op.name}: non-finite values in output of shape {np.shape(value)}"
        raise NumericError(msg)

    tracked = any(t.requires_grad for t in inputs)
    out = Tensor(value, requires_grad=tracked, dtype=value.dtype.type)
    tape = active_tape()
    if tracked and tape is not None:
        tape.record(Record(op, tuple(inputs), out, attrs))
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return forward("matmul", (a, b))


def add(a: Tensor, b: Tensor) -> Tensor:
    return forward("add", (a, b))


def sub(a: Tensor, b: Tensor) -> Tensor:
    return forward("sub", (a, b))


def mul(a: Tensor, b: Tensor) -> Tensor:
    return forward("mul", (a, b))


def tanh(x: Tensor) -> Tensor:
    return forward("tanh", (x,))


def sigmoid(x: Tensor) -> Tensor:
    return forward("sigmoid", (x,))


def softmax(x: Tensor) -> Tensor:
    """Normalized exponentials over the last axis."""
    return forward("softmax", (x,))


def log_softmax(x: Tensor) -> Tensor:
    return forward("log_softmax", (x,))


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    return forward("concat", tuple(tensors), axis=axis)


def embedding(table: Tensor, ids: Union[np.ndarray, Sequence[int]]) -> Tensor:
    """Rows of ``table`` for each id; the result has shape ``ids.shape + (dim,)``."""
    return forward("embedding", (table,), ids=np.asarray(ids, dtype=np.int64))


def select(x: Tensor, ids: Union[np.ndarray, Sequence[int]]) -> Tensor:
    """Pick one entry of the last axis per row."""
    return forward("select", (x,), ids=np.asarray(ids, dtype=np.int64))


def sum(x: Tensor, axis: Optional[int] = None) -> Tensor:  # noqa: A001
    return forward("sum", (x,), axis=axis)


def scale(x: Tensor, factor: float) -> Tensor:
    return forward("scale", (x,), factor=float(factor))


def slice_last(x: Tensor, start: int, stop: int) -> Tensor:
    return forward("slice", (x,), start=int(start), stop=int(stop))


def take(x: Tensor, index: int, axis: int = 0) -> Tensor:
    """One position along ``axis``; that axis is removed from the result."""
    return forward("take", (x,), index=int(index), axis=int(axis))


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    return forward("reshape", (x,), shape=tuple(int(d) for d in shape))
